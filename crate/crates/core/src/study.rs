//! Declarative convergence studies: config, runs and CSV tables.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytic::{InterfaceProblem, ProblemError};
use crate::assembly::{self, ElementDegrees, SolveError, Solution, SolverOptions};
use crate::mesh::{self, MeshError, PolygonMesh, Subdomain};
use crate::postprocess::{self, ErrorReport, ProjectedSolution, DEFAULT_RULE_DEGREE};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("mesh {mesh}: {source}")]
    Mesh { mesh: String, source: MeshError },
    #[error("run {run} ({mesh}): {source}")]
    Solve { run: usize, mesh: String, source: SolveError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub k: f64,
    pub n1: f64,
    pub n2: f64,
    /// Incidence angle in degrees.
    pub theta_deg: f64,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<InterfaceProblem, ProblemError> {
        InterfaceProblem::new(self.k, self.n1, self.n2, self.theta_deg.to_radians())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFamily {
    Cartesian,
    GradedIso,
    GradedAniso,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub family: MeshFamily,
    /// Elements per side (cartesian) or refinement level `n` (graded).
    #[serde(default)]
    pub refinements: Vec<usize>,
    /// Grading parameter of the graded families.
    #[serde(default = "default_grading")]
    pub sigma: f64,
    /// Mesh files of the `file` family, relative to the config file.
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

fn default_grading() -> f64 {
    1.0 / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreePolicy {
    /// `q1`, `q2`, `qt2` per subdomain.
    Constant,
    /// `q = ceil(mu (n + 1))` on every element.
    UniformHp,
    /// `q = ceil(mu (layer + 1))`.
    GradedHp,
}

/// One `(q1, q2, qt2)` triple of a p-study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeTriple {
    pub q1: usize,
    pub q2: usize,
    #[serde(default)]
    pub qt2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeConfig {
    pub policy: DegreePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qt2: Option<usize>,
    /// Degree on cut elements; defaults to `max(q1, q2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_cut: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Degree triples of a p-study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<DegreeTriple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub name: String,
    /// Record wall time; off keeps the CSV byte-reproducible.
    pub timing: bool,
    /// Raster resolution of the `solve` dump (0 disables it).
    pub raster: usize,
    /// Triangle rule degree of the error quadrature.
    pub rule_degree: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), name: "study".into(), timing: false, raster: 0, rule_degree: DEFAULT_RULE_DEGREE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    pub degrees: DegreeConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self, StudyError> {
        let cfg: Self = toml::from_str(text).map_err(|e| StudyError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative mesh and output paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StudyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for f in &mut cfg.mesh.files {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: &str| Err(StudyError::Config(m.into()));
        self.problem.build()?;
        let d = &self.degrees;
        let constants = d.q1.is_some() || d.q2.is_some() || d.qt2.is_some() || d.q_cut.is_some() || !d.sweep.is_empty();
        match d.policy {
            DegreePolicy::Constant => {
                if d.mu.is_some() {
                    return bad("mu is only used by the hp policies");
                }
                if d.sweep.is_empty() && (d.q1.is_none() || d.q2.is_none()) {
                    return bad("constant policy needs q1 and q2 (or a sweep)");
                }
            }
            DegreePolicy::UniformHp | DegreePolicy::GradedHp => {
                if constants {
                    return bad("hp policies take only mu");
                }
                match d.mu {
                    Some(mu) if mu > 0.0 && mu.is_finite() => {}
                    _ => return bad("hp policies need mu > 0"),
                }
                if self.mesh.family == MeshFamily::Cartesian || self.mesh.family == MeshFamily::File {
                    return bad("hp policies need a graded mesh family");
                }
            }
        }
        if d.policy == DegreePolicy::GradedHp && self.mesh.family != MeshFamily::GradedIso {
            return bad("graded-hp degrees are only defined on graded_iso meshes");
        }
        match self.mesh.family {
            MeshFamily::File if self.mesh.files.is_empty() => return bad("file family needs files"),
            MeshFamily::File => {}
            _ if self.mesh.refinements.is_empty() => return bad("mesh.refinements is empty"),
            _ => {}
        }
        if !(self.mesh.sigma > 0.0 && self.mesh.sigma < 1.0) {
            return bad("mesh.sigma outside (0, 1)");
        }
        Ok(())
    }

    /// The config with every default written out.
    pub fn resolved_toml(&self) -> String {
        let mut c = self.clone();
        if c.degrees.policy == DegreePolicy::Constant {
            c.degrees.qt2.get_or_insert(0);
        }
        toml::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of the resolved config.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.resolved_toml().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Mesh number `i` of the refinement (or file) list with its descriptor.
    pub fn mesh_at(&self, i: usize) -> Result<(PolygonMesh, String), StudyError> {
        let (built, name) = match self.mesh.family {
            MeshFamily::File => {
                let f = &self.mesh.files[i];
                let name = format!("file:{}", f.file_name().map(|s| s.to_string_lossy()).unwrap_or_default());
                (mesh::load_mesh(f), name)
            }
            fam => {
                let r = self.mesh.refinements[i];
                match fam {
                    MeshFamily::Cartesian => (mesh::generate_cartesian(r), format!("cartesian-{r}")),
                    MeshFamily::GradedIso => (mesh::generate_graded_iso(r, self.mesh.sigma), format!("graded_iso-{r}")),
                    _ => (mesh::generate_graded_aniso(r, self.mesh.sigma), format!("graded_aniso-{r}")),
                }
            }
        };
        built.map(|m| (m, name.clone())).map_err(|source| StudyError::Mesh { mesh: name, source })
    }

    pub fn num_meshes(&self) -> usize {
        match self.mesh.family {
            MeshFamily::File => self.mesh.files.len(),
            _ => self.mesh.refinements.len(),
        }
    }

    fn constant_triple(&self) -> DegreeTriple {
        let d = &self.degrees;
        let first = d.sweep.first();
        DegreeTriple {
            q1: d.q1.or(first.map(|t| t.q1)).unwrap_or(0),
            q2: d.q2.or(first.map(|t| t.q2)).unwrap_or(0),
            qt2: d.qt2.or(first.map(|t| t.qt2)).unwrap_or(0),
        }
    }
}

/// Per-element degrees and the CSV degree descriptor of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeAssignment {
    pub degrees: Vec<ElementDegrees>,
    pub q1: usize,
    pub q2: usize,
    pub qt2: usize,
    pub mu: Option<f64>,
}

/// `ceil(mu * j)` guarded against rounding just above an integer.
pub fn hp_degree(mu: f64, j: usize) -> usize {
    (mu * j as f64 - 1e-9).ceil().max(1.0) as usize
}

/// Constant degrees per subdomain; cut elements get `q_cut` plane waves only.
pub fn constant_degrees(mesh: &PolygonMesh, t: DegreeTriple, q_cut: usize) -> Vec<ElementDegrees> {
    mesh.elements()
        .iter()
        .map(|e| match e.subdomain {
            Subdomain::Omega1 => ElementDegrees { q: t.q1, qt: 0 },
            Subdomain::Omega2 => ElementDegrees { q: t.q2, qt: t.qt2 },
            Subdomain::Cut => ElementDegrees { q: q_cut, qt: 0 },
        })
        .collect()
}

/// Degrees for `mesh` under the configured policy. `n` is the refinement level of graded meshes.
pub fn assign_degrees(cfg: &StudyConfig, mesh: &PolygonMesh, n: usize, triple: Option<DegreeTriple>) -> DegreeAssignment {
    let d = &cfg.degrees;
    match d.policy {
        DegreePolicy::Constant => {
            let t = triple.unwrap_or_else(|| cfg.constant_triple());
            let q_cut = d.q_cut.unwrap_or(t.q1.max(t.q2));
            DegreeAssignment { degrees: constant_degrees(mesh, t, q_cut), q1: t.q1, q2: t.q2, qt2: t.qt2, mu: None }
        }
        DegreePolicy::UniformHp => {
            let mu = d.mu.unwrap_or(1.0);
            let q = hp_degree(mu, n + 1);
            let degrees = vec![ElementDegrees { q, qt: 0 }; mesh.num_elements()];
            DegreeAssignment { degrees, q1: q, q2: q, qt2: 0, mu: Some(mu) }
        }
        DegreePolicy::GradedHp => {
            let mu = d.mu.unwrap_or(1.0);
            let degrees: Vec<_> = mesh.layers().iter().map(|&l| ElementDegrees { q: hp_degree(mu, l + 1), qt: 0 }).collect();
            let qmax = degrees.iter().map(|d| d.q).max().unwrap_or(0);
            DegreeAssignment { degrees, q1: qmax, q2: qmax, qt2: 0, mu: Some(mu) }
        }
    }
}

/// One row of a study table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub mesh: String,
    pub h: f64,
    pub n_layers: usize,
    pub q1: usize,
    pub q2: usize,
    pub qt2: usize,
    pub mu: Option<f64>,
    pub dofs_raw: usize,
    pub dofs_filtered: usize,
    pub err_h1_rel: f64,
    pub err_l2_rel: f64,
    pub residual: f64,
    pub seconds: f64,
}

/// Which derived columns a table carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Single,
    H,
    P,
    Hp,
}

/// Result of a study: rows plus the config they came from.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub config_hash: String,
    pub rows: Vec<RunRecord>,
}

/// Observed rate `log(e0 / e1) / log(h0 / h1)` between consecutive rows.
pub fn observed_rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Pearson correlation of `x` and `y`.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Fitted convergence rate of `err ~ h^r` (slope of `log err` against `log h`).
pub fn fitted_rate(h: &[f64], err: &[f64]) -> f64 {
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    fitted_slope(&lx, &ly)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl StudyResult {
    fn has_rates(&self) -> bool {
        self.kind == StudyKind::H && self.rows.len() > 1
    }

    /// Writes the table: a `# config_sha256=` line, the header row, one line per run.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# config_sha256={}", self.config_hash)?;
        let mut header = String::from(
            "run_id,mesh,h,n_layers,q1,q2,qt2,mu,dofs_raw,dofs_filtered,err_h1_rel,err_l2_rel,residual,seconds",
        );
        if self.has_rates() {
            header.push_str(",rate_h1,rate_l2");
        }
        if self.kind == StudyKind::Hp {
            header.push_str(",sqrt_dofs");
        }
        writeln!(w, "{header}")?;
        for (i, r) in self.rows.iter().enumerate() {
            write!(
                w,
                "{},{},{:e},{},{},{},{},{},{},{},{:e},{:e},{:e},{}",
                r.run_id,
                r.mesh,
                r.h,
                r.n_layers,
                r.q1,
                r.q2,
                r.qt2,
                r.mu.map(|m| m.to_string()).unwrap_or_default(),
                r.dofs_raw,
                r.dofs_filtered,
                r.err_h1_rel,
                r.err_l2_rel,
                r.residual,
                r.seconds
            )?;
            if self.has_rates() {
                let prev = (i > 0).then(|| &self.rows[i - 1]);
                let h1 = prev.map(|p| observed_rate(p.err_h1_rel, r.err_h1_rel, p.h, r.h));
                let l2 = prev.map(|p| observed_rate(p.err_l2_rel, r.err_l2_rel, p.h, r.h));
                write!(w, ",{},{}", fmt_opt(h1), fmt_opt(l2))?;
            }
            if self.kind == StudyKind::Hp {
                write!(w, ",{:e}", (r.dofs_filtered as f64).sqrt())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// One solve with its error report and table row.
pub struct RunOutput {
    pub mesh: PolygonMesh,
    pub solution: Solution,
    pub projected: ProjectedSolution,
    pub report: ErrorReport,
    pub record: RunRecord,
}

/// Solves on `mesh` with `degrees` and measures the errors.
pub fn run_once(
    cfg: &StudyConfig,
    run_id: usize,
    mesh: PolygonMesh,
    mesh_name: String,
    deg: DegreeAssignment,
) -> Result<RunOutput, StudyError> {
    let problem = cfg.problem.build()?;
    let start = Instant::now();
    let solution = assembly::solve(&mesh, &problem, &deg.degrees, &cfg.solver)
        .map_err(|source| StudyError::Solve { run: run_id, mesh: mesh_name.clone(), source })?;
    let projected = ProjectedSolution::new(&mesh, &solution);
    let report = postprocess::compute_errors(&mesh, &projected, &problem, cfg.output.rule_degree);
    let seconds = if cfg.output.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let record = RunRecord {
        run_id,
        mesh: mesh_name,
        h: mesh.h(),
        n_layers: mesh.num_layers(),
        q1: deg.q1,
        q2: deg.q2,
        qt2: deg.qt2,
        mu: deg.mu,
        dofs_raw: solution.dofs_raw(),
        dofs_filtered: solution.dofs_filtered(),
        err_h1_rel: report.err_h1_rel,
        err_l2_rel: report.err_l2_rel,
        residual: solution.residual,
        seconds,
    };
    Ok(RunOutput { mesh, solution, projected, report, record })
}

fn run_mesh(cfg: &StudyConfig, i: usize, triple: Option<DegreeTriple>, run_id: usize) -> Result<RunOutput, StudyError> {
    let (mesh, name) = cfg.mesh_at(i)?;
    let n = cfg.mesh.refinements.get(i).copied().unwrap_or(0);
    let deg = assign_degrees(cfg, &mesh, n, triple);
    run_once(cfg, run_id, mesh, name, deg)
}

/// Single solve on the first mesh of the list.
pub fn run_single(cfg: &StudyConfig) -> Result<(RunOutput, StudyResult), StudyError> {
    let out = run_mesh(cfg, 0, None, 0)?;
    let result = StudyResult { kind: StudyKind::Single, config_hash: cfg.hash(), rows: vec![out.record.clone()] };
    Ok((out, result))
}

/// One row per mesh of the refinement list, fixed degrees.
pub fn run_h_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    if cfg.degrees.policy != DegreePolicy::Constant {
        return Err(StudyError::Config("h-study needs the constant degree policy".into()));
    }
    let rows = (0..cfg.num_meshes()).map(|i| run_mesh(cfg, i, None, i).map(|o| o.record)).collect::<Result<_, _>>()?;
    Ok(StudyResult { kind: StudyKind::H, config_hash: cfg.hash(), rows })
}

/// One row per degree triple of `degrees.sweep` on the first mesh.
pub fn run_p_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    if cfg.degrees.policy != DegreePolicy::Constant || cfg.degrees.sweep.is_empty() {
        return Err(StudyError::Config("p-study needs the constant policy and a degree sweep".into()));
    }
    let rows = cfg
        .degrees
        .sweep
        .iter()
        .enumerate()
        .map(|(i, &t)| run_mesh(cfg, 0, Some(t), i).map(|o| o.record))
        .collect::<Result<_, _>>()?;
    Ok(StudyResult { kind: StudyKind::P, config_hash: cfg.hash(), rows })
}

/// One row per graded refinement level with hp degrees.
pub fn run_hp_study(cfg: &StudyConfig) -> Result<StudyResult, StudyError> {
    if cfg.degrees.policy == DegreePolicy::Constant {
        return Err(StudyError::Config("hp-study needs an hp degree policy".into()));
    }
    let rows = (0..cfg.num_meshes()).map(|i| run_mesh(cfg, i, None, i).map(|o| o.record)).collect::<Result<_, _>>()?;
    Ok(StudyResult { kind: StudyKind::Hp, config_hash: cfg.hash(), rows })
}

/// Writes `<name>.csv` and `<name>.resolved.toml` into the output directory.
pub fn write_outputs(cfg: &StudyConfig, result: &StudyResult) -> Result<PathBuf, StudyError> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(format!("{}.csv", cfg.output.name));
    std::fs::write(&csv, result.to_csv_string()).map_err(io_err(&csv))?;
    let echo = dir.join(format!("{}.resolved.toml", cfg.output.name));
    std::fs::write(&echo, cfg.resolved_toml()).map_err(io_err(&echo))?;
    Ok(csv)
}

/// Writes the raster dump of a single run as `<name>.raster.csv`.
pub fn write_raster(cfg: &StudyConfig, out: &RunOutput) -> Result<Option<PathBuf>, StudyError> {
    if cfg.output.raster == 0 {
        return Ok(None);
    }
    let problem = cfg.problem.build()?;
    let path = cfg.output.dir.join(format!("{}.raster.csv", cfg.output.name));
    let file = std::fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = std::io::BufWriter::new(file);
    postprocess::write_raster(&out.mesh, &out.projected, &problem, cfg.output.raster, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;
    Ok(Some(path))
}
