//! Quadrature oracles shared by the oracle and acceptance tests.

use faer::Mat;
use nctvem::assembly::{local_matrices, Side, DEFAULT_BULK_FILTER};
use nctvem::edgebasis::{orthogonalize_filter, DEFAULT_SIGMA};
use nctvem::geometry::Point;
use nctvem::quadrature::GaussLegendre;
use nctvem::wavespace::{edge_integral_pair, ElementWaveBasis, EvanescentParams, WaveFunction};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Gauss-Legendre nodes and weights on `[a, b]`, 40 points per piece.
fn segment_rule(a: Point, b: Point, pieces: usize) -> Vec<(Point, f64)> {
    let gl = GaussLegendre::new(40);
    let h = a.dist(b) / pieces as f64;
    (0..pieces)
        .flat_map(|p| gl.unit_interval().map(move |(t, w)| (a.lerp(b, (p as f64 + t) / pieces as f64), w * h)))
        .collect()
}

/// `int_a^b f`.
fn segment_oracle(a: Point, b: Point, pieces: usize, mut f: impl FnMut(Point) -> c64) -> c64 {
    segment_rule(a, b, pieces).into_iter().map(|(x, w)| f(x) * w).sum()
}

/// Tensor Gauss rule on the triangle `(c, p, q)` through the Duffy map.
fn triangle_rule(c: Point, p: Point, q: Point, n: usize) -> Vec<(Point, f64)> {
    let gl = GaussLegendre::new(n);
    let area2 = (p - c).cross(q - c).abs();
    let mut out = Vec::with_capacity(n * n);
    for (u, wu) in gl.unit_interval() {
        for (v, wv) in gl.unit_interval() {
            out.push((c + (p - c) * (u * (1.0 - v)) + (q - c) * (u * v), wu * wv * u * area2));
        }
    }
    out
}

fn random_wave(rng: &mut impl Rng) -> WaveFunction {
    let center = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    if rng.gen_bool(0.7) {
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        WaveFunction::plane(rng.gen_range(0.5..25.0), Point::new(t.cos(), t.sin()), center)
    } else {
        let k = rng.gen_range(0.5..15.0);
        let c: f64 = rng.gen_range(1.0..2.0);
        let s = (c * c - 1.0).sqrt();
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        WaveFunction::new([c64::from(sign * c * k), c64::new(0.0, s * k)], center, k)
    }
}

/// Worst relative deviation of the closed-form edge integral over `cases` random pairs.
pub fn edge_integral_deviation(cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let w1 = random_wave(&mut rng);
        let w2 = random_wave(&mut rng);
        let a = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        // Includes nearly degenerate edges and edges parallel to the wave fronts.
        let len = 10f64.powf(rng.gen_range(-4.0..0.4));
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let b = a + Point::new(t.cos(), t.sin()) * len;
        let closed = edge_integral_pair(&w1, &w2, a, b);
        let quad = segment_oracle(a, b, 8, |x| w1.eval(x) * w2.eval(x).conj());
        let scale = segment_oracle(a, b, 8, |x| c64::from((w1.eval(x) * w2.eval(x).conj()).norm()));
        worst = worst.max((closed - quad).norm() / scale.re);
    }
    worst
}

/// Random polygon, star-shaped with respect to `center`, counter-clockwise.
fn random_polygon(rng: &mut impl Rng) -> (Vec<Point>, Point) {
    let n = rng.gen_range(3..=8);
    let r = rng.gen_range(0.15..0.8);
    let center = Point::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    // jittered equal spacing keeps every angular gap in (0.6, 1.4) * 2 pi / n, below pi
    let t0: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let angles: Vec<f64> =
        (0..n).map(|i| t0 + std::f64::consts::TAU * (i as f64 + rng.gen_range(-0.2..0.2)) / n as f64).collect();
    let pts = angles
        .iter()
        .map(|&t| center + Point::new(t.cos(), t.sin()) * (r * rng.gen_range(0.7..1.0)))
        .collect();
    (pts, center)
}

fn max_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut diff: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            diff = diff.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    diff
}

fn normwise(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            diff = diff.max((a[(i, j)] - b[(i, j)]).norm());
            scale = scale.max(b[(i, j)].norm());
        }
    }
    diff / scale
}

/// Worst relative deviations of G, D and B over `cases` random elements.
pub fn element_matrix_deviation(cases: usize) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut wg, mut wd, mut wb): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut done = 0;
    while done < cases {
        let (poly, center) = random_polygon(&mut rng);
        let k = rng.gen_range(1.0..15.0);
        let q = rng.gen_range(1..=5);
        let ev = rng.gen_bool(0.4).then_some(EvanescentParams { k, n1: 2.0, n2: 1.0 });
        let qt = if ev.is_some() { rng.gen_range(1..=2) } else { 0 };
        let basis = ElementWaveBasis::new(0, center, k, q, qt, ev, rng.gen_range(0.0..1.0));
        let waves = &basis.waves;
        let n = poly.len();
        let mut edge_bases = Vec::new();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            // a neighbour with another wavenumber contributes candidates as on the interface
            let mut cands = waves.clone();
            if rng.gen_bool(0.3) {
                let other = ElementWaveBasis::new(1, center + Point::new(0.3, 0.0), 2.0 * k, q, 0, None, 0.0);
                cands.extend(other.waves);
            }
            edge_bases.push(orthogonalize_filter(i, cands, a, b, DEFAULT_SIGMA).unwrap());
        }
        let sides: Vec<Side> = (0..n)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                let t = (b - a) * (1.0 / a.dist(b));
                Side { a, b, normal: Point::new(t.y, -t.x), basis: &edge_bases[i] }
            })
            .collect();
        let Ok(m) = local_matrices(waves, k, &sides, 1e14, DEFAULT_BULK_FILTER) else {
            continue;
        };
        done += 1;

        let nw = waves.len();
        let mut g = Mat::<c64>::zeros(nw, nw);
        for i in 0..n {
            for (x, w) in triangle_rule(center, poly[i], poly[(i + 1) % n], 30) {
                let vals: Vec<(c64, [c64; 2])> = waves.iter().map(|wv| (wv.eval(x), wv.grad(x))).collect();
                for j in 0..nw {
                    for l in 0..nw {
                        let (vl, gl) = vals[l];
                        let (vj, gj) = vals[j];
                        g[(j, l)] += (gl[0] * gj[0].conj() + gl[1] * gj[1].conj() - k * k * vl * vj.conj()) * w;
                    }
                }
            }
        }
        wg = wg.max(normwise(&m.g, &g));

        // Retained edge functions are combinations of the candidate traces with
        // coefficients up to lambda_min^-1/2, so evaluating them (in the oracle as
        // in the closed form) cancels digits. D and B are compared relative to the
        // size of the summands being combined, sum_r |c_rl| |(., nu_r)_e|.
        let np = m.d.nrows();
        let mut d = Mat::<c64>::zeros(np, nw);
        let mut b = Mat::<c64>::zeros(nw, np);
        let (mut d_scale, mut b_scale): (f64, f64) = (0.0, 0.0);
        for (s, side) in sides.iter().enumerate() {
            let h = side.a.dist(side.b);
            let eb = side.basis;
            let nodes = segment_rule(side.a, side.b, 4);
            let nu = Mat::<c64>::from_fn(nodes.len(), eb.rho(), |i, r| eb.candidates[r].eval(nodes[i].0));
            let what = &nu * &eb.coeffs;
            let val = Mat::<c64>::from_fn(nodes.len(), nw, |i, j| waves[j].eval(nodes[i].0));
            let dn = Mat::<c64>::from_fn(nodes.len(), nw, |i, j| {
                let g = waves[j].grad(nodes[i].0);
                g[0] * side.normal.x + g[1] * side.normal.y
            });
            let sum = |f: &dyn Fn(usize) -> c64| nodes.iter().enumerate().map(|(i, &(_, w))| f(i) * w).sum::<c64>();
            for j in 0..nw {
                let raw_v: Vec<f64> = (0..eb.rho()).map(|r| sum(&|i| val[(i, j)] * nu[(i, r)].conj()).norm()).collect();
                let raw_n: Vec<f64> = (0..eb.rho()).map(|r| sum(&|i| dn[(i, j)].conj() * nu[(i, r)]).norm()).collect();
                for l in 0..eb.dim() {
                    let row = m.offsets[s] + l;
                    d[(row, j)] = sum(&|i| val[(i, j)] * what[(i, l)].conj()) / h;
                    b[(j, row)] = sum(&|i| dn[(i, j)].conj() * what[(i, l)]) * h;
                    let c = |r: usize| eb.coeffs[(r, l)].norm();
                    d_scale = d_scale.max((0..eb.rho()).map(|r| c(r) * raw_v[r]).sum::<f64>() / h);
                    b_scale = b_scale.max((0..eb.rho()).map(|r| c(r) * raw_n[r]).sum::<f64>() * h);
                }
            }
        }
        wd = wd.max(max_diff(&m.d, &d) / d_scale);
        wb = wb.max(max_diff(&m.b, &b) / b_scale);
    }
    (wg, wd, wb)
}
