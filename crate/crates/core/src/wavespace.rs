//! Plane and evanescent waves `exp(i kappa . (x - x_E))` with complex wavevector.

use num_complex::Complex64 as c64;
use std::f64::consts::PI;

use crate::geometry::Point;

const I: c64 = c64::new(0.0, 1.0);

/// Complex 2-vector.
pub type CVec2 = [c64; 2];

/// `kappa . v` for a real vector `v` (no conjugation).
pub fn cdot(kappa: CVec2, v: Point) -> c64 {
    kappa[0] * v.x + kappa[1] * v.y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFunction {
    pub kappa: CVec2,
    pub center: Point,
    /// Wavenumber of the Helmholtz operator the wave solves.
    pub k: f64,
}

impl WaveFunction {
    pub fn new(kappa: CVec2, center: Point, k: f64) -> Self {
        let w = Self { kappa, center, k };
        debug_assert!(w.trefftz_defect() < 1e-12, "kappa . kappa != k^2 (defect {})", w.trefftz_defect());
        w
    }

    /// Plane wave `exp(i k d . (x - center))` for a real unit direction `d`.
    pub fn plane(k: f64, d: Point, center: Point) -> Self {
        Self::new([c64::from(k * d.x), c64::from(k * d.y)], center, k)
    }

    /// `|kappa . kappa - k^2| / k^2`.
    pub fn trefftz_defect(&self) -> f64 {
        let kk = self.kappa[0] * self.kappa[0] + self.kappa[1] * self.kappa[1];
        (kk - self.k * self.k).norm() / (self.k * self.k)
    }

    pub fn is_plane(&self) -> bool {
        self.kappa[0].im == 0.0 && self.kappa[1].im == 0.0
    }

    pub fn eval(&self, x: Point) -> c64 {
        (I * cdot(self.kappa, x - self.center)).exp()
    }

    pub fn grad(&self, x: Point) -> CVec2 {
        let v = self.eval(x);
        [I * self.kappa[0] * v, I * self.kappa[1] * v]
    }

    /// Factor `i kappa . n` such that `grad w . n = (i kappa . n) w`.
    pub fn normal_factor(&self, n: Point) -> c64 {
        I * cdot(self.kappa, n)
    }

    /// Largest modulus of the wavevector components, used to size quadrature.
    pub fn scale(&self) -> f64 {
        (self.kappa[0].norm_sqr() + self.kappa[1].norm_sqr()).sqrt()
    }
}

/// `p = 2q + 1` equidistributed unit directions at angles `rotation + 2 pi l / p`.
///
/// `q = 0` yields no directions: an element with zero effective plane-wave
/// degree carries no plane waves at all.
pub fn plane_wave_directions(q: usize, rotation: f64) -> Vec<Point> {
    if q == 0 {
        return Vec::new();
    }
    let p = 2 * q + 1;
    (0..p)
        .map(|l| {
            let a = rotation + 2.0 * PI * l as f64 / p as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect()
}

/// Critical angle `acos(n2 / n1)` in radians. Requires `n1 >= n2 > 0`.
pub fn critical_angle(n1: f64, n2: f64) -> f64 {
    assert!(n2 > 0.0 && n1 >= n2, "critical angle needs n1 >= n2 > 0");
    (n2 / n1).min(1.0).acos()
}

/// `2 qt` complex directions `d` with `d . d = n2^2`, decaying into `y > 0`.
///
/// The angles are `l theta_crit / (qt + 1)` for `l = 1..=qt`; each yields the
/// pair `(-n1 cos t, i s)` and `(n1 cos t, i s)` with `s = sqrt(n1^2 cos^2 t - n2^2)`.
pub fn evanescent_directions(qt: usize, n1: f64, n2: f64) -> Vec<CVec2> {
    if qt == 0 {
        return Vec::new();
    }
    assert!(n1 > n2 && n2 > 0.0, "evanescent waves need n1 > n2 > 0");
    let crit = critical_angle(n1, n2);
    let mut out = Vec::with_capacity(2 * qt);
    for l in 1..=qt {
        let t = l as f64 * crit / (qt as f64 + 1.0);
        let c = n1 * t.cos();
        let s = (c * c - n2 * n2).sqrt();
        out.push([c64::from(-c), c64::new(0.0, s)]);
        out.push([c64::from(c), c64::new(0.0, s)]);
    }
    out
}

/// `(e^z - 1) / z`, accurate for all `z`.
pub fn phi(z: c64) -> c64 {
    if z.norm() < 1e-3 {
        let mut term = c64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..12 {
            term *= z / (n as f64 + 1.0);
            sum += term;
        }
        return sum;
    }
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    let em1 = c64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin());
    em1 / z
}

/// `int_e w1 conj(w2) ds` over the segment `[a, b]`, in closed form.
pub fn edge_integral_pair(w1: &WaveFunction, w2: &WaveFunction, a: Point, b: Point) -> c64 {
    let k2c = [w2.kappa[0].conj(), w2.kappa[1].conj()];
    let c = I * cdot(w1.kappa, a - w1.center) - I * cdot(k2c, a - w2.center);
    let z = I * cdot([w1.kappa[0] - k2c[0], w1.kappa[1] - k2c[1]], b - a);
    c.exp() * phi(z) * a.dist(b)
}

/// The waves of one element: plane waves first, then evanescent waves.
#[derive(Debug, Clone)]
pub struct ElementWaveBasis {
    pub element: usize,
    pub waves: Vec<WaveFunction>,
    /// Effective plane-wave degree.
    pub q: usize,
    /// Effective evanescent degree.
    pub qt: usize,
    /// Element wavenumber.
    pub k: f64,
}

/// Parameters of the evanescent family attached to upper-subdomain elements.
#[derive(Debug, Clone, Copy)]
pub struct EvanescentParams {
    /// Base wavenumber; the waves solve the equation with `n2 * k`.
    pub k: f64,
    pub n1: f64,
    pub n2: f64,
}

impl ElementWaveBasis {
    pub fn new(
        element: usize,
        center: Point,
        k: f64,
        q: usize,
        qt: usize,
        evanescent: Option<EvanescentParams>,
        rotation: f64,
    ) -> Self {
        let mut waves: Vec<WaveFunction> =
            plane_wave_directions(q, rotation).into_iter().map(|d| WaveFunction::plane(k, d, center)).collect();
        let qt = if evanescent.is_some() { qt } else { 0 };
        if let Some(ev) = evanescent {
            for d in evanescent_directions(qt, ev.n1, ev.n2) {
                waves.push(WaveFunction::new([d[0] * ev.k, d[1] * ev.k], center, k));
            }
        }
        Self { element, waves, q, qt, k }
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn num_plane(&self) -> usize {
        if self.q == 0 {
            0
        } else {
            2 * self.q + 1
        }
    }

    /// Evaluates `sum_j c_j w_j` and its gradient at `x`.
    pub fn eval_combination(&self, coeffs: &[c64], x: Point) -> (c64, CVec2) {
        let mut v = c64::new(0.0, 0.0);
        let mut g = [c64::new(0.0, 0.0); 2];
        for (w, &c) in self.waves.iter().zip(coeffs) {
            let e = w.eval(x) * c;
            v += e;
            g[0] += I * w.kappa[0] * e;
            g[1] += I * w.kappa[1] * e;
        }
        (v, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_directions() {
        let d = plane_wave_directions(1, 0.0);
        assert_eq!(d.len(), 3);
        assert!((d[1].x + 0.5).abs() < 1e-15 && (d[1].y - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(plane_wave_directions(0, 0.0).is_empty());
    }

    #[test]
    fn thirteen_directions_are_equally_spaced() {
        let d = plane_wave_directions(6, 0.0);
        assert_eq!(d.len(), 13);
        let step = 2.0 * PI / 13.0;
        for i in 0..13 {
            assert!((d[i].norm() - 1.0).abs() < 1e-15);
            let c = d[i].dot(d[(i + 1) % 13]);
            assert!((c - step.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn evanescent_directions_for_one_angle() {
        let d = evanescent_directions(1, 2.0, 1.0);
        assert_eq!(d.len(), 2);
        let s3 = 3f64.sqrt();
        assert!((d[0][0] - c64::from(-s3)).norm() < 1e-14);
        assert!((d[1][0] - c64::from(s3)).norm() < 1e-14);
        assert!((d[0][1] - c64::new(0.0, 2f64.sqrt())).norm() < 1e-14);
        for v in &d {
            assert!((v[0] * v[0] + v[1] * v[1] - 1.0).norm() < 1e-14);
        }
        assert!(evanescent_directions(0, 2.0, 1.0).is_empty());
    }

    #[test]
    fn evanescent_wave_decays_upwards() {
        let d = evanescent_directions(1, 2.0, 1.0)[0];
        let w = WaveFunction::new([d[0] * 5.0, d[1] * 5.0], Point::default(), 5.0);
        for y in [0.1, 0.4, 0.9] {
            let m = w.eval(Point::new(0.3, y)).norm();
            assert!((m.ln() + 5.0 * 2f64.sqrt() * y).abs() < 1e-13);
        }
    }

    #[test]
    fn phi_branches_agree_at_crossover() {
        for arg in [0.0, 0.7, 2.0, -2.5] {
            let dir = c64::from_polar(1.0, arg);
            let a = phi(dir * 0.999e-3);
            let b = phi(dir * 1.001e-3);
            assert!((a - b).norm() < 2e-6);
            let z = dir * 1.001e-3;
            assert!((b - (z.exp() - 1.0) / z).norm() < 1e-12);
        }
        assert_eq!(phi(c64::new(0.0, 0.0)), c64::new(1.0, 0.0));
    }

    #[test]
    fn unit_modulus_plane_wave_integrates_to_length() {
        let w = WaveFunction::plane(7.0, Point::new(0.6, 0.8), Point::new(0.1, 0.2));
        let a = Point::new(-0.3, 0.1);
        let b = Point::new(0.4, 0.5);
        let v = edge_integral_pair(&w, &w, a, b);
        assert!((v - c64::from(a.dist(b))).norm() < 1e-15);
    }
}
