//! Exact reflection/transmission solution of a plane wave hitting the interface `y = 0`.

use num_complex::Complex64 as c64;
use thiserror::Error;

use crate::geometry::Point;
use crate::wavespace::CVec2;

const I: c64 = c64::new(0.0, 1.0);

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("wavenumber k = {0} must be positive")]
    Wavenumber(f64),
    #[error("refraction indices must satisfy n1 >= n2 > 0 (got n1 = {n1}, n2 = {n2})")]
    Indices { n1: f64, n2: f64 },
    #[error("incidence angle {0} rad outside (0, pi/2]")]
    Angle(f64),
}

/// Piecewise constant wavenumber `n_i k` and data for the impedance problem on `(-1, 1)^2`.
pub trait ImpedanceData: Sync {
    /// Physical wavenumber at `x` (`y < 0` lower medium, `y > 0` upper medium).
    fn wavenumber(&self, x: Point) -> f64;
    /// `grad u . n + i K u` on the boundary.
    fn datum(&self, x: Point, normal: Point) -> c64;
}

/// Incoming plane wave `exp(i k1 d . x)`, `d = (cos theta, sin theta)`, from the lower medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceProblem {
    pub k: f64,
    pub n1: f64,
    pub n2: f64,
    pub theta: f64,
}

/// `u_T = T exp(i k2 (K1 x + K2 y))`, `u_R = R exp(i k1 (x cos theta - y sin theta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub k1_dir: f64,
    pub k2_dir: c64,
    pub r: c64,
    pub t: c64,
}

impl InterfaceProblem {
    pub fn new(k: f64, n1: f64, n2: f64, theta: f64) -> Result<Self, ProblemError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(ProblemError::Wavenumber(k));
        }
        if !(n2 > 0.0 && n1 >= n2 && n1.is_finite()) {
            return Err(ProblemError::Indices { n1, n2 });
        }
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2 + 1e-15) {
            return Err(ProblemError::Angle(theta));
        }
        Ok(Self { k, n1, n2, theta })
    }

    pub fn k1(&self) -> f64 {
        self.n1 * self.k
    }

    pub fn k2(&self) -> f64 {
        self.n2 * self.k
    }

    pub fn critical_angle(&self) -> f64 {
        crate::wavespace::critical_angle(self.n1, self.n2)
    }

    pub fn coefficients(&self) -> Coefficients {
        let (k1, k2) = (self.k1(), self.k2());
        let (s, c) = self.theta.sin_cos();
        let k1_dir = k1 / k2 * c;
        let k2_dir = c64::from(1.0 - k1_dir * k1_dir).sqrt();
        // decaying branch: Im >= 0
        let k2_dir = if k2_dir.im < 0.0 { -k2_dir } else { k2_dir };
        let r = (k1 * s - k2 * k2_dir) / (k1 * s + k2 * k2_dir);
        Coefficients { k1_dir, k2_dir, r, t: 1.0 + r }
    }

    /// Exact solution and gradient. Points on `y = 0` use the lower formula.
    pub fn eval_with_grad(&self, x: Point) -> (c64, CVec2) {
        self.eval_with_grad_in(x, x.y > 0.0)
    }

    /// The formula of the lower (`upper = false`) or upper medium, continued to any `x`.
    pub fn eval_with_grad_in(&self, x: Point, upper: bool) -> (c64, CVec2) {
        let co = self.coefficients();
        let (s, c) = self.theta.sin_cos();
        if !upper {
            let k1 = self.k1();
            let ui = (I * k1 * (c * x.x + s * x.y)).exp();
            let ur = co.r * (I * k1 * (c * x.x - s * x.y)).exp();
            let gx = I * k1 * c * (ui + ur);
            let gy = I * k1 * s * (ui - ur);
            (ui + ur, [gx, gy])
        } else {
            let k2 = self.k2();
            let ut = co.t * (I * k2 * (co.k1_dir * x.x + co.k2_dir * x.y)).exp();
            (ut, [I * k2 * co.k1_dir * ut, I * k2 * co.k2_dir * ut])
        }
    }

    pub fn eval(&self, x: Point) -> c64 {
        self.eval_with_grad(x).0
    }

    pub fn grad(&self, x: Point) -> CVec2 {
        self.eval_with_grad(x).1
    }
}

impl ImpedanceData for InterfaceProblem {
    fn wavenumber(&self, x: Point) -> f64 {
        if x.y <= 0.0 {
            self.k1()
        } else {
            self.k2()
        }
    }

    fn datum(&self, x: Point, n: Point) -> c64 {
        let (u, g) = self.eval_with_grad(x);
        g[0] * n.x + g[1] * n.y + I * self.wavenumber(x) * u
    }
}

/// The same medium with zero impedance datum.
#[derive(Debug, Clone, Copy)]
pub struct Homogeneous<'a>(pub &'a InterfaceProblem);

impl ImpedanceData for Homogeneous<'_> {
    fn wavenumber(&self, x: Point) -> f64 {
        self.0.wavenumber(x)
    }

    fn datum(&self, _: Point, _: Point) -> c64 {
        c64::new(0.0, 0.0)
    }
}
