//! Anisotropic quasi-norms, the diagonal dilation group and the
//! parallelepipeds `E(x, t) = { y : |y_i - x_i| <= t^{a_i} }`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default residual tolerance for [`rho_quasi_norm`].
pub const RHO_TOL: f64 = 1e-12;
/// Bracketing plus bisection steps allowed before giving up.
pub const RHO_MAX_ITER: usize = 200;

/// The exponent vector `a = (a_1, ..., a_n)` with every `a_i > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Anisotropy {
    a: Vec<f64>,
    trace: f64,
    a_max: f64,
}

impl Anisotropy {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidAnisotropy("empty exponent vector".into()));
        }
        if let Some(bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidAnisotropy(format!(
                "exponents must be positive and finite, found {bad}"
            )));
        }
        let trace = a.iter().sum();
        let a_max = a.iter().cloned().fold(f64::MIN, f64::max);
        Ok(Self { a, trace, a_max })
    }

    /// `a = (1, ..., 1)` in dimension `n`.
    pub fn isotropic(n: usize) -> Self {
        Self::new(vec![1.0; n.max(1)]).expect("unit exponents are valid")
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.a
    }

    /// `|a| = a_1 + ... + a_n`, the homogeneous dimension.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Anisotropy {
    type Error = Error;
    fn try_from(a: Vec<f64>) -> Result<Self> {
        Anisotropy::new(a)
    }
}

impl From<Anisotropy> for Vec<f64> {
    fn from(a: Anisotropy) -> Self {
        a.a
    }
}

/// `|x|_a = max_i |x_i|^{1/a_i}`.
pub fn box_quasi_norm(x: &[f64], a: &Anisotropy) -> f64 {
    x.iter()
        .zip(a.exponents())
        .map(|(xi, ai)| xi.abs().powf(1.0 / ai))
        .fold(0.0, f64::max)
}

fn rho_residual(x: &[f64], a: &[f64], t: f64) -> f64 {
    x.iter()
        .zip(a)
        .map(|(xi, ai)| xi * xi * t.powf(-2.0 * ai))
        .sum::<f64>()
        - 1.0
}

/// `[x]_a`: the positive root of `sum_i x_i^2 t^{-2 a_i} = 1`, with `[0]_a = 0`.
///
/// The left side is strictly decreasing in `t`, so the root is bracketed by
/// doubling/halving from `|x|_a` and then bisected (in `log t`) until the
/// residual is within `tol`.
pub fn rho_quasi_norm(x: &[f64], a: &Anisotropy, tol: f64) -> Result<f64> {
    a.check_dim(x.len())?;
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x", "must be finite"));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let t0 = box_quasi_norm(x, a);
    let a = a.exponents();
    let fail = || Error::BracketFailure {
        point: x.to_vec(),
        iterations: RHO_MAX_ITER,
    };
    let (mut lo, mut hi) = (t0, t0);
    let mut iter = 0;
    while rho_residual(x, a, lo) < 0.0 {
        lo *= 0.5;
        iter += 1;
        if iter > RHO_MAX_ITER || lo == 0.0 {
            return Err(fail());
        }
    }
    while rho_residual(x, a, hi) > 0.0 {
        hi *= 2.0;
        iter += 1;
        if iter > RHO_MAX_ITER || !hi.is_finite() {
            return Err(fail());
        }
    }
    let mut best = (f64::INFINITY, hi);
    for _ in iter..RHO_MAX_ITER {
        let mid = (lo * hi).sqrt();
        let r = rho_residual(x, a, mid);
        if r.abs() < best.0 {
            best = (r.abs(), mid);
        }
        if r.abs() <= tol || mid <= lo || mid >= hi {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for end in [lo, hi] {
        let r = rho_residual(x, a, end).abs();
        if r < best.0 {
            best = (r, end);
        }
    }
    if best.0 <= tol {
        Ok(best.1)
    } else {
        Err(fail())
    }
}

/// The diagonal dilation `x -> (t^{a_1} x_1, ..., t^{a_n} x_n)`.
pub fn dilate_point(x: &[f64], a: &Anisotropy, t: f64) -> Vec<f64> {
    x.iter()
        .zip(a.exponents())
        .map(|(xi, ai)| t.powf(*ai) * xi)
        .collect()
}

/// `E(center, t)`, an axis-parallel box with half-widths `t^{a_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parallelepiped {
    center: Vec<f64>,
    t: f64,
    half_widths: Vec<f64>,
}

impl Parallelepiped {
    pub fn new(center: Vec<f64>, t: f64, a: &Anisotropy) -> Result<Self> {
        a.check_dim(center.len())?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("scale must be positive and finite, got {t}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("center", "must be finite"));
        }
        let half_widths = a.exponents().iter().map(|ai| t.powf(*ai)).collect();
        Ok(Self {
            center,
            t,
            half_widths,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.center)
            .zip(&self.half_widths)
            .all(|((xi, ci), hi)| (xi - ci).abs() <= *hi)
    }

    /// Closed box bounds `(lo_i, hi_i)` per axis.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.center
            .iter()
            .zip(&self.half_widths)
            .map(|(c, h)| (c - h, c + h))
            .collect()
    }

    /// `lambda^a E`: same center, scale `lambda * t`.
    pub fn scaled(&self, lambda: f64, a: &Anisotropy) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(invalid("lambda", "must be positive"));
        }
        Self::new(self.center.clone(), lambda * self.t, a)
    }

    /// `|E| = 2^n t^{|a|}`.
    pub fn measure(&self, a: &Anisotropy) -> f64 {
        2f64.powi(self.dim() as i32) * self.t.powf(a.trace())
    }
}
