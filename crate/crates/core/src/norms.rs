//! Weighted Lebesgue, weak Lebesgue and weighted anisotropic Morrey norms
//! under snap quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{invalid, Result};
use crate::family::{BoxFamily, Member};
use crate::geometry::{Anisotropy, Parallelepiped};
use crate::grid::{GridFunction, SummedTable};
use crate::weights::{argmax, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyParams {
    pub p: f64,
    pub kappa: f64,
}

impl MorreyParams {
    pub fn new(p: f64, kappa: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid("p", "need 1 <= p < inf"));
        }
        if !((0.0..1.0).contains(&kappa)) {
            return Err(invalid("kappa", "need 0 <= kappa < 1"));
        }
        Ok(Self { p, kappa })
    }
}

fn twosum(values: impl Iterator<Item = f64>) -> f64 {
    f64::from(values.fold(TwoFloat::from(0.0), |acc, v| acc + v))
}

/// `(∫ |f|^p w)^{1/p}`; for `p = inf`, `max |f| w` over the centers.
pub fn lp_norm(f: &GridFunction, w: &Weight, p: f64, a: &Anisotropy) -> Result<f64> {
    let ws = w.sample(f.grid(), a)?;
    if p == f64::INFINITY {
        return Ok(f
            .values()
            .iter()
            .zip(ws.values())
            .map(|(v, w)| v.abs() * w)
            .fold(0.0, f64::max));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", "need p >= 1"));
    }
    let s = twosum(f.values().iter().zip(ws.values()).map(|(v, w)| v.abs().powf(p) * w));
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

/// `sup_t t w({|f| > t})^{1/p}`.
///
/// With `ladder = None` the sup runs over every level `v` taken by `|f|`,
/// as the limit `t -> v^-`, i.e. `v w({|f| >= v})^{1/p}`; this is the exact
/// discrete supremum. An explicit ladder uses the strict level sets.
pub fn weak_lp_norm(f: &GridFunction, w: &Weight, p: f64, a: &Anisotropy, ladder: Option<&[f64]>) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p", "need 1 <= p < inf"));
    }
    let ws = w.sample(f.grid(), a)?;
    let vol = f.grid().cell_volume();
    let mut pairs: Vec<(f64, f64)> = f
        .values()
        .iter()
        .zip(ws.values())
        .map(|(v, w)| (v.abs(), *w))
        .collect();
    match ladder {
        None => {
            pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
            let mut acc = TwoFloat::from(0.0);
            let mut best = 0.0f64;
            let mut i = 0;
            while i < pairs.len() && pairs[i].0 > 0.0 {
                let v = pairs[i].0;
                while i < pairs.len() && pairs[i].0 == v {
                    acc += pairs[i].1;
                    i += 1;
                }
                best = best.max(v * (f64::from(acc) * vol).powf(1.0 / p));
            }
            Ok(best)
        }
        Some(ts) => {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
                return Err(invalid("ladder", "levels must be positive and nonempty"));
            }
            Ok(ts
                .par_iter()
                .map(|t| {
                    let m = twosum(pairs.iter().filter(|(v, _)| v > t).map(|(_, w)| *w)) * vol;
                    t * m.powf(1.0 / p)
                })
                .reduce(|| 0.0, f64::max))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MorreyValue {
    pub value: f64,
    pub argmax: Parallelepiped,
}

/// Prefix tables of `w` and `|f|^p w` for repeated Morrey evaluations.
pub struct MorreyTables {
    w: SummedTable,
    fw: SummedTable,
    vol: f64,
    params: MorreyParams,
}

impl MorreyTables {
    pub fn new(f: &GridFunction, w: &Weight, params: MorreyParams, a: &Anisotropy) -> Result<Self> {
        let ws = w.sample(f.grid(), a)?;
        let p = params.p;
        let fw = f.zip_with(&ws, |v, w| v.abs().powf(p) * w)?;
        Ok(Self {
            w: SummedTable::of(&ws),
            fw: SummedTable::of(&fw),
            vol: f.grid().cell_volume(),
            params,
        })
    }

    /// `w(E)` on the snapped cells of `m`.
    pub fn weight_of(&self, m: &Member) -> f64 {
        self.w.sum(&m.range) * self.vol
    }

    /// `(w(E)^{-kappa} ∫_E |f|^p w)^{1/p}`.
    pub fn local(&self, m: &Member) -> f64 {
        let wf = self.fw.sum(&m.range) * self.vol;
        (wf * self.weight_of(m).powf(-self.params.kappa)).powf(1.0 / self.params.p)
    }
}

/// Per-member Morrey values, ordered like [`BoxFamily::members`].
pub fn morrey_local(f: &GridFunction, w: &Weight, params: MorreyParams, family: &BoxFamily) -> Result<(Vec<Member>, Vec<f64>)> {
    let tables = MorreyTables::new(f, w, params, &family.anisotropy)?;
    let members = family.members(f.grid())?;
    if members.is_empty() {
        return Err(invalid("family", "no member meets the grid"));
    }
    let local = members.par_iter().map(|m| tables.local(m)).collect();
    Ok((members, local))
}

/// `max_E (w(E)^{-kappa} ∫_E |f|^p w)^{1/p}` over the family.
pub fn morrey_norm(f: &GridFunction, w: &Weight, params: MorreyParams, family: &BoxFamily) -> Result<MorreyValue> {
    let (members, local) = morrey_local(f, w, params, family)?;
    let i = argmax(&local);
    Ok(MorreyValue {
        value: local[i],
        argmax: members[i].e.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{sample, Expr};
    use crate::grid::{Domain, Grid};

    fn grid1(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::new(Domain::new(vec![lo], vec![hi]).unwrap(), vec![n]).unwrap()
    }

    fn f_of(src: &str, g: &Grid) -> GridFunction {
        sample(&Expr::parse(src).unwrap(), g, &Anisotropy::isotropic(g.dim())).unwrap()
    }

    #[test]
    fn lp_examples() {
        let a = Anisotropy::isotropic(2);
        let g = Grid::new(Domain::new(vec![-1.0, 0.0], vec![2.0, 2.0]).unwrap(), vec![6, 5]).unwrap();
        let one = GridFunction::constant(g, 1.0);
        assert!((lp_norm(&one, &Weight::Constant(1.0), 1.0, &a).unwrap() - 6.0).abs() < 1e-12);
        let a1 = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 3.0, 64);
        let f = f_of("scale(2, ind(0:1))", &g);
        assert_eq!(lp_norm(&f, &Weight::Constant(1.0), f64::INFINITY, &a1).unwrap(), 2.0);
        assert!((weak_lp_norm(&f, &Weight::Constant(1.0), 1.0, &a1, None).unwrap() - 2.0).abs() < 1e-12);
        let zero = GridFunction::constant(g, 0.0);
        assert_eq!(weak_lp_norm(&zero, &Weight::Constant(1.0), 1.0, &a1, None).unwrap(), 0.0);
        assert!(lp_norm(&zero, &Weight::Constant(1.0), 0.5, &a1).is_err());
    }

    #[test]
    fn singular_lp_converges_slowly() {
        let a = Anisotropy::isotropic(1);
        let errs: Vec<f64> = [1usize << 10, 1 << 14]
            .iter()
            .map(|&n| {
                let g = grid1(0.0, 1.0, n);
                let f = f_of("powabs(-0.5)", &g);
                (lp_norm(&f, &Weight::PowerAbs(-0.25), 1.0, &a).unwrap() - 4.0).abs()
            })
            .collect();
        // O(h^{1/4}): 16x finer halves the error.
        assert!(errs[1] < errs[0] * 0.6 && errs[1] > errs[0] * 0.4, "{errs:?}");
    }

    #[test]
    fn weak_explicit_ladder_is_strict() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 3.0, 64);
        let f = f_of("scale(2, ind(0:1))", &g);
        let w = Weight::Constant(1.0);
        assert_eq!(weak_lp_norm(&f, &w, 1.0, &a, Some(&[2.0])).unwrap(), 0.0);
        assert!((weak_lp_norm(&f, &w, 1.0, &a, Some(&[1.0, 1.5])).unwrap() - 1.5).abs() < 1e-12);
        assert!(weak_lp_norm(&f, &w, 1.0, &a, Some(&[])).is_err());
    }

    #[test]
    fn morrey_examples() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 1.0, 128);
        let whole = Parallelepiped::new(vec![0.0], 1.0, &a).unwrap();
        let small = Parallelepiped::new(vec![0.5], 0.1, &a).unwrap();
        let fam = BoxFamily::explicit(&a, vec![small, whole.clone()]).unwrap();
        let one = GridFunction::constant(g.clone(), 1.0);
        let m = morrey_norm(&one, &Weight::Constant(1.0), MorreyParams::new(1.0, 0.5).unwrap(), &fam).unwrap();
        assert!((m.value - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(m.argmax, whole);
        let f = GridFunction::from_fn(g, |x| 1.0 + x[0] * x[0]).unwrap();
        let w = Weight::PowerAbs(0.5);
        let params = MorreyParams::new(2.0, 0.0).unwrap();
        let m = morrey_norm(&f, &w, params, &fam).unwrap();
        assert!((m.value - lp_norm(&f, &w, 2.0, &a).unwrap()).abs() < 1e-10);
        assert!(MorreyParams::new(1.0, 1.0).is_err());
        assert!(MorreyParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn anchored_intervals_are_scale_free() {
        // Same number of cells inside every interval (0, r): the kappa
        // exponent cancels r exactly, so the values agree to rounding.
        let a = Anisotropy::isotropic(1);
        let w = Weight::PowerAbs(-0.25);
        let params = MorreyParams::new(1.0, 1.0 / 3.0).unwrap();
        let values: Vec<f64> = (0..5)
            .map(|k| {
                let g = grid1(0.0, 1.0, 1024 << k);
                let f = f_of("ind(0:1)*powabs(-0.5)", &g);
                let r = 0.5f64.powi(k);
                let e = Parallelepiped::new(vec![r / 2.0], r / 2.0, &a).unwrap();
                morrey_norm(&f, &w, params, &BoxFamily::explicit(&a, vec![e]).unwrap()).unwrap().value
            })
            .collect();
        for v in &values {
            assert!((v / values[0] - 1.0).abs() < 1e-12, "{values:?}");
        }
        let closed = 0.75f64.powf(1.0 / 3.0) / 0.25;
        assert!(values[0] < closed && values[0] > 0.85 * closed);
    }
}
