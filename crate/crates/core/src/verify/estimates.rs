//! Estimated constants with refinement histories: operator norms on
//! Morrey spaces, the weak `(1, κ)` estimate, Fefferman–Stein, and the
//! Morrey-but-not-Lebesgue counterexample.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::suite::refine_grid;
use super::{CheckReport, HistoryEntry, Status, TestFunction, Witness};
use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::family::{BoxFamily, Member, ScaleLadder, DEFAULT_Q, DEFAULT_STRIDE};
use crate::geometry::{Anisotropy, Parallelepiped};
use crate::grid::{Domain, Grid, GridFunction, SummedTable};
use crate::norms::{lp_norm, morrey_norm, MorreyParams, MorreyTables};
use crate::operators::{maximal, weighted_maximal};
use crate::weights::{argmax, power_ap_predicate, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Centered `M` over the scale ladder.
    Centered,
    /// `M_w` over the box family.
    Weighted,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorNormConfig {
    pub op: OperatorKind,
    pub weight: Weight,
    pub params: MorreyParams,
    pub anisotropy: Anisotropy,
    #[serde(serialize_with = "ser_grid")]
    pub grid: Grid,
    /// Refinement levels, at least 2.
    pub levels: usize,
    pub stride: usize,
    pub q: f64,
    pub ladder_q: f64,
    /// Report the near/far terms of `f = f χ_{3E} + f (1 - χ_{3E})` on the
    /// argmax box.
    pub split_3e: bool,
    /// A user-supplied `r < p` for which `w ∈ A_r` is checked by the power
    /// criterion.
    pub reverse_holder_r: Option<f64>,
}

fn ser_grid<S: serde::Serializer>(g: &Grid, s: S) -> std::result::Result<S::Ok, S::Error> {
    json!({"domain": g.domain().spec_string(), "shape": g.shape()}).serialize(s)
}

impl OperatorNormConfig {
    pub fn new(op: OperatorKind, weight: Weight, params: MorreyParams, anisotropy: Anisotropy, grid: Grid) -> Self {
        Self {
            op,
            weight,
            params,
            anisotropy,
            grid,
            levels: 2,
            stride: DEFAULT_STRIDE,
            q: DEFAULT_Q,
            ladder_q: DEFAULT_Q,
            split_3e: false,
            reverse_holder_r: None,
        }
    }
}

struct Level {
    grid: Grid,
    family: BoxFamily,
    ladder: ScaleLadder,
}

fn level(base: &Grid, a: &Anisotropy, k: usize, stride: usize, q: f64, ladder_q: f64) -> Result<Level> {
    let grid = refine_grid(base, a, k)?;
    let family = BoxFamily::with_params(&grid, a, stride, q)?;
    let ladder = ScaleLadder::for_grid(&grid, a, ladder_q)?;
    Ok(Level { grid, family, ladder })
}

fn ladder_t_min(f: &BoxFamily) -> f64 {
    match &f.kind {
        crate::family::FamilyKind::Lattice { ladder, .. } => ladder.t_min,
        crate::family::FamilyKind::Explicit(b) => b.iter().map(|e| e.t()).fold(f64::INFINITY, f64::min),
    }
}

impl OperatorNormConfig {
    fn apply(&self, f: &GridFunction, lv: &Level) -> Result<GridFunction> {
        match self.op {
            OperatorKind::Centered => maximal(f, &self.anisotropy, &lv.ladder),
            OperatorKind::Weighted => weighted_maximal(f, &self.weight, &lv.family),
        }
    }

    fn norm(&self, f: &GridFunction, lv: &Level) -> Result<(f64, Option<Parallelepiped>)> {
        if self.params.kappa == 0.0 {
            Ok((lp_norm(f, &self.weight, self.params.p, &self.anisotropy)?, None))
        } else {
            let m = morrey_norm(f, &self.weight, self.params, &lv.family)?;
            Ok((m.value, Some(m.argmax)))
        }
    }
}

/// `C* = max_f ‖op f‖ / ‖f‖` in `L_{p,κ,a}(w)` (`κ = 0`: `L_p(w)`), at each
/// refinement level.
pub fn estimate_operator_norm(cfg: &OperatorNormConfig, suite: &[TestFunction]) -> Result<CheckReport> {
    let a = &cfg.anisotropy;
    if suite.is_empty() {
        return Err(invalid("suite", "need at least one test function"));
    }
    if cfg.levels < 2 {
        return Err(invalid("levels", "need at least two refinement levels"));
    }
    let name = match cfg.op {
        OperatorKind::Centered => "operator-norm-m",
        OperatorKind::Weighted => "operator-norm-mw",
    };
    let mut report = CheckReport::new(name, serde_json::to_value(cfg).unwrap_or_default());
    report.status = Status::Estimated;
    let mut all_ratios = Vec::new();
    let mut last = None;
    for k in 0..cfg.levels {
        let lv = level(&cfg.grid, a, k, cfg.stride, cfg.q, cfg.ladder_q)?;
        let mut ratios = Vec::with_capacity(suite.len());
        for (j, tf) in suite.iter().enumerate() {
            let f = tf.sample(&lv.grid, a)?;
            let (nf, _) = cfg.norm(&f, &lv)?;
            if !(nf > 0.0) {
                return Err(Error::ZeroNorm(format!("test function {j} has zero norm")));
            }
            let mf = cfg.apply(&f, &lv)?;
            let (nm, arg) = cfg.norm(&mf, &lv)?;
            ratios.push((nm / nf, arg));
        }
        let vals: Vec<f64> = ratios.iter().map(|r| r.0).collect();
        let i = argmax(&vals);
        report.history.push(HistoryEntry {
            shape: lv.grid.shape().to_vec(),
            t_min: ladder_t_min(&lv.family),
            constant: vals[i],
        });
        all_ratios.push(vals);
        last = Some((lv, i, ratios[i].1.clone()));
    }
    let (lv, i, arg) = last.expect("levels >= 2");
    report.constant = report.history.last().unwrap().constant;
    report.witness = Some(Witness {
        e: arg.clone(),
        note: Some(format!("test function {i}")),
        ..Default::default()
    });
    report.detail("ratios", &all_ratios);
    if let Some(alpha) = cfg.weight.rho_exponent(a) {
        report.detail("ap_predicate", power_ap_predicate(alpha, a, cfg.params.p));
        if let Some(r) = cfg.reverse_holder_r {
            if !(r > 1.0 && r < cfg.params.p) {
                return Err(invalid("r", "need 1 < r < p"));
            }
            report.detail("ar_predicate", power_ap_predicate(alpha, a, r));
        }
    }
    if cfg.split_3e {
        let f = suite[i].sample(&lv.grid, a)?;
        let e = match arg {
            Some(e) => e,
            None => full_box(lv.grid.domain(), a)?,
        };
        report.detail("split_3e", split_terms(cfg, &lv, &f, &e)?);
    }
    Ok(report)
}

/// Smallest parallelepiped centered at the domain center covering it.
fn full_box(d: &Domain, a: &Anisotropy) -> Result<Parallelepiped> {
    let c: Vec<f64> = (0..d.dim()).map(|i| 0.5 * (d.lo()[i] + d.hi()[i])).collect();
    let t = (0..d.dim())
        .map(|i| (0.5 * d.extent(i)).powf(1.0 / a.exponents()[i]))
        .fold(0.0, f64::max);
    Parallelepiped::new(c, t, a)
}

fn split_terms(cfg: &OperatorNormConfig, lv: &Level, f: &GridFunction, e: &Parallelepiped) -> Result<serde_json::Value> {
    let a = &cfg.anisotropy;
    let grid = &lv.grid;
    let e3 = e.scaled(3.0, a)?;
    let near_mask: Vec<bool> = (0..grid.len()).map(|i| grid.center_in(&e3, &grid.unravel(i))).collect();
    let f1 = GridFunction::new(grid.clone(), f.values().iter().zip(&near_mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect())?;
    let f2 = GridFunction::new(grid.clone(), f.values().iter().zip(&near_mask).map(|(v, m)| if *m { 0.0 } else { *v }).collect())?;
    let member = Member {
        e: e.clone(),
        range: grid.try_index_range(e)?,
    };
    let local = |g: &GridFunction| -> Result<f64> {
        Ok(MorreyTables::new(g, &cfg.weight, cfg.params, a)?.local(&member))
    };
    let total = local(&cfg.apply(f, lv)?)?;
    let near = local(&cfg.apply(&f1, lv)?)?;
    let far = local(&cfg.apply(&f2, lv)?)?;
    Ok(json!({"e": e, "total": total, "near": near, "far": far}))
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakMorreyConfig {
    pub weight: Weight,
    pub kappa: f64,
    pub anisotropy: Anisotropy,
    #[serde(serialize_with = "ser_grid")]
    pub grid: Grid,
    pub levels: usize,
    pub stride: usize,
    pub q: f64,
    pub ladder_q: f64,
    /// Levels `t`; by default `max(Mf) · 2^{-k/4}`, `k = 1..=48`.
    pub t_ladder: Option<Vec<f64>>,
}

impl WeakMorreyConfig {
    pub fn new(weight: Weight, kappa: f64, anisotropy: Anisotropy, grid: Grid) -> Self {
        Self {
            weight,
            kappa,
            anisotropy,
            grid,
            levels: 2,
            stride: DEFAULT_STRIDE,
            q: DEFAULT_Q,
            ladder_q: DEFAULT_Q,
            t_ladder: None,
        }
    }
}

fn default_levels(max: f64) -> Vec<f64> {
    (1..=48).map(|k| max * 2f64.powf(-(k as f64) / 4.0)).collect()
}

/// `C* = max_{E, t} t w({x ∈ E : Mf(x) > t}) / (‖f‖_{L_{1,κ}(w)} w(E)^κ)`.
pub fn check_weak_morrey(cfg: &WeakMorreyConfig, f: &TestFunction) -> Result<CheckReport> {
    let a = &cfg.anisotropy;
    let params = MorreyParams::new(1.0, cfg.kappa)?;
    if cfg.levels < 2 {
        return Err(invalid("levels", "need at least two refinement levels"));
    }
    let mut report = CheckReport::new("weak-morrey", serde_json::to_value(cfg).unwrap_or_default());
    report.status = Status::Estimated;
    if let Some(alpha) = cfg.weight.rho_exponent(a) {
        report.detail("a1_predicate", power_ap_predicate(alpha, a, 1.0));
    }
    for k in 0..cfg.levels {
        let lv = level(&cfg.grid, a, k, cfg.stride, cfg.q, cfg.ladder_q)?;
        let fk = f.sample(&lv.grid, a)?;
        let mf = maximal(&fk, a, &lv.ladder)?;
        let top = mf.values().iter().copied().fold(0.0, f64::max);
        let mut best = (0.0, None, None);
        if top > 0.0 {
            let norm = morrey_norm(&fk, &cfg.weight, params, &lv.family)?.value;
            if !(norm > 0.0) {
                return Err(Error::ZeroNorm("Morrey norm of f vanishes".into()));
            }
            let ws = cfg.weight.sample(&lv.grid, a)?;
            let vol = lv.grid.cell_volume();
            let tw = SummedTable::of(&ws);
            let members = lv.family.members(&lv.grid)?;
            let denom: Vec<f64> = members
                .iter()
                .map(|m| norm * (tw.sum(&m.range) * vol).powf(cfg.kappa))
                .collect();
            let ts = cfg.t_ladder.clone().unwrap_or_else(|| default_levels(top));
            for t in ts {
                let masked: Vec<f64> = mf.values().iter().zip(ws.values()).map(|(m, w)| if *m > t { *w } else { 0.0 }).collect();
                let table = SummedTable::new(&lv.grid, &masked);
                let vals: Vec<f64> = members
                    .par_iter()
                    .zip(&denom)
                    .map(|(m, d)| t * table.sum(&m.range) * vol / d)
                    .collect();
                let i = argmax(&vals);
                if vals[i] > best.0 {
                    best = (vals[i], Some(members[i].e.clone()), Some(t));
                }
            }
        }
        report.history.push(HistoryEntry {
            shape: lv.grid.shape().to_vec(),
            t_min: ladder_t_min(&lv.family),
            constant: best.0,
        });
        report.constant = best.0;
        report.witness = Some(Witness {
            e: best.1,
            t: best.2,
            ..Default::default()
        });
    }
    Ok(report)
}

/// `C* = max_t t ∫_{Mf > t} φ / ∫ |f| Mφ` at each refinement level.
pub fn fefferman_stein_constant(
    f: &TestFunction,
    phi: &TestFunction,
    a: &Anisotropy,
    base: &Grid,
    levels: usize,
    ladder_q: f64,
    t_ladder: Option<&[f64]>,
) -> Result<CheckReport> {
    if levels < 1 {
        return Err(invalid("levels", "need at least one level"));
    }
    let mut report = CheckReport::new(
        "fefferman-stein",
        json!({"f": f, "phi": phi, "a": a, "domain": base.domain().spec_string(), "shape": base.shape(), "levels": levels, "ladder_q": ladder_q, "t_ladder": t_ladder}),
    );
    report.status = Status::Estimated;
    for k in 0..levels {
        let grid = refine_grid(base, a, k)?;
        let ladder = ScaleLadder::for_grid(&grid, a, ladder_q)?;
        let fk = f.sample(&grid, a)?;
        let pk = phi.sample(&grid, a)?;
        if let Some(i) = pk.values().iter().position(|v| *v < 0.0) {
            return Err(invalid("phi", format!("negative at {:?}", grid.center_of(i))));
        }
        let mf = maximal(&fk, a, &ladder)?;
        let mphi = maximal(&pk, a, &ladder)?;
        let vol = grid.cell_volume();
        let top = mf.values().iter().copied().fold(0.0, f64::max);
        let ts: Vec<f64> = match t_ladder {
            Some(t) => t.to_vec(),
            None => default_levels(top),
        };
        let mut profile = Vec::with_capacity(ts.len());
        let mut best = (0.0f64, None);
        if top > 0.0 {
            let denom: f64 = fk.values().iter().zip(mphi.values()).map(|(x, m)| x.abs() * m).sum::<f64>() * vol;
            if !(denom > 0.0) {
                return Err(Error::ZeroNorm("∫|f| Mφ vanishes".into()));
            }
            for &t in &ts {
                let num: f64 = mf.values().iter().zip(pk.values()).filter(|(m, _)| **m > t).map(|(_, p)| *p).sum::<f64>() * vol;
                profile.push((t, t * num));
                if t * num / denom > best.0 {
                    best = (t * num / denom, Some(t));
                }
            }
            report.detail("denominator", denom);
        }
        report.detail("profile", &profile);
        report.history.push(HistoryEntry {
            shape: grid.shape().to_vec(),
            t_min: ladder.t_min,
            constant: best.0,
        });
        report.constant = best.0;
        report.witness = Some(Witness {
            t: best.1,
            ..Default::default()
        });
    }
    Ok(report)
}

/// `w = |x|^α`, `f = χ_{(0,1)} |x|^{-1/2}` on `(0,1)`: the `L_{1,κ}(w)` norm
/// with `κ = (α+1/2)/(α+1)` stays finite while `∫ |f|^{2(α+1)} w` grows by
/// `ln 2` per doubling.
pub fn counterexample_remark3(alpha: f64, shapes: &[usize]) -> Result<CheckReport> {
    if !(alpha > -0.5 && alpha < 0.0) {
        return Err(invalid("alpha", "need -1/2 < alpha < 0"));
    }
    if shapes.len() < 2 {
        return Err(invalid("shapes", "need at least two resolutions"));
    }
    let a = Anisotropy::isotropic(1);
    let kappa = (alpha + 0.5) / (alpha + 1.0);
    let params = MorreyParams::new(1.0, kappa)?;
    let w = Weight::PowerAbs(alpha);
    let q = 2.0 * (alpha + 1.0);
    let f = Expr::parse("ind(0:1)*powabs(-0.5)")?;
    let mut report = CheckReport::new(
        "remark3",
        json!({"alpha": alpha, "kappa": kappa, "shapes": shapes, "family": {"stride": DEFAULT_STRIDE, "q": DEFAULT_Q}}),
    );
    report.status = Status::Estimated;
    let mut powers = Vec::new();
    let mut argmaxes = Vec::new();
    for &n in shapes {
        let grid = Grid::new(Domain::new(vec![0.0], vec![1.0])?, vec![n])?;
        let fam = BoxFamily::default_for(&grid, &a)?;
        let fk = crate::expr::sample(&f, &grid, &a)?;
        let m = morrey_norm(&fk, &w, params, &fam)?;
        powers.push(lp_norm(&fk, &w, q, &a)?.powf(q));
        argmaxes.push(m.argmax.clone());
        report.history.push(HistoryEntry {
            shape: vec![n],
            t_min: ladder_t_min(&fam),
            constant: m.value,
        });
    }
    let closed = (alpha + 1.0).powf(kappa) / (alpha + 0.5);
    let values: Vec<f64> = report.history.iter().map(|h| h.constant).collect();
    let k = values.len();
    let finest = values[k - 1];
    let change = (finest / values[k - 2] - 1.0).abs();
    // Cell-center error of x^{α - 1/2} near 0 is O(h^{α + 1/2}).
    let order = alpha + 0.5;
    let rho = (shapes[k - 1] as f64 / shapes[k - 2] as f64).powf(order);
    let extrapolated = (rho * finest - values[k - 2]) / (rho - 1.0);
    let increments: Vec<f64> = powers.windows(2).map(|p| p[1] - p[0]).collect();
    let expected: Vec<f64> = shapes.windows(2).map(|s| (s[1] as f64 / s[0] as f64).ln()).collect();
    let increments_ok = increments
        .iter()
        .zip(&expected)
        .all(|(d, e)| (d / e - 1.0).abs() <= 0.10);
    report.constant = finest;
    report.witness = Some(Witness {
        e: argmaxes.last().cloned(),
        ..Default::default()
    });
    report.detail("closed_form", closed);
    report.detail("relative_gap", (finest / closed - 1.0).abs());
    report.detail("finest_change", change);
    report.detail("extrapolated", extrapolated);
    report.detail("power_exponent", q);
    report.detail("lp_powers", &powers);
    report.detail("increments", &increments);
    report.detail("expected_increments", &expected);
    if change >= 0.05 || !increments_ok {
        report.fail(Witness {
            e: argmaxes.last().cloned(),
            note: Some(format!("Morrey change {change}, increments {increments:?}")),
            ..Default::default()
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::new(Domain::new(vec![lo], vec![hi]).unwrap(), vec![n]).unwrap()
    }

    #[test]
    fn constant_function_has_ratio_one() {
        let a = Anisotropy::isotropic(1);
        for op in [OperatorKind::Centered, OperatorKind::Weighted] {
            let cfg = OperatorNormConfig::new(op, Weight::PowerAbs(0.5), MorreyParams::new(2.0, 0.5).unwrap(), a.clone(), grid1(-1.0, 1.0, 128));
            let r = estimate_operator_norm(&cfg, &[TestFunction::parse("const(1)").unwrap()]).unwrap();
            assert!(r.history.iter().all(|h| (h.constant - 1.0).abs() < 1e-12), "{r:?}");
            assert_eq!(r.history[1].shape, vec![256]);
        }
        let cfg = OperatorNormConfig::new(OperatorKind::Centered, Weight::Constant(1.0), MorreyParams::new(2.0, 0.0).unwrap(), a, grid1(-1.0, 1.0, 16));
        assert!(matches!(
            estimate_operator_norm(&cfg, &[TestFunction::parse("const(0)").unwrap()]),
            Err(Error::ZeroNorm(_))
        ));
        assert!(estimate_operator_norm(&cfg, &[]).is_err());
    }

    #[test]
    fn split_terms_are_reported() {
        let a = Anisotropy::isotropic(1);
        let mut cfg = OperatorNormConfig::new(OperatorKind::Centered, Weight::Constant(1.0), MorreyParams::new(2.0, 0.5).unwrap(), a, grid1(-2.0, 2.0, 256));
        cfg.split_3e = true;
        cfg.reverse_holder_r = Some(1.5);
        let r = estimate_operator_norm(&cfg, &[TestFunction::parse("ind(-1:1)").unwrap()]).unwrap();
        let s = &r.details["split_3e"];
        let (total, near, far) = (s["total"].as_f64().unwrap(), s["near"].as_f64().unwrap(), s["far"].as_f64().unwrap());
        assert!(total <= near + far + 1e-12);
        assert_eq!(r.details["ar_predicate"], true);
        assert!(r.drift().unwrap() < 0.2);
    }

    #[test]
    fn weak_morrey_examples() {
        let a = Anisotropy::isotropic(1);
        let cfg = WeakMorreyConfig::new(Weight::Constant(1.0), 0.5, a.clone(), grid1(-8.0, 8.0, 512));
        let zero = check_weak_morrey(&cfg, &TestFunction::parse("const(0)").unwrap()).unwrap();
        assert_eq!(zero.constant, 0.0);
        let r = check_weak_morrey(&cfg, &TestFunction::parse("ind(-1:1)").unwrap()).unwrap();
        assert!(r.constant.is_finite() && r.constant > 0.0);
        assert!(r.drift().unwrap() < 0.2, "{:?}", r.history);
    }

    #[test]
    fn fefferman_stein_spot_value() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-8.0, 8.0, 4096);
        let f = TestFunction::parse("ind(-1:1)").unwrap();
        let one = TestFunction::parse("const(1)").unwrap();
        let r = fefferman_stein_constant(&f, &one, &a, &g, 1, 2f64.powf(1.0 / 64.0), Some(&[0.25])).unwrap();
        let spot = r.details["profile"][0][1].as_f64().unwrap();
        assert!((spot / 1.5 - 1.0).abs() < 0.05, "{spot}");
        assert!((r.constant - 0.75).abs() < 0.05, "{}", r.constant);
        let zero = fefferman_stein_constant(&TestFunction::parse("const(0)").unwrap(), &one, &a, &g, 1, 2.0, None).unwrap();
        assert_eq!(zero.constant, 0.0);
    }

    #[test]
    fn power_counterexample_dichotomy() {
        let r = counterexample_remark3(-0.25, &[1024, 2048, 4096]).unwrap();
        assert!(r.passed(), "{r:?}");
        let inc = r.details["increments"].as_array().unwrap();
        for d in inc {
            assert!((d.as_f64().unwrap() / 2f64.ln() - 1.0).abs() < 0.1);
        }
        assert!(counterexample_remark3(0.1, &[64, 128]).is_err());
        assert!(counterexample_remark3(-0.25, &[64]).is_err());
    }
}
