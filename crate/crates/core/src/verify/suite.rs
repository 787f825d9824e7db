//! Test functions, grid refinement and the fixed check suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    check_chebyshev, check_jensen, check_lemma2_1, check_lemma2_2, check_mr_monotone, check_reverse_doubling,
    check_sublinearity, check_weak_morrey, counterexample_remark3, estimate_operator_norm, fefferman_stein_constant,
    rho_equivalence_scan, CheckReport, OperatorKind, OperatorNormConfig, WeakMorreyConfig,
};
use crate::error::Result;
use crate::expr::{sample, Expr};
use crate::family::{BoxFamily, ScaleLadder};
use crate::geometry::Anisotropy;
use crate::grid::{Domain, Grid, GridFunction};
use crate::norms::MorreyParams;
use crate::weights::{Backend, Weight};

/// A function that can be sampled on any grid, so the same input is used
/// at every refinement level.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Expr(Expr),
    /// Piecewise constant on `blocks` equal blocks per axis with values in
    /// `[-1, 1)` drawn from a seeded ChaCha8 stream.
    Random { seed: u64, blocks: usize },
}

impl TestFunction {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(TestFunction::Expr(Expr::parse(src)?))
    }

    pub fn sample(&self, grid: &Grid, a: &Anisotropy) -> Result<GridFunction> {
        match self {
            TestFunction::Expr(e) => sample(e, grid, a),
            TestFunction::Random { seed, blocks } => Ok(random_field(grid, *seed, *blocks)),
        }
    }
}

/// Piecewise-constant random field: block values in row-major block order,
/// each cell taking the value of the block holding its center.
pub fn random_field(grid: &Grid, seed: u64, blocks: usize) -> GridFunction {
    let blocks = blocks.max(1);
    let n = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table: Vec<f64> = (0..blocks.pow(n as u32)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.center_of(i);
            let mut b = 0;
            for (j, xj) in x.iter().enumerate() {
                let u = (xj - grid.domain().lo()[j]) / grid.domain().extent(j);
                b = b * blocks + ((u * blocks as f64) as usize).min(blocks - 1);
            }
            table[b]
        })
        .collect();
    GridFunction::new(grid.clone(), values).expect("finite by construction")
}

/// Level-`k` refinement: axis `i` gets `round(2^{k a_i})` times the cells,
/// which halves the one-cell scale `t_min` per level.
pub fn refine_grid(base: &Grid, a: &Anisotropy, level: usize) -> Result<Grid> {
    let factors: Vec<usize> = a
        .exponents()
        .iter()
        .map(|ai| (2f64.powf(ai * level as f64)).round().max(1.0) as usize)
        .collect();
    base.refined(&factors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Cells of the 1-D base grid.
    pub cells: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 7, cells: 1024 }
    }
}

fn named(mut r: CheckReport, suffix: &str) -> CheckReport {
    r.name = format!("{}[{suffix}]", r.name);
    r
}

/// Runs every check once on fixed 1-D and 2-D configurations.
pub fn run_suite(opts: SuiteOptions) -> Result<Vec<CheckReport>> {
    let seed = opts.seed;
    let n = opts.cells;
    let a1 = Anisotropy::isotropic(1);
    let a12 = Anisotropy::new(vec![1.0, 2.0])?;
    let g = Grid::new(Domain::new(vec![-2.0], vec![2.0])?, vec![n])?;
    let wide = Grid::new(Domain::new(vec![-8.0], vec![8.0])?, vec![n])?;
    let fam = BoxFamily::default_for(&g, &a1)?;
    let wide_fam = BoxFamily::default_for(&wide, &a1)?;
    let ladder = ScaleLadder::for_grid(&g, &a1, 2.0)?;
    let rf = random_field(&g, seed, 64);
    let rg = random_field(&g, seed.wrapping_add(1), 64);
    let chi = TestFunction::parse("ind(-1:1)")?;
    let spike = TestFunction::parse("ind(-1:1)*powabs(-0.25)")?;
    let random = TestFunction::Random { seed, blocks: 64 };
    let fns = vec![chi.clone(), spike, random];

    let mut out = vec![
        rho_equivalence_scan(&a12, 2000, seed)?,
        check_jensen(&Weight::PowerAbs(-0.5), &[1.5, 2.0, 3.0], &fam, &g)?,
        check_chebyshev(&rf, &Weight::PowerAbs(0.5), 1.5, &a1)?,
        check_sublinearity(&rf, &rg, &a1, &ladder)?,
        check_mr_monotone(&rf, &[0.5, 1.0, 2.0, 3.0], &a1, &ladder)?,
        named(check_lemma2_1(&Weight::PowerAbs(0.5), 2.0, &wide_fam, &wide, &[2.0, 3.0, 5.0], Backend::exact())?, "powabs:0.5"),
    ];
    for (w, p) in [
        (Weight::Constant(1.0), 2.0),
        (Weight::PowerAbs(0.5), 2.0),
        (Weight::PowerAbs(-0.5), 1.0),
        (Weight::PowerAbs(-0.5), 3.0),
    ] {
        out.push(named(check_lemma2_2(&rf, &w, p, &fam)?, &format!("{w},p={p}")));
    }
    out.push(named(check_reverse_doubling(&Weight::PowerAbs(-0.5), &wide_fam, &wide, Backend::exact())?, "powabs:-0.5"));
    let g2 = Grid::new(Domain::new(vec![-4.0, -16.0], vec![4.0, 16.0])?, vec![32, 64])?;
    let fam2 = BoxFamily::lattice(&a12, vec![4, 4], ScaleLadder::new(0.5, 2.0, 2)?)?;
    out.push(named(check_reverse_doubling(&Weight::Constant(1.0), &fam2, &g2, Backend::exact())?, "const:1,a=(1,2)"));

    for (op, w, kappa) in [
        (OperatorKind::Weighted, Weight::PowerAbs(0.5), 0.0),
        (OperatorKind::Weighted, Weight::PowerAbs(0.5), 0.5),
        (OperatorKind::Centered, Weight::Constant(1.0), 0.5),
        (OperatorKind::Centered, Weight::PowerAbs(0.5), 0.5),
    ] {
        let mut cfg = OperatorNormConfig::new(op, w.clone(), MorreyParams::new(2.0, kappa)?, a1.clone(), g.clone());
        cfg.split_3e = true;
        out.push(named(estimate_operator_norm(&cfg, &fns)?, &format!("{op:?},{w},kappa={kappa}")));
    }
    for w in [Weight::Constant(1.0), Weight::PowerAbs(-0.25)] {
        let cfg = WeakMorreyConfig::new(w.clone(), 0.5, a1.clone(), wide.clone());
        out.push(named(check_weak_morrey(&cfg, &chi)?, &w.to_string()));
    }
    out.push(fefferman_stein_constant(&chi, &TestFunction::parse("const(1)")?, &a1, &wide, 2, 2f64.powf(0.25), None)?);
    out.push(counterexample_remark3(-0.25, &[n, 2 * n, 4 * n])?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_field_refines_consistently() {
        let a = Anisotropy::isotropic(1);
        let g = Grid::new(Domain::new(vec![-1.0], vec![1.0]).unwrap(), vec![128]).unwrap();
        let f = random_field(&g, 7, 64);
        let fine = random_field(&refine_grid(&g, &a, 1).unwrap(), 7, 64);
        for (i, v) in f.values().iter().enumerate() {
            assert_eq!(fine.values()[2 * i], *v);
            assert_eq!(fine.values()[2 * i + 1], *v);
        }
        assert_eq!(f, random_field(&g, 7, 64));
        assert_ne!(f, random_field(&g, 8, 64));
        assert!(f.values().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn refinement_factors_follow_anisotropy() {
        let a = Anisotropy::new(vec![1.0, 2.0]).unwrap();
        let g = Grid::new(Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), vec![8, 8]).unwrap();
        assert_eq!(refine_grid(&g, &a, 1).unwrap().shape(), &[16, 32]);
        let t0 = crate::family::resolution_scale(&g, &a);
        let t1 = crate::family::resolution_scale(&refine_grid(&g, &a, 1).unwrap(), &a);
        assert!((t1 / t0 - 0.5).abs() < 1e-12);
    }
}
