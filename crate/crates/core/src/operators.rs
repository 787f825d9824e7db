//! Maximal operators on sampled functions: centered `M` over a scale
//! ladder, uncentered `M` and `M_w` over a box family, `M_r` and `f^#`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::family::{check_covered, BoxFamily, Member, ScaleLadder};
use crate::geometry::Anisotropy;
use crate::grid::{Grid, GridFunction, IndexRange, SummedTable, SNAP_SLACK};
use crate::weights::Weight;

/// Cell radius per axis of `E(x, t)` centered on a cell center.
fn cell_radii(grid: &Grid, a: &Anisotropy, t: f64) -> Vec<usize> {
    (0..grid.dim())
        .map(|i| {
            let hw = t.powf(a.exponents()[i]);
            (hw / grid.cell_size()[i] + SNAP_SLACK).floor() as usize
        })
        .collect()
}

fn centered_range(grid: &Grid, multi: &[usize], radii: &[usize]) -> IndexRange {
    IndexRange {
        start: multi.iter().zip(radii).map(|(k, r)| k.saturating_sub(*r)).collect(),
        end: multi
            .iter()
            .zip(radii)
            .zip(grid.shape())
            .map(|((k, r), n)| (k + r + 1).min(*n))
            .collect(),
    }
}

/// `max_t` of `sum(table, E(x,t)) / #cells(E(x,t))` at every center.
fn centered_max_average(grid: &Grid, table: &SummedTable, a: &Anisotropy, ladder: &ScaleLadder) -> Vec<f64> {
    let radii: Vec<Vec<usize>> = ladder.scales().iter().map(|t| cell_radii(grid, a, *t)).collect();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let multi = grid.unravel(i);
            radii
                .iter()
                .map(|r| {
                    let range = centered_range(grid, &multi, r);
                    table.sum(&range) / range.count() as f64
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Centered maximal function `Mf(x) = max_t avg_{E(x,t)} |f|`.
pub fn maximal(f: &GridFunction, a: &Anisotropy, ladder: &ScaleLadder) -> Result<GridFunction> {
    a.check_dim(f.grid().dim())?;
    let table = SummedTable::of(&f.abs());
    GridFunction::new(f.grid().clone(), centered_max_average(f.grid(), &table, a, ladder))
}

/// `(M |f|^r)^{1/r}`.
pub fn maximal_r(f: &GridFunction, r: f64, a: &Anisotropy, ladder: &ScaleLadder) -> Result<GridFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", "must be positive"));
    }
    if r == 1.0 {
        return maximal(f, a, ladder);
    }
    let fr = f.map(|v| v.abs().powf(r))?;
    maximal(&fr, a, ladder)?.map(|v| v.powf(1.0 / r))
}

/// Uncentered maximal function over a family: max of `avg_E |f|` over the
/// members containing `x`.
pub fn maximal_over_family(f: &GridFunction, family: &BoxFamily) -> Result<GridFunction> {
    let grid = f.grid();
    let members = family.members(grid)?;
    let table = SummedTable::of(&f.abs());
    let avgs: Vec<f64> = members
        .par_iter()
        .map(|m| table.sum(&m.range) / m.range.count() as f64)
        .collect();
    let field = family.spread_max(grid, &members, &avgs);
    check_covered(&field)?;
    GridFunction::new(grid.clone(), field)
}

/// Per-member weighted averages `(1/w(E)) ∫_E |f| w` with both integrals
/// taken over the same snapped cells.
fn weighted_averages(f: &GridFunction, w: &Weight, family: &BoxFamily) -> Result<(Vec<f64>, Vec<Member>)> {
    let grid = f.grid();
    let ws = w.sample(grid, &family.anisotropy)?;
    let fw = f.abs().zip_with(&ws, |x, y| x * y)?;
    let tw = SummedTable::of(&ws);
    let tfw = SummedTable::of(&fw);
    let members = family.members(grid)?;
    let avgs: Vec<f64> = members
        .par_iter()
        .map(|m| tfw.sum(&m.range) / tw.sum(&m.range))
        .collect();
    Ok((avgs, members))
}

/// `M_w f(x) = max { (1/w(E)) ∫_E |f| w : E in F, x in E }`.
pub fn weighted_maximal(f: &GridFunction, w: &Weight, family: &BoxFamily) -> Result<GridFunction> {
    let (avgs, members) = weighted_averages(f, w, family)?;
    let field = family.spread_max(f.grid(), &members, &avgs);
    check_covered(&field)?;
    GridFunction::new(f.grid().clone(), field)
}

/// The literal reading without `x ∈ E`: one constant, the max weighted
/// average over the whole family, broadcast to every cell.
pub fn weighted_maximal_all_boxes(f: &GridFunction, w: &Weight, family: &BoxFamily) -> Result<GridFunction> {
    let (avgs, _) = weighted_averages(f, w, family)?;
    let m = avgs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GridFunction::constant(f.grid().clone(), m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpMode {
    /// Deviation from the signed mean `avg_E f`.
    #[default]
    Mean,
    /// Deviation from `avg_E |f|`.
    AbsMean,
}

impl std::str::FromStr for SharpMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(SharpMode::Mean),
            "abs_mean" | "abs-mean" => Ok(SharpMode::AbsMean),
            other => Err(crate::Error::Parse(format!("unknown sharp mode `{other}`"))),
        }
    }
}

/// `f^#(x) = max_t avg_{E(x,t)} |f - c_E|`.
pub fn sharp_maximal(f: &GridFunction, a: &Anisotropy, ladder: &ScaleLadder, mode: SharpMode) -> Result<GridFunction> {
    let grid = f.grid();
    a.check_dim(grid.dim())?;
    let table = match mode {
        SharpMode::Mean => SummedTable::of(f),
        SharpMode::AbsMean => SummedTable::of(&f.abs()),
    };
    let radii: Vec<Vec<usize>> = ladder.scales().iter().map(|t| cell_radii(grid, a, *t)).collect();
    let values = f.values();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let multi = grid.unravel(i);
            let mut best = f64::NEG_INFINITY;
            for r in &radii {
                let range = centered_range(grid, &multi, r);
                let n = range.count() as f64;
                let c = table.sum(&range) / n;
                let dev: f64 = grid.range_indices(&range).map(|j| (values[j] - c).abs()).sum();
                best = best.max(dev / n);
            }
            best
        })
        .collect();
    GridFunction::new(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{sample, Expr};
    use crate::geometry::Parallelepiped;
    use crate::grid::Domain;

    fn grid1(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::new(Domain::new(vec![lo], vec![hi]).unwrap(), vec![n]).unwrap()
    }

    fn f_of(src: &str, g: &Grid) -> GridFunction {
        sample(&Expr::parse(src).unwrap(), g, &Anisotropy::isotropic(g.dim())).unwrap()
    }

    #[test]
    fn constants_are_fixed_points() {
        let a = Anisotropy::new(vec![1.0, 0.5]).unwrap();
        let g = Grid::new(Domain::new(vec![-1.0, -1.0], vec![1.0, 2.0]).unwrap(), vec![16, 12]).unwrap();
        let f = GridFunction::constant(g.clone(), -2.5);
        let l = ScaleLadder::for_grid(&g, &a, 2.0).unwrap();
        assert!(maximal(&f, &a, &l).unwrap().values().iter().all(|v| *v == 2.5));
        for r in [0.5, 2.0, 3.0] {
            let m = maximal_r(&f, r, &a, &l).unwrap();
            assert!(m.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
        let fam = BoxFamily::default_for(&g, &a).unwrap();
        let mw = weighted_maximal(&f, &Weight::PowerRho(0.5), &fam).unwrap();
        assert!(mw.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        let s = sharp_maximal(&f, &a, &l, SharpMode::Mean).unwrap();
        assert!(s.values().iter().all(|v| *v == 0.0));
        let s = sharp_maximal(&f, &a, &l, SharpMode::AbsMean).unwrap();
        assert!(s.values().iter().all(|v| *v == 5.0));
    }

    #[test]
    fn sharp_literal_of_minus_one() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-1.0, 1.0, 32);
        let l = ScaleLadder::for_grid(&g, &a, 2.0).unwrap();
        let f = GridFunction::constant(g, -1.0);
        let s = sharp_maximal(&f, &a, &l, SharpMode::AbsMean).unwrap();
        assert!(s.values().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn sharp_of_heaviside_at_zero() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-4.0, 4.0, 64);
        let f = f_of("ind(0:4)", &g);
        // Cells next to 0 see two nearly equal halves.
        let l = ScaleLadder::new(1.0, 2.0, 2).unwrap();
        let s = sharp_maximal(&f, &a, &l, SharpMode::Mean).unwrap();
        let near0 = s.values()[g.nearest_cell(&[0.0])];
        assert!((near0 - 0.5).abs() < 0.02, "{near0}");
        assert!(s.values().iter().all(|v| *v <= 0.5 + 1e-12));
    }

    #[test]
    fn indicator_anchor() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-8.0, 8.0, 1 << 13);
        let f = f_of("ind(-1:1)", &g);
        let l = ScaleLadder::new(crate::family::resolution_scale(&g, &a), 2f64.powf(0.25), 70).unwrap();
        let m = maximal(&f, &a, &l).unwrap();
        let at3 = m.values()[g.nearest_cell(&[3.0])];
        assert!((0.24..=0.26).contains(&at3), "{at3}");
        assert!((m.values()[g.nearest_cell(&[0.0])] - 1.0).abs() < 1e-10);
        let m2 = maximal_r(&f, 2.0, &a, &l).unwrap();
        let at3_2 = m2.values()[g.nearest_cell(&[3.0])];
        assert!((at3_2 - at3.sqrt()).abs() < 1e-12);
        assert!((at3_2 - 0.5).abs() < 0.01);
        assert_eq!(maximal_r(&f, 1.0, &a, &l).unwrap(), m);
    }

    #[test]
    fn family_maximal_matches_brute_force() {
        let a = Anisotropy::new(vec![1.0, 2.0]).unwrap();
        let g = Grid::new(Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), vec![12, 40]).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        let fam = BoxFamily::with_params(&g, &a, 3, 2.0).unwrap();
        let m = maximal_over_family(&f, &fam).unwrap();
        let mw = weighted_maximal(&f, &Weight::Constant(1.0), &fam).unwrap();
        let members = fam.members(&g).unwrap();
        for i in 0..g.len() {
            let multi = g.unravel(i);
            let mut best = f64::NEG_INFINITY;
            for mem in &members {
                if mem.range.contains(&multi) {
                    let s: f64 = g.range_indices(&mem.range).map(|j| f.values()[j].abs()).sum();
                    best = best.max(s / mem.range.count() as f64);
                }
            }
            assert!((m.values()[i] - best).abs() < 1e-12);
            assert!((mw.values()[i] - best).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_near_origin_lifts_average() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(-2.0, 2.0, 256);
        let f = f_of("ind(0:1)", &g);
        let fam = BoxFamily::default_for(&g, &a).unwrap();
        let plain = maximal_over_family(&f, &fam).unwrap();
        let mw = weighted_maximal(&f, &Weight::PowerAbs(-0.5), &fam).unwrap();
        let i = g.nearest_cell(&[1.1]);
        assert!(mw.values()[i] > plain.values()[i], "{} vs {}", mw.values()[i], plain.values()[i]);
        let all = weighted_maximal_all_boxes(&f, &Weight::PowerAbs(-0.5), &fam).unwrap();
        assert!(all.values().iter().zip(mw.values()).all(|(x, y)| x >= y));
    }

    #[test]
    fn uncovered_family_is_an_error() {
        let a = Anisotropy::isotropic(1);
        let g = grid1(0.0, 1.0, 8);
        let fam = BoxFamily::explicit(&a, vec![Parallelepiped::new(vec![0.1], 0.1, &a).unwrap()]).unwrap();
        let f = GridFunction::constant(g, 1.0);
        assert!(matches!(maximal_over_family(&f, &fam), Err(crate::Error::UncoveredCenter { .. })));
        assert!(weighted_maximal(&f, &Weight::Constant(1.0), &fam).is_err());
    }
}
