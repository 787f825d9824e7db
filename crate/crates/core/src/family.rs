//! Finite families of parallelepipeds standing in for "all E" and
//! "all t > 0".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Anisotropy, Parallelepiped};
use crate::grid::{Grid, IndexRange, SNAP_SLACK};
use crate::window::{filter_separable, Extremum};

/// Geometric scales `t_k = t_min * q^k`, `k = 0..count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    pub t_min: f64,
    pub q: f64,
    pub count: usize,
}

impl ScaleLadder {
    pub fn new(t_min: f64, q: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_min.is_finite()) {
            return Err(invalid("t_min", "must be positive"));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(invalid("q", "ladder ratio must exceed 1"));
        }
        if count == 0 {
            return Err(invalid("count", "ladder needs at least one scale"));
        }
        Ok(Self { t_min, q, count })
    }

    /// From one-cell resolution (`t^{a_i} >= h_i / 2` on every axis) up to
    /// the first scale whose box spans the whole domain.
    pub fn for_grid(grid: &Grid, a: &Anisotropy, q: f64) -> Result<Self> {
        a.check_dim(grid.dim())?;
        let t_min = resolution_scale(grid, a);
        let t_span = (0..grid.dim())
            .map(|i| grid.domain().extent(i).powf(1.0 / a.exponents()[i]))
            .fold(0.0, f64::max);
        let count = ((t_span / t_min).ln() / q.ln()).ceil().max(0.0) as usize + 1;
        Self::new(t_min, q, count)
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.t_min * self.q.powi(k as i32))
            .collect()
    }

    pub fn t_max(&self) -> f64 {
        self.t_min * self.q.powi(self.count as i32 - 1)
    }

    /// `t_min` halved, one extra scale to keep the same top.
    pub fn refined(&self) -> Self {
        let extra = (2f64.ln() / self.q.ln()).round().max(1.0) as usize;
        Self {
            t_min: self.t_min / 2.0,
            q: self.q,
            count: self.count + extra,
        }
    }
}

/// Smallest `t` with `t^{a_i} >= h_i / 2` on every axis.
pub fn resolution_scale(grid: &Grid, a: &Anisotropy) -> f64 {
    grid.cell_size()
        .iter()
        .zip(a.exponents())
        .map(|(h, ai)| (h / 2.0).powf(1.0 / ai))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Centers on the cell sub-lattice `k_i ≡ 0 (mod stride_i)`, every
    /// center paired with every ladder scale.
    Lattice {
        stride: Vec<usize>,
        ladder: ScaleLadder,
    },
    Explicit(Vec<Parallelepiped>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxFamily {
    pub anisotropy: Anisotropy,
    pub kind: FamilyKind,
}

/// One family member resolved against a grid.
#[derive(Debug, Clone)]
pub struct Member {
    pub e: Parallelepiped,
    pub range: IndexRange,
}

pub const DEFAULT_STRIDE: usize = 4;
pub const DEFAULT_Q: f64 = 2.0;

impl BoxFamily {
    pub fn lattice(a: &Anisotropy, stride: Vec<usize>, ladder: ScaleLadder) -> Result<Self> {
        if stride.len() != a.dim() || stride.contains(&0) {
            return Err(invalid("stride", "one positive stride per axis"));
        }
        Ok(Self {
            anisotropy: a.clone(),
            kind: FamilyKind::Lattice { stride, ladder },
        })
    }

    /// Stride 4, q = 2, scales from one cell to the whole domain.
    pub fn default_for(grid: &Grid, a: &Anisotropy) -> Result<Self> {
        Self::with_params(grid, a, DEFAULT_STRIDE, DEFAULT_Q)
    }

    pub fn with_params(grid: &Grid, a: &Anisotropy, stride: usize, q: f64) -> Result<Self> {
        let ladder = ScaleLadder::for_grid(grid, a, q)?;
        Self::lattice(a, vec![stride; grid.dim()], ladder)
    }

    pub fn explicit(a: &Anisotropy, boxes: Vec<Parallelepiped>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(invalid("family", "explicit family is empty"));
        }
        for b in &boxes {
            a.check_dim(b.dim())?;
        }
        Ok(Self {
            anisotropy: a.clone(),
            kind: FamilyKind::Explicit(boxes),
        })
    }

    /// Halves `t_min`; the stride is in cells, so on a refined grid the
    /// physical stride halves too.
    pub fn refined(&self) -> Self {
        match &self.kind {
            FamilyKind::Lattice { stride, ladder } => Self {
                anisotropy: self.anisotropy.clone(),
                kind: FamilyKind::Lattice {
                    stride: stride.clone(),
                    ladder: ladder.refined(),
                },
            },
            FamilyKind::Explicit(_) => self.clone(),
        }
    }

    fn lattice_centers(grid: &Grid, stride: &[usize]) -> Vec<Vec<usize>> {
        let per_axis: Vec<Vec<usize>> = grid
            .shape()
            .iter()
            .zip(stride)
            .map(|(&n, &s)| (0..n).step_by(s).collect())
            .collect();
        let mut out = vec![vec![]];
        for axis in per_axis {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&k| {
                        let mut p = prefix.clone();
                        p.push(k);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Every member together with its snap-rule cell range, in a fixed order
    /// (scale-major for lattices). Members missing the grid are dropped.
    pub fn members(&self, grid: &Grid) -> Result<Vec<Member>> {
        self.anisotropy.check_dim(grid.dim())?;
        let boxes: Vec<Parallelepiped> = match &self.kind {
            FamilyKind::Lattice { stride, ladder } => {
                if stride.len() != grid.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: grid.dim(),
                        got: stride.len(),
                    });
                }
                let centers = Self::lattice_centers(grid, stride);
                let mut v = Vec::with_capacity(centers.len() * ladder.count);
                for t in ladder.scales() {
                    for c in &centers {
                        v.push(Parallelepiped::new(grid.center(c), t, &self.anisotropy)?);
                    }
                }
                v
            }
            FamilyKind::Explicit(b) => b.clone(),
        };
        Ok(boxes
            .into_par_iter()
            .filter_map(|e| grid.index_range(&e).map(|range| Member { e, range }))
            .collect())
    }

    /// `out[x] = max { values[m] : member m covers cell x }`, `-inf` where no
    /// member covers `x`. `values` is indexed like [`BoxFamily::members`].
    pub fn spread_max(&self, grid: &Grid, members: &[Member], values: &[f64]) -> Vec<f64> {
        assert_eq!(members.len(), values.len());
        match &self.kind {
            FamilyKind::Lattice { stride, ladder } => {
                let per_scale = members.len() / ladder.count.max(1);
                let mut out = vec![f64::NEG_INFINITY; grid.len()];
                if per_scale * ladder.count != members.len() {
                    return spread_brute(grid, members, values);
                }
                let lattice = Self::lattice_centers(grid, stride);
                for (s, t) in ladder.scales().into_iter().enumerate() {
                    let mut field = vec![f64::NEG_INFINITY; grid.len()];
                    for (c, v) in lattice.iter().zip(&values[s * per_scale..(s + 1) * per_scale]) {
                        field[grid.ravel(c)] = *v;
                    }
                    let radii: Vec<usize> = (0..grid.dim())
                        .map(|i| {
                            let hw = t.powf(self.anisotropy.exponents()[i]);
                            (hw / grid.cell_size()[i] + SNAP_SLACK).floor() as usize
                        })
                        .collect();
                    let spread = filter_separable(&field, grid.shape(), &radii, Extremum::Max);
                    for (o, v) in out.iter_mut().zip(spread) {
                        *o = o.max(v);
                    }
                }
                out
            }
            FamilyKind::Explicit(_) => spread_brute(grid, members, values),
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

fn spread_brute(grid: &Grid, members: &[Member], values: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; grid.len()];
    for (m, v) in members.iter().zip(values) {
        for i in grid.range_indices(&m.range) {
            out[i] = out[i].max(*v);
        }
    }
    out
}

/// Errors on the first `-inf` entry of a spread field.
pub(crate) fn check_covered(field: &[f64]) -> Result<()> {
    match field.iter().position(|v| *v == f64::NEG_INFINITY) {
        Some(index) => Err(Error::UncoveredCenter { index }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;

    #[test]
    fn ladder_spans_domain() {
        let g = Grid::new(Domain::new(vec![-1.0], vec![1.0]).unwrap(), vec![1024]).unwrap();
        let a = Anisotropy::isotropic(1);
        let l = ScaleLadder::for_grid(&g, &a, 2.0).unwrap();
        assert_eq!(l.t_min, 2.0 / 1024.0 / 2.0);
        assert!(l.t_max() >= 2.0 && l.t_max() / 2.0 < 2.0);
        let r = l.refined();
        assert_eq!(r.t_min, l.t_min / 2.0);
        assert_eq!(r.t_max(), l.t_max());
        assert!(ScaleLadder::new(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn lattice_spread_matches_brute_force() {
        let g = Grid::new(Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), vec![16, 64]).unwrap();
        let a = Anisotropy::new(vec![1.0, 2.0]).unwrap();
        let fam = BoxFamily::with_params(&g, &a, 3, 2.0).unwrap();
        let members = fam.members(&g).unwrap();
        let values: Vec<f64> = (0..members.len()).map(|i| ((i * 7919) % 1013) as f64).collect();
        let fast = fam.spread_max(&g, &members, &values);
        let slow = spread_brute(&g, &members, &values);
        assert_eq!(fast, slow);
        check_covered(&fast).unwrap();
    }

    #[test]
    fn single_cell_members_leave_gaps() {
        let g = Grid::new(Domain::new(vec![0.0], vec![1.0]).unwrap(), vec![8]).unwrap();
        let a = Anisotropy::isotropic(1);
        let fam = BoxFamily::lattice(&a, vec![4], ScaleLadder::new(1.0 / 16.0, 2.0, 1).unwrap()).unwrap();
        let m = fam.members(&g).unwrap();
        assert!(m.iter().all(|m| m.range.count() == 1));
        let field = fam.spread_max(&g, &m, &vec![1.0; m.len()]);
        assert!(matches!(check_covered(&field), Err(Error::UncoveredCenter { index: 1 })));
    }
}
