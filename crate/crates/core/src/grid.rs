//! Cell-centered uniform grids, sampled functions and n-dimensional
//! prefix-sum tables.
//!
//! Every integral over a parallelepiped `E` uses the same snap rule: a cell
//! takes part iff its center lies in `E` (closed). All modules go through
//! [`Grid::index_range`], so box sums, weighted sums and the maximal
//! operators always see identical cell sets.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{invalid, Error, Result};
use crate::geometry::Parallelepiped;

/// Tolerance, in cell units, for a cell center lying on the boundary of `E`.
/// Centers within this distance of a face count as inside.
pub const SNAP_SLACK: f64 = 1e-9;

/// Axis-aligned computational box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidDomain(format!(
                "bounds of different lengths ({} vs {})",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: need finite lo < hi, got {l}:{h}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Parses `lo1:hi1[,lo2:hi2...]`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for part in s.split(',') {
            let (l, h) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("domain axis `{part}` is not lo:hi")))?;
            lo.push(parse_f64(l)?);
            hi.push(parse_f64(h)?);
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// Lebesgue measure of `E ∩ domain`.
    pub fn clipped_measure(&self, e: &Parallelepiped) -> f64 {
        e.bounds()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|((el, eh), (l, h))| (eh.min(*h) - el.max(*l)).max(0.0))
            .product()
    }

    /// `E ⊆ domain`.
    pub fn encloses(&self, e: &Parallelepiped) -> bool {
        e.bounds()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|((el, eh), (l, h))| *el >= *l && *eh <= *h)
    }

    pub fn spec_string(&self) -> String {
        let mut s = String::new();
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{l}:{h}");
        }
        s
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{}` is not a number", s.trim())))
}

/// Half-open multi-index box `start_i <= k_i < end_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRange {
    pub start: Vec<usize>,
    pub end: Vec<usize>,
}

impl IndexRange {
    pub fn count(&self) -> usize {
        self.start
            .iter()
            .zip(&self.end)
            .map(|(s, e)| e - s)
            .product()
    }

    pub fn contains(&self, multi: &[usize]) -> bool {
        multi
            .iter()
            .zip(self.start.iter().zip(&self.end))
            .all(|(k, (s, e))| s <= k && k < e)
    }
}

/// A uniform cell-centered grid over a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    shape: Vec<usize>,
    cell: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    /// Builds a grid; rejects layouts where the origin is a cell center so
    /// singular power weights stay finite at every sample.
    pub fn new(domain: Domain, shape: Vec<usize>) -> Result<Self> {
        if shape.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: shape.len(),
            });
        }
        if shape.contains(&0) {
            return Err(invalid("shape", "every axis needs at least one cell"));
        }
        let cell: Vec<f64> = (0..shape.len())
            .map(|i| domain.extent(i) / shape[i] as f64)
            .collect();
        let mut strides = vec![1usize; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let len = shape.iter().product();
        let grid = Self {
            domain,
            shape,
            cell,
            strides,
            len,
        };
        let origin_is_center = (0..grid.dim()).all(|i| {
            let u = -grid.domain.lo[i] / grid.cell[i] - 0.5;
            let k = u.round();
            k >= 0.0 && (k as usize) < grid.shape[i] && (u - k).abs() < SNAP_SLACK
        });
        if origin_is_center {
            return Err(Error::InvalidDomain(
                "the origin is a cell center; shift the domain or change the shape".into(),
            ));
        }
        Ok(grid)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell.iter().product()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn axis_center(&self, axis: usize, k: usize) -> f64 {
        self.domain.lo[axis] + (k as f64 + 0.5) * self.cell[axis]
    }

    pub fn unravel(&self, mut linear: usize) -> Vec<usize> {
        let mut multi = vec![0; self.dim()];
        for (i, s) in self.strides.iter().enumerate() {
            multi[i] = linear / s;
            linear %= s;
        }
        multi
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn center(&self, multi: &[usize]) -> Vec<f64> {
        multi
            .iter()
            .enumerate()
            .map(|(i, &k)| self.axis_center(i, k))
            .collect()
    }

    pub fn center_of(&self, linear: usize) -> Vec<f64> {
        self.center(&self.unravel(linear))
    }

    /// Linear index of the cell containing `x` (clamped to the grid); a point
    /// on a shared face goes to the lower cell.
    pub fn nearest_cell(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|i| {
                let u = (x[i] - self.domain.lo[i]) / self.cell[i];
                let k = (u.ceil() - 1.0).max(0.0) as usize;
                k.min(self.shape[i] - 1)
            })
            .collect();
        self.ravel(&multi)
    }

    /// Snap rule as a predicate: is the center of `multi` inside `E`?
    pub fn center_in(&self, e: &Parallelepiped, multi: &[usize]) -> bool {
        multi.iter().enumerate().all(|(i, &k)| {
            let u = (e.center()[i] - self.domain.lo[i]) / self.cell[i];
            let r = e.half_widths()[i] / self.cell[i];
            (k as f64 + 0.5 - u).abs() <= r + SNAP_SLACK
        })
    }

    /// Cells whose centers lie in `E ∩ domain`; `None` when there are none.
    pub fn index_range(&self, e: &Parallelepiped) -> Option<IndexRange> {
        debug_assert_eq!(e.dim(), self.dim());
        let mut start = Vec::with_capacity(self.dim());
        let mut end = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let u = (e.center()[i] - self.domain.lo[i]) / self.cell[i];
            let r = e.half_widths()[i] / self.cell[i];
            let kmin = (u - 0.5 - r - SNAP_SLACK).ceil().max(0.0);
            let kmax = (u - 0.5 + r + SNAP_SLACK)
                .floor()
                .min(self.shape[i] as f64 - 1.0);
            if kmin > kmax {
                return None;
            }
            start.push(kmin as usize);
            end.push(kmax as usize + 1);
        }
        Some(IndexRange { start, end })
    }

    pub(crate) fn try_index_range(&self, e: &Parallelepiped) -> Result<IndexRange> {
        self.index_range(e).ok_or_else(|| Error::EmptyIntersection {
            center: e.center().to_vec(),
            t: e.t(),
        })
    }

    /// Linear indices of a range, in row-major order.
    pub fn range_indices<'a>(&'a self, range: &'a IndexRange) -> impl Iterator<Item = usize> + 'a {
        let total = range.count();
        let dims: Vec<usize> = range
            .start
            .iter()
            .zip(&range.end)
            .map(|(s, e)| e - s)
            .collect();
        (0..total).map(move |mut j| {
            let mut lin = 0;
            for i in (0..dims.len()).rev() {
                let k = range.start[i] + j % dims[i];
                j /= dims[i];
                lin += k * self.strides[i];
            }
            lin
        })
    }

    /// The same domain with every axis subdivided by `factors[i]`.
    pub fn refined(&self, factors: &[usize]) -> Result<Self> {
        if factors.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: factors.len(),
            });
        }
        let shape = self.shape.iter().zip(factors).map(|(n, f)| n * f).collect();
        Self::new(self.domain.clone(), shape)
    }
}

/// Real values sampled at the cell centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                point: grid.center_of(i),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.center_of(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(invalid("grid", "functions live on different grids"));
        }
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    /// Plain sum of the samples times the cell volume.
    pub fn integral(&self) -> f64 {
        let s: TwoFloat = self
            .values
            .iter()
            .fold(TwoFloat::from(0.0), |acc, v| acc + *v);
        f64::from(s) * self.grid.cell_volume()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let shape: Vec<String> = self.grid.shape.iter().map(|n| n.to_string()).collect();
        writeln!(
            out,
            "# domain={} shape={}",
            self.grid.domain.spec_string(),
            shape.join(",")
        )?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))??;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("grid header must start with `#`".into()))?;
        let mut domain = None;
        let mut shape = None;
        for tok in header.split_whitespace() {
            if let Some(d) = tok.strip_prefix("domain=") {
                domain = Some(Domain::parse(d)?);
            } else if let Some(s) = tok.strip_prefix("shape=") {
                shape = Some(parse_shape(s)?);
            }
        }
        let domain = domain.ok_or_else(|| Error::Parse("header lacks domain=".into()))?;
        let shape = shape.ok_or_else(|| Error::Parse("header lacks shape=".into()))?;
        let grid = Grid::new(domain, shape)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(parse_f64(line)?);
        }
        Self::new(grid, values)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "domain": self.grid.domain.spec_string(),
            "shape": self.grid.shape,
            "values": self.values,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            domain: String,
            shape: Vec<usize>,
            values: Vec<f64>,
        }
        let raw: Raw =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(Grid::new(Domain::parse(&raw.domain)?, raw.shape)?, raw.values)
    }
}

pub fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("`{p}` is not a cell count")))
        })
        .collect()
}

/// n-dimensional prefix sums of one value array, accumulated in
/// double-double so differences of large prefixes keep full precision.
#[derive(Debug, Clone)]
pub struct SummedTable {
    grid: Grid,
    padded: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<TwoFloat>,
}

impl SummedTable {
    pub fn new(grid: &Grid, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len(), "values do not match the grid");
        let n = grid.dim();
        let padded: Vec<usize> = grid.shape().iter().map(|s| s + 1).collect();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * padded[i + 1];
        }
        let total: usize = padded.iter().product();
        let mut table = vec![TwoFloat::from(0.0); total];
        for (lin, v) in values.iter().enumerate() {
            let multi = grid.unravel(lin);
            let p: usize = multi.iter().zip(&strides).map(|(k, s)| (k + 1) * s).sum();
            table[p] = TwoFloat::from(*v);
        }
        for axis in 0..n {
            let s = strides[axis];
            for p in 0..total {
                if !(p / s).is_multiple_of(padded[axis]) {
                    let prev = table[p - s];
                    table[p] += prev;
                }
            }
        }
        Self {
            grid: grid.clone(),
            padded,
            strides,
            table,
        }
    }

    pub fn of(gf: &GridFunction) -> Self {
        Self::new(gf.grid(), gf.values())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Corner lookups per [`SummedTable::sum`] call.
    pub fn lookups_per_query(&self) -> usize {
        1 << self.grid.dim()
    }

    /// Entry of the inclusive prefix at `multi` (sum over all indices `<= multi`).
    pub fn prefix(&self, multi: &[usize]) -> f64 {
        let p: usize = multi
            .iter()
            .zip(&self.strides)
            .map(|(k, s)| (k + 1) * s)
            .sum();
        f64::from(self.table[p])
    }

    /// Raw sum of the values over an index range.
    pub fn sum(&self, range: &IndexRange) -> f64 {
        let n = self.grid.dim();
        let mut acc = TwoFloat::from(0.0);
        for mask in 0..(1usize << n) {
            let mut p = 0;
            let mut lower = 0;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    p += range.end[i] * self.strides[i];
                } else {
                    p += range.start[i] * self.strides[i];
                    lower += 1;
                }
            }
            if lower % 2 == 0 {
                acc += self.table[p];
            } else {
                acc -= self.table[p];
            }
        }
        debug_assert!(self.padded.len() == n);
        f64::from(acc)
    }

    /// `∫_E f` under the snap rule.
    pub fn box_sum(&self, e: &Parallelepiped) -> Result<f64> {
        let r = self.grid.try_index_range(e)?;
        Ok(self.sum(&r) * self.grid.cell_volume())
    }

    /// Mean of the samples whose centers lie in `E`.
    pub fn box_average(&self, e: &Parallelepiped) -> Result<f64> {
        let r = self.grid.try_index_range(e)?;
        Ok(self.sum(&r) / r.count() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Anisotropy;

    fn grid1(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::new(Domain::new(vec![lo], vec![hi]).unwrap(), vec![n]).unwrap()
    }

    #[test]
    fn rejects_origin_center() {
        assert!(matches!(
            Grid::new(Domain::new(vec![-1.0], vec![1.0]).unwrap(), vec![3]),
            Err(Error::InvalidDomain(_))
        ));
        // Origin on a cell center only along one axis is fine.
        Grid::new(Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), vec![3, 4]).unwrap();
        assert!(Domain::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn prefix_examples() {
        let g = grid1(0.0, 5.0, 5);
        let t = SummedTable::new(&g, &[1.0; 5]);
        let pre: Vec<f64> = (0..5).map(|k| t.prefix(&[k])).collect();
        assert_eq!(pre, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let g2 = Grid::new(Domain::new(vec![0.0, 0.0], vec![3.0, 3.0]).unwrap(), vec![3, 3]).unwrap();
        let t2 = SummedTable::new(&g2, &[1.0; 9]);
        assert_eq!(t2.prefix(&[2, 2]), 9.0);
        assert_eq!(t2.prefix(&[1, 2]), 6.0);
    }

    #[test]
    fn snap_rule_example() {
        let g = grid1(-2.0, 2.0, 8);
        let vals: Vec<f64> = (0..8)
            .map(|k| {
                let c = g.axis_center(0, k);
                if (0.0..=1.0).contains(&c) { 1.0 } else { 0.0 }
            })
            .collect();
        assert_eq!(vals, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let t = SummedTable::new(&g, &vals);
        let a = Anisotropy::isotropic(1);
        let e = Parallelepiped::new(vec![0.0], 1.0, &a).unwrap();
        let r = g.index_range(&e).unwrap();
        assert_eq!((r.start[0], r.end[0]), (2, 6));
        assert_eq!(t.box_average(&e).unwrap(), 0.5);
        assert_eq!(t.box_sum(&e).unwrap(), 1.0);
    }

    #[test]
    fn constant_average() {
        let g = Grid::new(Domain::new(vec![-1.0, 0.5], vec![2.0, 3.0]).unwrap(), vec![7, 9]).unwrap();
        let t = SummedTable::new(&g, &vec![2.5; g.len()]);
        let a = Anisotropy::new(vec![1.0, 2.0]).unwrap();
        for (c, s) in [(vec![0.0, 1.0], 0.3), (vec![1.9, 2.9], 1.1), (vec![-0.7, 0.6], 0.25)] {
            let e = Parallelepiped::new(c, s, &a).unwrap();
            assert!((t.box_average(&e).unwrap() - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_intersection() {
        let g = grid1(0.0, 1.0, 4);
        let a = Anisotropy::isotropic(1);
        let e = Parallelepiped::new(vec![5.0], 0.1, &a).unwrap();
        let t = SummedTable::new(&g, &[1.0; 4]);
        assert!(matches!(t.box_sum(&e), Err(Error::EmptyIntersection { .. })));
        // Between two centers, narrower than a cell.
        let e = Parallelepiped::new(vec![0.25], 0.05, &a).unwrap();
        assert!(g.index_range(&e).is_none());
    }

    #[test]
    fn csv_and_json_roundtrip() {
        let g = Grid::new(Domain::new(vec![-1.5, 0.0], vec![2.0, 0.3]).unwrap(), vec![3, 2]).unwrap();
        let f = GridFunction::new(g, vec![0.1, -2.0 / 3.0, 1e-300, 7.0, std::f64::consts::PI, -0.0]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# domain=-1.5:2,0:0.3 shape=3,2\n"));
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back, f);
        let j = GridFunction::from_json(&f.to_json()).unwrap();
        assert_eq!(j, f);
        assert!(GridFunction::read_csv(&b"domain=0:1 shape=1\n1\n"[..]).is_err());
        assert!(GridFunction::read_csv(&b"# domain=0:1 shape=2\n1\n"[..]).is_err());
    }

    #[test]
    fn nearest_cell_ties_go_low() {
        let g = grid1(-8.0, 8.0, 16);
        assert_eq!(g.nearest_cell(&[3.0]), 10);
        assert_eq!(g.nearest_cell(&[3.2]), 11);
        assert_eq!(g.nearest_cell(&[-100.0]), 0);
        assert_eq!(g.nearest_cell(&[100.0]), 15);
    }

    #[test]
    fn range_indices_row_major() {
        let g = Grid::new(Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), vec![3, 4]).unwrap();
        let r = IndexRange { start: vec![1, 1], end: vec![3, 3] };
        let idx: Vec<usize> = g.range_indices(&r).collect();
        assert_eq!(idx, vec![5, 6, 9, 10]);
    }
}
