//! Separable sliding-window max/min filters (van Herk / Gil-Werman), used to
//! spread per-box values onto every cell a box covers and to take box
//! minima of a sampled weight. Windows are truncated at the grid boundary.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

impl Extremum {
    fn identity(self) -> f64 {
        match self {
            Extremum::Max => f64::NEG_INFINITY,
            Extremum::Min => f64::INFINITY,
        }
    }

    fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Extremum::Max => a.max(b),
            Extremum::Min => a.min(b),
        }
    }
}

/// `out[k] = ext(line[k - r ..= k + r])`, clipped to the line.
pub fn filter_line(line: &[f64], radius: usize, ext: Extremum) -> Vec<f64> {
    let n = line.len();
    if radius == 0 || n == 0 {
        return line.to_vec();
    }
    let width = 2 * radius + 1;
    let padded_len = n + 2 * radius;
    let blocks = padded_len.div_ceil(width);
    let total = blocks * width;
    let id = ext.identity();
    let at = |j: usize| -> f64 {
        if j >= radius && j - radius < n {
            line[j - radius]
        } else {
            id
        }
    };
    let mut fwd = vec![id; total];
    let mut bwd = vec![id; total];
    for b in 0..blocks {
        let base = b * width;
        let mut acc = id;
        for (j, slot) in fwd.iter_mut().enumerate().skip(base).take(width) {
            acc = ext.pick(acc, at(j));
            *slot = acc;
        }
        let mut acc = id;
        for j in (base..base + width).rev() {
            acc = ext.pick(acc, at(j));
            bwd[j] = acc;
        }
    }
    // Padded window for output k is [k, k + width - 1].
    (0..n).map(|k| ext.pick(bwd[k], fwd[k + width - 1])).collect()
}

/// Applies [`filter_line`] along every axis of a row-major array.
pub fn filter_separable(values: &[f64], shape: &[usize], radii: &[usize], ext: Extremum) -> Vec<f64> {
    let mut cur = values.to_vec();
    let n = shape.len();
    for axis in 0..n {
        let r = radii[axis];
        if r == 0 {
            continue;
        }
        let inner: usize = shape[axis + 1..].iter().product();
        let len = shape[axis];
        let block = len * inner;
        let mut next = vec![0.0; cur.len()];
        next.par_chunks_mut(block)
            .zip(cur.par_chunks(block))
            .for_each(|(dst, src)| {
                let mut buf = vec![0.0; len];
                for j in 0..inner {
                    for k in 0..len {
                        buf[k] = src[k * inner + j];
                    }
                    let out = filter_line(&buf, r, ext);
                    for k in 0..len {
                        dst[k * inner + j] = out[k];
                    }
                }
            });
        cur = next;
    }
    cur
}
