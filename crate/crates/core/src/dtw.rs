//! Dynamic time warping.
//!
//! The distance is the square root of the minimal sum of squared aligned
//! differences over all warping paths that start at the first pair, end at
//! the last pair and advance by one of `(1,0)`, `(0,1)`, `(1,1)` per step.
//! Squared costs are accumulated and the root is taken once at the end.
//!
//! An optional Sakoe-Chiba band restricts cells to `|i - j| <= band`.
//!
//! Indices here are 0-based, so a path runs from `(0, 0)` to `(m-1, n-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::check_samples;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarpingPath {
    pub pairs: Vec<(usize, usize)>,
    pub len_x: usize,
    pub len_y: usize,
}

impl WarpingPath {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks the boundary, step and length conditions.
    pub fn is_valid(&self) -> bool {
        let (m, n) = (self.len_x, self.len_y);
        if m == 0 || n == 0 {
            return false;
        }
        if self.pairs.first() != Some(&(0, 0)) || self.pairs.last() != Some(&(m - 1, n - 1)) {
            return false;
        }
        let steps_ok = self.pairs.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            matches!(
                (b.0.checked_sub(a.0), b.1.checked_sub(a.1)),
                (Some(1), Some(0)) | (Some(0), Some(1)) | (Some(1), Some(1))
            )
        });
        let k = self.pairs.len();
        steps_ok && k >= m.max(n) && k < m + n
    }

    /// Square root of the summed squared differences along the path.
    pub fn cost(&self, x: &[f64], y: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(p, q)| {
                let d = x[p] - y[q];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The same alignment seen from the other sequence.
    pub fn transposed(&self) -> WarpingPath {
        WarpingPath {
            pairs: self.pairs.iter().map(|&(p, q)| (q, p)).collect(),
            len_x: self.len_y,
            len_y: self.len_x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    pub distance: f64,
    pub path: WarpingPath,
}

fn validate(x: &[f64], y: &[f64], band: Option<usize>) -> Result<()> {
    check_samples(x)?;
    check_samples(y)?;
    if let Some(band) = band {
        let diff = x.len().abs_diff(y.len());
        if band < diff {
            return Err(Error::BandTooNarrow { band, diff });
        }
    }
    Ok(())
}

#[inline]
fn column_range(i: usize, n: usize, band: Option<usize>) -> (usize, usize) {
    match band {
        None => (0, n - 1),
        Some(w) => (i.saturating_sub(w), (i + w).min(n - 1)),
    }
}

/// DTW distance and optimal warping path.
///
/// When several predecessors tie, the backtrack prefers the diagonal, then
/// the step that advanced `x`, then the step that advanced `y`.
pub fn dtw(x: &[f64], y: &[f64], band: Option<usize>) -> Result<DtwResult> {
    validate(x, y, band)?;
    let (m, n) = (x.len(), y.len());
    let mut acc = vec![f64::INFINITY; m * n];
    for i in 0..m {
        let (lo, hi) = column_range(i, n, band);
        for j in lo..=hi {
            let d = x[i] - y[j];
            let c = d * d;
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    acc[(i - 1) * n + j - 1]
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    acc[(i - 1) * n + j]
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    acc[i * n + j - 1]
                } else {
                    f64::INFINITY
                };
                diag.min(up).min(left)
            };
            acc[i * n + j] = c + best;
        }
    }

    let mut pairs = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m - 1, n - 1);
    pairs.push((i, j));
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[(i - 1) * n + j - 1];
            let up = acc[(i - 1) * n + j];
            let left = acc[i * n + j - 1];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        pairs.push((i, j));
    }
    pairs.reverse();

    Ok(DtwResult {
        distance: acc[m * n - 1].sqrt(),
        path: WarpingPath {
            pairs,
            len_x: m,
            len_y: n,
        },
    })
}

/// DTW distance using two rows of the cost matrix.
///
/// Bit-identical to `dtw(x, y, band)?.distance`.
pub fn dtw_distance_only(x: &[f64], y: &[f64], band: Option<usize>) -> Result<f64> {
    validate(x, y, band)?;
    Ok(distance_rows(x, y, band, f64::INFINITY).expect("unbounded run never abandons"))
}

/// Like [`dtw_distance_only`] but gives up once the distance is certain to
/// exceed `cutoff`, returning `None`.
pub fn dtw_distance_bounded(
    x: &[f64],
    y: &[f64],
    band: Option<usize>,
    cutoff: f64,
) -> Result<Option<f64>> {
    validate(x, y, band)?;
    Ok(distance_rows(x, y, band, cutoff))
}

fn distance_rows(x: &[f64], y: &[f64], band: Option<usize>, cutoff: f64) -> Option<f64> {
    let n = y.len();
    let limit = if cutoff.is_finite() {
        cutoff * cutoff
    } else {
        f64::INFINITY
    };
    let mut prev = vec![f64::INFINITY; n];
    let mut cur = vec![f64::INFINITY; n];

    let (_, hi0) = column_range(0, n, band);
    let mut run = 0.0;
    for j in 0..=hi0 {
        let d = x[0] - y[j];
        run = d * d + if j == 0 { 0.0 } else { run };
        cur[j] = run;
    }
    if cur[0] > limit {
        return None;
    }

    for (i, &xi) in x.iter().enumerate().skip(1) {
        std::mem::swap(&mut prev, &mut cur);
        let (lo, hi) = column_range(i, n, band);
        if lo > 0 {
            cur[lo - 1] = f64::INFINITY;
        }
        let row = &mut cur[lo..=hi];
        let ys = &y[lo..=hi];
        let up_row = &prev[lo..=hi];
        let mut diag = if lo > 0 { prev[lo - 1] } else { f64::INFINITY };
        let mut left = f64::INFINITY;
        let mut row_min = f64::INFINITY;
        for ((slot, &yj), &up) in row.iter_mut().zip(ys).zip(up_row) {
            let d = xi - yj;
            let mut best = if diag < up { diag } else { up };
            if left < best {
                best = left;
            }
            let v = d * d + best;
            *slot = v;
            diag = up;
            left = v;
            if v < row_min {
                row_min = v;
            }
        }
        if row_min > limit {
            return None;
        }
    }
    let total = cur[n - 1];
    (total <= limit).then(|| total.sqrt())
}

/// Point-wise euclidean distance; equal lengths only.
pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}
