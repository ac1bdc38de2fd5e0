use itertools::Itertools;

use crate::detectors::linear::regularized_pinv_filter;
use crate::detectors::{residual_norm, Detector, FilterDesign, SicDetector};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::txchain::Qpsk;

/// Exhaustive ordering search is limited to this many streams (720 orderings).
pub const EXHAUSTIVE_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingCriterion {
    /// Descending channel column norm.
    ColumnNorm,
    /// Descending `sigma_s^2 ||g_j||^2 / sigma_n^2`.
    Snr,
    /// Descending per-stream output SINR of the initial MMSE filter.
    Sinr,
    /// Best of all orderings by final Euclidean distance on a given received vector.
    Exhaustive,
}

impl OrderingCriterion {
    pub fn name(self) -> &'static str {
        match self {
            OrderingCriterion::ColumnNorm => "norm",
            OrderingCriterion::Snr => "snr",
            OrderingCriterion::Sinr => "sinr",
            OrderingCriterion::Exhaustive => "exhaustive",
        }
    }
}

/// Detection order of the streams. `order[k]` is the stream detected at stage `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingPattern {
    pub order: Vec<usize>,
    pub criterion: OrderingCriterion,
    /// Circular left shift applied to the base ordering (0 for the base itself).
    pub shift: usize,
}

impl OrderingPattern {
    pub fn natural(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            criterion: OrderingCriterion::ColumnNorm,
            shift: 0,
        }
    }

    pub fn from_order(order: Vec<usize>, criterion: OrderingCriterion) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || seen[i] {
                return Err(Error::domain("ordering", "not a permutation of the streams"));
            }
            seen[i] = true;
        }
        Ok(Self {
            order,
            criterion,
            shift: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The base ordering rotated left by `by` positions.
    pub fn shifted(&self, by: usize) -> Self {
        let mut order = self.order.clone();
        let n = order.len();
        if n > 0 {
            order.rotate_left(by % n);
        }
        Self {
            order,
            criterion: self.criterion,
            shift: self.shift + by,
        }
    }
}

/// Indices sorted by descending key; equal keys keep ascending index order.
fn descending(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
    idx
}

/// Per-stream output SINR of the linear MMSE filter.
pub(crate) fn mmse_sinr(g: &CMat, symbol_power: f64, noise_var: f64) -> Result<Vec<f64>> {
    let w = regularized_pinv_filter(g, noise_var / symbol_power).ok_or(Error::Singular { design: "MMSE" })?;
    let b = w.adjoint() * g;
    Ok((0..g.ncols())
        .map(|j| {
            let wj = w.column(j);
            let signal = symbol_power * b[(j, j)].norm_sqr();
            let interference: f64 = (0..g.ncols())
                .filter(|&m| m != j)
                .map(|m| symbol_power * b[(j, m)].norm_sqr())
                .sum();
            let noise = noise_var * wj.norm_squared();
            let denom = interference + noise;
            if denom > 0.0 {
                signal / denom
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

/// Computes a detection ordering.
///
/// `received` is only consulted by [`OrderingCriterion::Exhaustive`], which runs an
/// MMSE-SIC for every permutation and keeps the one with the smallest
/// `||r - G s||`; it is an oracle limited to [`EXHAUSTIVE_LIMIT`] streams.
pub fn compute_ordering(
    g: &CMat,
    symbol_power: f64,
    noise_var: f64,
    criterion: OrderingCriterion,
    received: Option<&CVec>,
) -> Result<OrderingPattern> {
    let n = g.ncols();
    let norms: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    let order = match criterion {
        OrderingCriterion::ColumnNorm => descending(&norms),
        OrderingCriterion::Snr => {
            let snr: Vec<f64> = norms.iter().map(|nrm| symbol_power * nrm * nrm / noise_var).collect();
            descending(&snr)
        }
        OrderingCriterion::Sinr => descending(&mmse_sinr(g, symbol_power, noise_var)?),
        OrderingCriterion::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::Capacity(format!(
                    "exhaustive ordering over {n} streams (limit {EXHAUSTIVE_LIMIT})"
                )));
            }
            let r =
                received.ok_or_else(|| Error::domain("received", "exhaustive ordering needs the received vector"))?;
            let modulation = Qpsk::new(symbol_power);
            let mut best: Option<(f64, Vec<usize>)> = None;
            for perm in (0..n).permutations(n) {
                let pattern = OrderingPattern::from_order(perm.clone(), criterion)?;
                let sic = SicDetector::new(g, symbol_power, noise_var, &pattern, FilterDesign::Mmse, modulation)?;
                let d = residual_norm(g, r, &sic.detect(r).symbols);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, perm));
                }
            }
            best.map(|(_, p)| p).unwrap_or_default()
        }
    };
    Ok(OrderingPattern {
        order,
        criterion,
        shift: 0,
    })
}
