//! Hard-decision multiuser detectors.
//!
//! Filters depend only on the channel and the noise level, so every detector is
//! prepared once per packet and then applied to each received vector.

mod df;
mod linear;
mod ml;
mod ordering;
mod sic;

pub use df::{df_detect, DfDetector, DfMode};
pub use linear::{compute_receive_filter, linear_detect, FilterDesign, LinearDetector, ReceiveFilterSet};
pub use ml::{ml_detect_oracle, MlDetector, ML_SEARCH_LIMIT};
pub use ordering::{compute_ordering, OrderingCriterion, OrderingPattern, EXHAUSTIVE_LIMIT};
pub use sic::{mb_sic_detect, sic_detect, MbSicDetector, SicDetector};

use crate::linalg::{CMat, CVec};

/// Result of detecting one received vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// Hard symbol decisions in natural stream order.
    pub symbols: CVec,
    /// Euclidean distance `||r - G s_l||` of each candidate (multi-branch only).
    pub branch_distances: Vec<f64>,
    /// Index of the selected branch (multi-branch only).
    pub selected_branch: Option<usize>,
}

impl DetectorOutput {
    pub fn single(symbols: CVec) -> Self {
        Self {
            symbols,
            branch_distances: Vec::new(),
            selected_branch: None,
        }
    }
}

/// A detector prepared for one channel realization.
pub trait Detector: Send + Sync {
    fn detect(&self, r: &CVec) -> DetectorOutput;

    /// Detects every column of `r`, returning hard symbols as columns.
    fn detect_block(&self, r: &CMat) -> CMat {
        let cols: Vec<CVec> = r
            .column_iter()
            .map(|col| self.detect(&col.into_owned()).symbols)
            .collect();
        CMat::from_columns(&cols)
    }
}

/// Euclidean distance `||r - G s||`.
pub fn residual_norm(g: &CMat, r: &CVec, s: &CVec) -> f64 {
    (r - g * s).norm()
}
