//! Pilot-aided estimation of the channel matrix and of the receive filters.
//!
//! Recursive estimators start from `P = delta^-1 I` ([`DEFAULT_DELTA`]), so at
//! `lambda = 1` they track the batch least-squares solution of the
//! regularized correlation `sum s s^H + delta lambda^i I`.

mod channel;
mod filter;
mod reduced_rank;

pub use channel::{
    lms_channel_update, ls_channel_estimate, regularized_ls_channel_estimate, rls_channel_update, ChannelLms,
    ChannelRls,
};
pub use filter::{
    lms_filter_update, ls_filter_estimate, regularized_ls_filter_estimate, rls_filter_update, FilterLms, FilterRls,
};
pub use reduced_rank::{
    build_projection, jio_rls_update, reduced_rank_rls_update, JioRls, KrylovRls, ProjectionMethod, ProjectionSpec,
    ReducedRankRls, WeightedStats, KRYLOV_TOLERANCE,
};

/// Initial regularization of the inverse correlation matrices.
pub const DEFAULT_DELTA: f64 = 0.01;

/// Warning text when an LMS step size is outside `(0, 2 / tr(R))`.
pub fn lms_step_warning(mu: f64, correlation_trace: f64) -> Option<String> {
    let bound = 2.0 / correlation_trace;
    if mu > 0.0 && mu < bound {
        None
    } else {
        Some(format!(
            "LMS step size {mu} outside (0, {bound:.4}); the recursion may diverge"
        ))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> crate::Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(crate::Error::domain("lambda", "forgetting factor must lie in (0, 1]"))
    }
}

pub(crate) fn check_delta(delta: f64) -> crate::Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::domain("delta", "must be positive"))
    }
}
