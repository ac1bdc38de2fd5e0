use crate::detectors::linear::regularized_pinv_filter;
use crate::detectors::{residual_norm, Detector, DetectorOutput, FilterDesign, OrderingPattern};
use crate::error::{Error, Result};
use crate::linalg::{select_columns, CMat, CVec, C64};
use crate::txchain::Qpsk;

/// Successive interference cancellation with refiltering on the deflated channel.
///
/// Stage `k` detects stream `order[k]` with a ZF or MMSE filter designed for the
/// columns `order[k..]`, after subtracting the already detected streams.
#[derive(Debug, Clone)]
pub struct SicDetector {
    g: CMat,
    order: Vec<usize>,
    /// Conjugated stage filters, one row per stage.
    stage_filters: CMat,
    modulation: Qpsk,
}

impl SicDetector {
    pub fn new(
        g: &CMat,
        symbol_power: f64,
        noise_var: f64,
        ordering: &OrderingPattern,
        design: FilterDesign,
        modulation: Qpsk,
    ) -> Result<Self> {
        let n = g.ncols();
        if ordering.len() != n {
            return Err(Error::dims("SIC ordering", n, ordering.len()));
        }
        let ratio = match design {
            FilterDesign::Zf => 0.0,
            FilterDesign::Mmse => {
                if !(symbol_power > 0.0) {
                    return Err(Error::domain("symbol_power", "must be positive"));
                }
                noise_var / symbol_power
            }
            FilterDesign::Rmf => {
                return Err(Error::domain("filter_design", "SIC supports ZF or MMSE"));
            }
        };
        let mut stage_filters = CMat::zeros(n, g.nrows());
        for k in 0..n {
            let remaining = select_columns(g, &ordering.order[k..]);
            let w = regularized_pinv_filter(&remaining, ratio).ok_or(Error::Singular { design: design.name() })?;
            stage_filters.set_row(k, &w.column(0).adjoint());
        }
        Ok(Self {
            g: g.clone(),
            order: ordering.order.clone(),
            stage_filters,
            modulation,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Detects with the cancellation stage fed by `feedback` instead of the
    /// decisions when given (genie checks). Returns `(symbols, stage inputs r_k)`.
    pub fn detect_with_trace(&self, r: &CVec, feedback: Option<&CVec>) -> (CVec, Vec<CVec>) {
        let n = self.order.len();
        let mut s = CVec::zeros(n);
        let mut rk = r.clone();
        let mut trace = Vec::with_capacity(n);
        for (k, &j) in self.order.iter().enumerate() {
            trace.push(rk.clone());
            let z: C64 = (self.stage_filters.row(k) * &rk)[(0, 0)];
            s[j] = self.modulation.quantize(z);
            let cancel = feedback.map_or(s[j], |f| f[j]);
            rk.axpy(-cancel, &self.g.column(j), C64::new(1.0, 0.0));
        }
        (s, trace)
    }
}

impl Detector for SicDetector {
    fn detect(&self, r: &CVec) -> DetectorOutput {
        DetectorOutput::single(self.detect_with_trace(r, None).0)
    }
}

/// Runs several SIC branches and keeps the candidate closest to `r`.
#[derive(Debug, Clone)]
pub struct MbSicDetector {
    g: CMat,
    branches: Vec<SicDetector>,
}

impl MbSicDetector {
    /// Branch `l` (0-based) uses the base ordering rotated left by `l`.
    pub fn new(
        g: &CMat,
        symbol_power: f64,
        noise_var: f64,
        base: &OrderingPattern,
        branches: usize,
        design: FilterDesign,
        modulation: Qpsk,
    ) -> Result<Self> {
        if branches == 0 || branches > base.len().max(1) {
            return Err(Error::domain(
                "branches",
                format!("must be in 1..={} for {} streams", base.len(), base.len()),
            ));
        }
        let orderings: Vec<OrderingPattern> = (0..branches).map(|l| base.shifted(l)).collect();
        Self::with_orderings(g, symbol_power, noise_var, &orderings, design, modulation)
    }

    /// Explicit branch orderings, e.g. every permutation for an exhaustive set.
    pub fn with_orderings(
        g: &CMat,
        symbol_power: f64,
        noise_var: f64,
        orderings: &[OrderingPattern],
        design: FilterDesign,
        modulation: Qpsk,
    ) -> Result<Self> {
        if orderings.is_empty() {
            return Err(Error::domain("branches", "at least one branch is required"));
        }
        let branches = orderings
            .iter()
            .map(|o| SicDetector::new(g, symbol_power, noise_var, o, design, modulation))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { g: g.clone(), branches })
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

impl Detector for MbSicDetector {
    fn detect(&self, r: &CVec) -> DetectorOutput {
        let mut best: Option<(usize, CVec)> = None;
        let mut distances = Vec::with_capacity(self.branches.len());
        for (l, b) in self.branches.iter().enumerate() {
            let s = b.detect_with_trace(r, None).0;
            let d = residual_norm(&self.g, r, &s);
            if best.is_none() || d < distances[best.as_ref().unwrap().0] {
                best = Some((l, s));
            }
            distances.push(d);
        }
        let (l, symbols) = best.expect("at least one branch");
        DetectorOutput {
            symbols,
            branch_distances: distances,
            selected_branch: Some(l),
        }
    }
}

pub fn sic_detect(
    g: &CMat,
    r: &CVec,
    ordering: &OrderingPattern,
    design: FilterDesign,
    symbol_power: f64,
    noise_var: f64,
) -> Result<DetectorOutput> {
    if g.nrows() != r.len() {
        return Err(Error::dims("sic_detect", g.nrows(), r.len()));
    }
    let det = SicDetector::new(g, symbol_power, noise_var, ordering, design, Qpsk::new(symbol_power))?;
    Ok(det.detect(r))
}

pub fn mb_sic_detect(
    g: &CMat,
    r: &CVec,
    base: &OrderingPattern,
    branches: usize,
    design: FilterDesign,
    symbol_power: f64,
    noise_var: f64,
) -> Result<DetectorOutput> {
    if g.nrows() != r.len() {
        return Err(Error::dims("mb_sic_detect", g.nrows(), r.len()));
    }
    let det = MbSicDetector::new(
        g,
        symbol_power,
        noise_var,
        base,
        branches,
        design,
        Qpsk::new(symbol_power),
    )?;
    Ok(det.detect(r))
}
