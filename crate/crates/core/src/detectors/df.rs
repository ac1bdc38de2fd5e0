use crate::detectors::{compute_receive_filter, Detector, DetectorOutput, FilterDesign};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::txchain::Qpsk;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfMode {
    /// Successive cancellation through a triangular feedback matrix.
    Successive,
    /// Parallel cancellation of every other stream using the initial decisions.
    Parallel,
}

impl DfMode {
    pub fn name(self) -> &'static str {
        match self {
            DfMode::Successive => "S-DF",
            DfMode::Parallel => "P-DF",
        }
    }
}

/// Decision feedback: `s = slice(W^H r - F^H s_o)`.
///
/// `F^H` is `W^H G` with its diagonal removed (parallel) or with only the
/// strictly upper triangle kept (successive). In successive mode the streams are
/// decided from last to first, so the decisions fed back are those of the current
/// pass; the last stream sees no feedback and equals the initial decision.
#[derive(Debug, Clone)]
pub struct DfDetector {
    w_h: CMat,
    /// The matrix applied to the fed-back decisions, i.e. `F^H`.
    feedback: CMat,
    mode: DfMode,
    modulation: Qpsk,
}

impl DfDetector {
    pub fn new(
        g: &CMat,
        symbol_power: f64,
        noise_var: f64,
        mode: DfMode,
        design: FilterDesign,
        modulation: Qpsk,
    ) -> Result<Self> {
        let filters = compute_receive_filter(g, symbol_power, noise_var, design)?;
        let w_h = filters.w.adjoint();
        let mut feedback = &w_h * g;
        let n = feedback.nrows();
        for i in 0..n {
            for j in 0..n {
                let keep = match mode {
                    DfMode::Parallel => i != j,
                    DfMode::Successive => j > i,
                };
                if !keep {
                    feedback[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
        Ok(Self {
            w_h,
            feedback,
            mode,
            modulation,
        })
    }

    /// From explicit `W` and `F^H` (e.g. `F = 0`).
    pub fn from_parts(w: &CMat, feedback: CMat, mode: DfMode, modulation: Qpsk) -> Result<Self> {
        if feedback.nrows() != w.ncols() || feedback.ncols() != w.ncols() {
            return Err(Error::dims("feedback matrix", w.ncols(), feedback.nrows()));
        }
        Ok(Self {
            w_h: w.adjoint(),
            feedback,
            mode,
            modulation,
        })
    }

    pub fn feedback(&self) -> &CMat {
        &self.feedback
    }

    /// Slicer input `W^H r - F^H s_o` for given decisions `s_o`.
    pub fn slicer_input(&self, r: &CVec, s_o: &CVec) -> CVec {
        &self.w_h * r - &self.feedback * s_o
    }
}

impl Detector for DfDetector {
    fn detect(&self, r: &CVec) -> DetectorOutput {
        let y = &self.w_h * r;
        let symbols = match self.mode {
            DfMode::Parallel => {
                let s_o = y.map(|x| self.modulation.quantize(x));
                (&y - &self.feedback * s_o).map(|x| self.modulation.quantize(x))
            }
            DfMode::Successive => {
                let n = y.len();
                let mut s = CVec::zeros(n);
                for i in (0..n).rev() {
                    let mut z = y[i];
                    for j in i + 1..n {
                        z -= self.feedback[(i, j)] * s[j];
                    }
                    s[i] = self.modulation.quantize(z);
                }
                s
            }
        };
        DetectorOutput::single(symbols)
    }
}

pub fn df_detect(
    g: &CMat,
    r: &CVec,
    mode: DfMode,
    design: FilterDesign,
    symbol_power: f64,
    noise_var: f64,
) -> Result<DetectorOutput> {
    if g.nrows() != r.len() {
        return Err(Error::dims("df_detect", g.nrows(), r.len()));
    }
    let det = DfDetector::new(g, symbol_power, noise_var, mode, design, Qpsk::new(symbol_power))?;
    Ok(det.detect(r))
}
