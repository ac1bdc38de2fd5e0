use crate::detectors::{Detector, DetectorOutput};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Largest candidate set the exhaustive search will enumerate.
pub const ML_SEARCH_LIMIT: usize = 1_000_000;

/// Exhaustive maximum-likelihood search over `alphabet^n`.
///
/// Candidates are visited in lexicographic order with stream 0 as the most
/// significant digit; the first minimum wins.
#[derive(Debug, Clone)]
pub struct MlDetector {
    g: CMat,
    alphabet: Vec<C64>,
}

impl MlDetector {
    pub fn new(g: &CMat, alphabet: &[C64]) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::domain("alphabet", "must not be empty"));
        }
        let size = (alphabet.len() as f64).powi(g.ncols() as i32);
        if size > ML_SEARCH_LIMIT as f64 {
            return Err(Error::Capacity(format!(
                "ML search over {}^{} candidates exceeds {ML_SEARCH_LIMIT}",
                alphabet.len(),
                g.ncols()
            )));
        }
        Ok(Self {
            g: g.clone(),
            alphabet: alphabet.to_vec(),
        })
    }
}

impl Detector for MlDetector {
    fn detect(&self, r: &CVec) -> DetectorOutput {
        let n = self.g.ncols();
        let m = self.alphabet.len();
        let mut digits = vec![0usize; n];
        let mut cand = CVec::from_element(n, self.alphabet[0]);
        // residual r - G s, updated incrementally as digits change
        let mut resid = r - &self.g * &cand;
        let mut best = (resid.norm_squared(), cand.clone());
        loop {
            let mut pos = n;
            loop {
                if pos == 0 {
                    return DetectorOutput::single(best.1);
                }
                pos -= 1;
                digits[pos] += 1;
                let next = if digits[pos] == m { 0 } else { digits[pos] };
                let delta = self.alphabet[next] - cand[pos];
                resid.axpy(-delta, &self.g.column(pos), C64::new(1.0, 0.0));
                cand[pos] = self.alphabet[next];
                if digits[pos] < m {
                    break;
                }
                digits[pos] = 0;
            }
            let d = resid.norm_squared();
            if d < best.0 {
                best = (d, cand.clone());
            }
        }
    }
}

pub fn ml_detect_oracle(g: &CMat, r: &CVec, alphabet: &[C64]) -> Result<DetectorOutput> {
    if g.nrows() != r.len() {
        return Err(Error::dims("ml_detect_oracle", g.nrows(), r.len()));
    }
    Ok(MlDetector::new(g, alphabet)?.detect(r))
}
