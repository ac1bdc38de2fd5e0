use crate::detectors::{Detector, DetectorOutput};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::txchain::Qpsk;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDesign {
    /// Receive matched filter, `W = G`.
    Rmf,
    /// Zero forcing, `W = G (G^H G)^-1`.
    Zf,
    /// MMSE, `W = G (G^H G + sigma_n^2 / sigma_s^2 I)^-1`.
    Mmse,
}

impl FilterDesign {
    pub fn name(self) -> &'static str {
        match self {
            FilterDesign::Rmf => "RMF",
            FilterDesign::Zf => "ZF",
            FilterDesign::Mmse => "MMSE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReceiveFilterSet {
    pub design: FilterDesign,
    /// `N_A x K N_U`; column `j` is the filter of stream `j`.
    pub w: CMat,
    pub symbol_power: f64,
    pub noise_var: f64,
}

/// `G (G^H G + ratio I)^-1`, or `None` when the regularized Gram matrix is singular.
pub(crate) fn regularized_pinv_filter(g: &CMat, ratio: f64) -> Option<CMat> {
    let n = g.ncols();
    let mut gram = g.adjoint() * g;
    for i in 0..n {
        gram[(i, i)] += C64::new(ratio, 0.0);
    }
    let inv = linalg::inverse_hpd(&gram)?;
    Some(g * inv)
}

pub fn compute_receive_filter(
    g: &CMat,
    symbol_power: f64,
    noise_var: f64,
    design: FilterDesign,
) -> Result<ReceiveFilterSet> {
    if !(symbol_power > 0.0) {
        return Err(Error::domain("symbol_power", "must be positive"));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::domain("noise_var", "must be >= 0"));
    }
    let w = match design {
        FilterDesign::Rmf => g.clone(),
        FilterDesign::Zf => regularized_pinv_filter(g, 0.0).ok_or(Error::Singular { design: "ZF" })?,
        FilterDesign::Mmse => {
            regularized_pinv_filter(g, noise_var / symbol_power).ok_or(Error::Singular { design: "MMSE" })?
        }
    };
    Ok(ReceiveFilterSet {
        design,
        w,
        symbol_power,
        noise_var,
    })
}

/// Slices `W^H r` componentwise.
#[derive(Debug, Clone)]
pub struct LinearDetector {
    w_h: CMat,
    modulation: Qpsk,
}

impl LinearDetector {
    pub fn new(filters: &ReceiveFilterSet, modulation: Qpsk) -> Self {
        Self::from_filters(&filters.w, modulation)
    }

    /// From an explicit `N_A x streams` filter matrix (e.g. adaptively trained).
    pub fn from_filters(w: &CMat, modulation: Qpsk) -> Self {
        Self {
            w_h: w.adjoint(),
            modulation,
        }
    }

    pub fn soft_output(&self, r: &CVec) -> CVec {
        &self.w_h * r
    }
}

impl Detector for LinearDetector {
    fn detect(&self, r: &CVec) -> DetectorOutput {
        let z = self.soft_output(r);
        DetectorOutput::single(z.map(|x| self.modulation.quantize(x)))
    }

    fn detect_block(&self, r: &CMat) -> CMat {
        (&self.w_h * r).map(|x| self.modulation.quantize(x))
    }
}

pub fn linear_detect(filters: &ReceiveFilterSet, r: &CVec, modulation: Qpsk) -> Result<DetectorOutput> {
    if filters.w.nrows() != r.len() {
        return Err(Error::dims("linear_detect", filters.w.nrows(), r.len()));
    }
    Ok(LinearDetector::new(filters, modulation).detect(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, complex_gaussian_matrix, identity};
    use crate::rng::substream;

    #[test]
    fn zf_of_identity() {
        let f = compute_receive_filter(&identity(3), 1.0, 0.1, FilterDesign::Zf).unwrap();
        assert!((f.w - identity(3)).norm() < 1e-14);
    }

    #[test]
    fn scalar_mmse() {
        let g = CMat::from_element(1, 1, c(1.0, 0.0));
        let f = compute_receive_filter(&g, 1.0, 0.5, FilterDesign::Mmse).unwrap();
        assert!((f.w[(0, 0)].re - 1.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn rmf_is_channel() {
        let g = complex_gaussian_matrix(5, 3, &mut substream(1, &[]));
        let f = compute_receive_filter(&g, 1.0, 0.1, FilterDesign::Rmf).unwrap();
        assert_eq!(f.w, g);
    }

    #[test]
    fn zf_singular() {
        let mut g = complex_gaussian_matrix(4, 2, &mut substream(2, &[]));
        let col = g.column(0).into_owned();
        g.set_column(1, &col);
        let err = compute_receive_filter(&g, 1.0, 0.1, FilterDesign::Zf).unwrap_err();
        assert!(matches!(err, Error::Singular { design: "ZF" }));
        assert!(err.to_string().contains("ZF"));
    }

    #[test]
    fn noiseless_zf_recovers() {
        let mut rng = substream(3, &[]);
        let q = Qpsk::default();
        let g = complex_gaussian_matrix(6, 4, &mut rng);
        let s = CVec::from_vec(vec![q.map(0, 1), q.map(1, 1), q.map(0, 0), q.map(1, 0)]);
        let f = compute_receive_filter(&g, 1.0, 0.0, FilterDesign::Zf).unwrap();
        let out = linear_detect(&f, &(&g * &s), q).unwrap();
        assert_eq!(out.symbols, s);
    }

    #[test]
    fn small_noise_identity() {
        let q = Qpsk::default();
        let a = q.map(1, 0);
        let f = compute_receive_filter(&identity(1), 1.0, 0.01, FilterDesign::Zf).unwrap();
        let r = CVec::from_vec(vec![a + c(0.2, -0.3)]);
        assert_eq!(linear_detect(&f, &r, q).unwrap().symbols[0], a);
    }

    #[test]
    fn rmf_orthogonal_columns() {
        let q = Qpsk::default();
        // orthogonal but unequal-norm columns
        let g = CMat::from_row_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
            ],
        );
        let gram = g.adjoint() * &g;
        assert!(gram[(0, 1)].norm() < 1e-15);
        let s = CVec::from_vec(vec![q.map(1, 1), q.map(0, 1)]);
        let f = compute_receive_filter(&g, 1.0, 0.0, FilterDesign::Rmf).unwrap();
        assert_eq!(linear_detect(&f, &(&g * &s), q).unwrap().symbols, s);
    }
}
