//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative pivot floor below which a Cholesky factor is treated as singular.
const PIVOT_FLOOR: f64 = 1e-13;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One sample of a circularly symmetric complex Gaussian with `E|x|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries, filled column by column.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::new(v, 0.0)),
    ))
}

/// Columns of `m` at the given indices, in the given order.
pub fn select_columns(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = select_columns(&eig.eigenvectors, &order);
    (values, vectors)
}

/// Hermitian square root `S = V diag(sqrt(l)) V^H` of a Hermitian PSD matrix.
///
/// Eigenvalues down to `-1e-10 * max(1, ||theta||_F)` are clamped to zero; anything
/// more negative is rejected.
pub fn hermitian_sqrt(theta: &CMat) -> Result<CMat> {
    if !theta.is_square() {
        return Err(Error::dims(
            "hermitian_sqrt",
            "square matrix",
            format!("{}x{}", theta.nrows(), theta.ncols()),
        ));
    }
    let scale = theta.norm().max(1.0);
    if hermitian_defect(theta) > 1e-10 * scale {
        return Err(Error::Numerical("matrix square root of non-Hermitian input".into()));
    }
    let (values, vectors) = hermitian_eigen(theta);
    if let Some(&min) = values.last() {
        if min < -1e-10 * scale {
            return Err(Error::Numerical(format!(
                "matrix square root of non-PSD input (eigenvalue {min:e})"
            )));
        }
    }
    let roots: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let scaled = &vectors * real_diag(&roots);
    let s = scaled * vectors.adjoint();
    // symmetrize away rounding
    Ok((&s + s.adjoint()) * C64::new(0.5, 0.0))
}

/// Solves `A X = B` for Hermitian positive definite `A`.
///
/// Returns `None` when the Cholesky factorization fails or a pivot falls below
/// `PIVOT_FLOOR` relative to the largest one.
pub fn solve_hpd(a: &CMat, b: &CMat) -> Option<CMat> {
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut max_p = 0.0f64;
    let mut min_p = f64::INFINITY;
    for i in 0..l.nrows() {
        let p = l[(i, i)].norm_sqr();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
    }
    if !(min_p > PIVOT_FLOOR * max_p) {
        return None;
    }
    Some(chol.solve(b))
}

/// Inverse of a Hermitian positive definite matrix, `None` if singular.
pub fn inverse_hpd(a: &CMat) -> Option<CMat> {
    solve_hpd(a, &identity(a.nrows()))
}

/// Solves a general square system by LU, `None` if singular.
pub fn solve_general(a: &CMat, b: &CMat) -> Option<CMat> {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut max_p = 0.0f64;
    let mut min_p = f64::INFINITY;
    for i in 0..u.nrows() {
        let p = u[(i, i)].norm();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
    }
    if !(min_p > 1e-14 * max_p) {
        return None;
    }
    lu.solve(b)
}

/// Modified Gram-Schmidt on the columns of `m`.
///
/// Columns whose residual norm falls below `tol` times the norm of the original
/// column are dropped; the returned matrix has the surviving orthonormal columns.
pub fn gram_schmidt(m: &CMat, tol: f64) -> CMat {
    let mut basis: Vec<CVec> = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        let original = col.norm();
        let mut v = col;
        for q in &basis {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let n = v.norm();
        if original > 0.0 && n > tol * original && n > f64::MIN_POSITIVE {
            basis.push(v / C64::new(n, 0.0));
        }
    }
    if basis.is_empty() {
        return CMat::zeros(m.nrows(), 0);
    }
    CMat::from_columns(&basis)
}

/// Upper-triangular `R` with `m = Q R` for the thin QR factorization, along with `Q`.
pub fn thin_qr(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Convenience conversion of a real matrix.
pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sqrt_of_identity_is_identity() {
        let s = hermitian_sqrt(&identity(5)).unwrap();
        assert!((s - identity(5)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_of_diag() {
        let s = hermitian_sqrt(&real_diag(&[4.0, 1.0])).unwrap();
        assert!((s - real_diag(&[2.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_negative_definite() {
        assert!(matches!(
            hermitian_sqrt(&real_diag(&[1.0, -0.5])),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn gaussian_has_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let p: f64 = (0..n).map(|_| complex_gaussian(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        // std error of |x|^2 for unit exponential is 1/sqrt(n)
        assert!((p - 1.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn hpd_solve_flags_singular() {
        let a = CMat::from_element(2, 2, c(1.0, 0.0));
        assert!(solve_hpd(&a, &identity(2)).is_none());
        assert!(solve_hpd(&identity(2), &identity(2)).is_some());
    }

    #[test]
    fn gram_schmidt_drops_dependent_columns() {
        let m = CMat::from_columns(&[
            CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            CVec::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]),
            CVec::from_vec(vec![c(0.0, 0.0), c(0.0, 3.0)]),
        ]);
        let q = gram_schmidt(&m, 1e-12);
        assert_eq!(q.ncols(), 2);
        assert!((q.adjoint() * &q - identity(2)).norm() < 1e-12);
    }
}
