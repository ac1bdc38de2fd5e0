use crate::error::{Error, Result};
use crate::estimation::{check_delta, check_lambda, FilterRls};
use crate::linalg::{self, CMat, CVec, C64};

/// Relative breakdown tolerance of the Krylov basis construction.
pub const KRYLOV_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMethod {
    /// Principal components of the input correlation.
    Pc,
    /// Krylov subspace of the correlation seeded by the cross-correlation.
    Krylov,
    /// Joint iterative optimization of projection and reduced filter.
    Jio,
}

impl ProjectionMethod {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionMethod::Pc => "pc",
            ProjectionMethod::Krylov => "krylov",
            ProjectionMethod::Jio => "jio",
        }
    }
}

/// A rank-`D` projection with orthonormal columns.
#[derive(Debug, Clone)]
pub struct ProjectionSpec {
    pub method: ProjectionMethod,
    /// Requested rank.
    pub rank: usize,
    /// `N_A x D'` with `D' <= D`.
    pub t: CMat,
    /// Set when the Krylov sequence became dependent before reaching `rank`.
    pub collapsed: bool,
}

impl ProjectionSpec {
    pub fn effective_rank(&self) -> usize {
        self.t.ncols()
    }
}

/// Builds a projection from correlation estimates. `JIO` returns its starting
/// point, the first `D` columns of the identity.
pub fn build_projection(method: ProjectionMethod, r_hat: &CMat, p_hat: &CVec, rank: usize) -> Result<ProjectionSpec> {
    let n = r_hat.nrows();
    if !r_hat.is_square() || p_hat.len() != n {
        return Err(Error::dims("build_projection", n, p_hat.len()));
    }
    if rank == 0 || rank > n {
        return Err(Error::domain("rank", format!("must be in 1..={n}")));
    }
    if linalg::hermitian_defect(r_hat) > 1e-8 * r_hat.norm().max(1.0) {
        return Err(Error::Numerical("correlation estimate is not Hermitian".into()));
    }
    let (t, collapsed) = match method {
        ProjectionMethod::Pc => {
            let (_, vectors) = linalg::hermitian_eigen(r_hat);
            (vectors.columns(0, rank).into_owned(), false)
        }
        ProjectionMethod::Krylov => krylov_basis(r_hat, p_hat, rank)?,
        ProjectionMethod::Jio => (linalg::identity(n).columns(0, rank).into_owned(), false),
    };
    Ok(ProjectionSpec {
        method,
        rank,
        t,
        collapsed,
    })
}

/// Orthonormal basis of `span{t, R t, ..., R^(D-1) t}` with `t = p / ||p||`, by
/// Arnoldi with modified Gram-Schmidt (applied twice).
fn krylov_basis(r_hat: &CMat, p_hat: &CVec, rank: usize) -> Result<(CMat, bool)> {
    let norm = p_hat.norm();
    if !(norm > 0.0) {
        return Err(Error::domain(
            "p_hat",
            "Krylov projection needs a nonzero cross-correlation",
        ));
    }
    let mut basis = vec![p_hat / C64::new(norm, 0.0)];
    let mut collapsed = false;
    while basis.len() < rank {
        let mut w = r_hat * basis.last().expect("nonempty");
        let reference = w.norm();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let rest = w.norm();
        if !(rest > KRYLOV_TOLERANCE * reference) {
            collapsed = true;
            break;
        }
        basis.push(w / C64::new(rest, 0.0));
    }
    Ok((CMat::from_columns(&basis), collapsed))
}

/// Exponentially weighted `R = sum lambda^(i-l) r r^H + delta lambda^i I` and
/// `p_k = sum lambda^(i-l) r s_k^*`, the statistics behind the RLS recursions.
#[derive(Debug, Clone)]
pub struct WeightedStats {
    pub lambda: f64,
    pub r_hat: CMat,
    /// One column per stream.
    pub p_hat: CMat,
    pub samples: usize,
}

impl WeightedStats {
    pub fn new(dim: usize, streams: usize, lambda: f64, delta: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_delta(delta)?;
        Ok(Self {
            lambda,
            r_hat: linalg::identity(dim) * C64::new(delta, 0.0),
            p_hat: CMat::zeros(dim, streams),
            samples: 0,
        })
    }

    pub fn update(&mut self, r: &CVec, s: &CVec) -> Result<()> {
        if r.len() != self.r_hat.nrows() || s.len() != self.p_hat.ncols() {
            return Err(Error::dims("WeightedStats update", self.r_hat.nrows(), r.len()));
        }
        let lam = C64::new(self.lambda, 0.0);
        let one = C64::new(1.0, 0.0);
        self.r_hat.gerc(one, r, r, lam);
        self.p_hat.gerc(one, r, s, lam);
        self.samples += 1;
        Ok(())
    }

    /// Reduced filter `(T^H R T)^-1 T^H p_k`.
    pub fn reduced_solution(&self, t: &CMat, stream: usize) -> Result<CVec> {
        let a = t.adjoint() * &self.r_hat * t;
        let b: CMat = t.adjoint() * self.p_hat.columns(stream, 1);
        let x = linalg::solve_hpd(&a, &b).ok_or(Error::RankDeficient {
            samples: self.samples,
            needed: t.ncols(),
        })?;
        Ok(x.column(0).into_owned())
    }
}

/// RLS on the projected input `T^H r` with a fixed projection.
#[derive(Debug, Clone)]
pub struct ReducedRankRls {
    pub t: CMat,
    pub rls: FilterRls,
}

impl ReducedRankRls {
    pub fn new(t: CMat, streams: usize, lambda: f64, delta: f64) -> Result<Self> {
        let rls = FilterRls::new(t.ncols(), streams, lambda, delta)?;
        Ok(Self { t, rls })
    }

    pub fn update(&mut self, r: &CVec, s: &CVec) -> Result<CVec> {
        if r.len() != self.t.nrows() {
            return Err(Error::dims("ReducedRankRls update", self.t.nrows(), r.len()));
        }
        self.rls.update(&(self.t.adjoint() * r), s)
    }

    /// Equivalent full-length filters `T w`.
    pub fn filters(&self) -> CMat {
        &self.t * &self.rls.w
    }

    pub fn output(&self, r: &CVec) -> CVec {
        self.rls.w.adjoint() * (self.t.adjoint() * r)
    }
}

pub fn reduced_rank_rls_update(state: &mut ReducedRankRls, r: &CVec, s: &CVec) -> Result<CVec> {
    state.update(r, s)
}

/// Krylov-subspace reduced-rank least squares. The projection of each stream is
/// rebuilt from the current weighted statistics whenever filters are requested.
#[derive(Debug, Clone)]
pub struct KrylovRls {
    pub stats: WeightedStats,
    pub rank: usize,
}

impl KrylovRls {
    pub fn new(dim: usize, streams: usize, rank: usize, lambda: f64, delta: f64) -> Result<Self> {
        if rank == 0 || rank > dim {
            return Err(Error::domain("rank", format!("must be in 1..={dim}")));
        }
        Ok(Self {
            stats: WeightedStats::new(dim, streams, lambda, delta)?,
            rank,
        })
    }

    pub fn update(&mut self, r: &CVec, s: &CVec) -> Result<()> {
        self.stats.update(r, s)
    }

    pub fn projections(&self) -> Result<Vec<ProjectionSpec>> {
        (0..self.stats.p_hat.ncols())
            .map(|k| {
                let p = self.stats.p_hat.column(k).into_owned();
                if p.norm() == 0.0 {
                    // no training yet: any basis gives the zero filter
                    return build_projection(ProjectionMethod::Jio, &self.stats.r_hat, &p, self.rank);
                }
                build_projection(ProjectionMethod::Krylov, &self.stats.r_hat, &p, self.rank)
            })
            .collect()
    }

    pub fn filters(&self) -> Result<CMat> {
        let specs = self.projections()?;
        let mut w = CMat::zeros(self.stats.r_hat.nrows(), specs.len());
        for (k, spec) in specs.iter().enumerate() {
            let wbar = self.stats.reduced_solution(&spec.t, k)?;
            w.set_column(k, &(&spec.t * wbar));
        }
        Ok(w)
    }
}

/// Joint iterative optimization of a rank-`D` projection and the reduced filter.
///
/// Per sample and stream: the reduced filter is set to the least-squares solution
/// for the current projection. The projection then takes a gradient step: the
/// filter `a = T w` moves along the residual `d = p - R a` (the full-rank negative
/// gradient) with the exact line-search step `d^H d / d^H R d`, the moved filter
/// becomes the leading column of `T` and the oldest column is dropped. `T` thus
/// spans the `D` most recent filter iterates, as in conjugate-gradient methods,
/// and the reduced filter is re-solved on it.
#[derive(Debug, Clone)]
pub struct JioRls {
    pub stats: WeightedStats,
    pub t: Vec<CMat>,
    pub wbar: Vec<CVec>,
    /// Alternating projection/filter steps per sample (default 1). More steps
    /// drive the filter toward the unconstrained least-squares solution.
    pub inner_steps: usize,
}

impl JioRls {
    pub fn new(dim: usize, streams: usize, rank: usize, lambda: f64, delta: f64) -> Result<Self> {
        if rank == 0 || rank > dim {
            return Err(Error::domain("rank", format!("must be in 1..={dim}")));
        }
        let t0 = linalg::identity(dim).columns(0, rank).into_owned();
        Ok(Self {
            stats: WeightedStats::new(dim, streams, lambda, delta)?,
            t: vec![t0; streams],
            wbar: vec![CVec::zeros(rank); streams],
            inner_steps: 1,
        })
    }

    pub fn rank(&self) -> usize {
        self.wbar.first().map_or(0, |w| w.len())
    }

    /// Returns the a-priori errors, then takes one alternating step per stream.
    pub fn update(&mut self, r: &CVec, s: &CVec) -> Result<CVec> {
        let e = s - self.filters().adjoint() * r;
        self.stats.update(r, s)?;
        for k in 0..self.t.len() {
            if let Ok(w) = self.stats.reduced_solution(&self.t[k], k) {
                self.wbar[k] = w;
            }
            for _ in 0..self.inner_steps {
                self.t_step(k);
            }
        }
        Ok(e)
    }

    /// Projection update of stream `k`; a no-op while the residual vanishes.
    pub fn t_step(&mut self, k: usize) {
        let t = &self.t[k];
        let rank = t.ncols();
        let a = t * &self.wbar[k];
        let d = self.stats.p_hat.column(k) - &self.stats.r_hat * &a;
        let dd = d.norm_squared();
        let drd = d.dotc(&(&self.stats.r_hat * &d)).re;
        if !(dd > 0.0 && drd > 0.0) {
            return;
        }
        let moved = a + d * C64::new(dd / drd, 0.0);
        let mut cand = CMat::zeros(t.nrows(), rank);
        cand.set_column(0, &moved);
        for j in 1..rank {
            cand.set_column(j, &t.column(j - 1));
        }
        let (q, rr) = linalg::thin_qr(&cand);
        let w_new = self
            .stats
            .reduced_solution(&q, k)
            .unwrap_or_else(|_| rr.column(0).into_owned());
        if q.iter()
            .chain(w_new.iter())
            .all(|x| x.re.is_finite() && x.im.is_finite())
        {
            self.t[k] = q;
            self.wbar[k] = w_new;
        }
    }

    /// Equivalent full-length filters `T_k w_k`.
    pub fn filters(&self) -> CMat {
        let cols: Vec<CVec> = self.t.iter().zip(&self.wbar).map(|(t, w)| t * w).collect();
        CMat::from_columns(&cols)
    }

    pub fn projection(&self, k: usize) -> ProjectionSpec {
        ProjectionSpec {
            method: ProjectionMethod::Jio,
            rank: self.rank(),
            t: self.t[k].clone(),
            collapsed: false,
        }
    }
}

pub fn jio_rls_update(state: &mut JioRls, r: &CVec, s: &CVec) -> Result<CVec> {
    state.update(r, s)
}
