//! Geometry of the generalized Stiefel manifold `St_M(n,p)` under the metric
//! `⟨U,V⟩ = tr(UᵀMV)`.
//!
//! Points and tangent vectors carry the product with `M` alongside the
//! matrix itself (`MX`, `MZ`). Every operation that produces a point or a
//! tangent vector keeps that cache in sync, so inner products and
//! projections cost `O(np²)` instead of `O(n²p)`.

use core::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Cholesky, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{ensure_shape, sqrt, sym};
use crate::error::{Error, Result};
use crate::Mat;

/// Default bound on `‖XᵀMX − I‖_F` for a point to count as feasible.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-13;

/// Default relative bound on `‖sym(XᵀMZ)‖_F` for `Z` to count as tangent.
pub const DEFAULT_TANGENCY_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-12;

static NEXT_POINT_ID: AtomicUsize = AtomicUsize::new(0);

/// Identity of a [`ManifoldPoint`]; tangent vectors record the point they
/// are attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PointId(usize);

impl PointId {
    fn fresh() -> Self {
        PointId(NEXT_POINT_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// The SPD matrix `M` defining both the constraint and the metric, with its
/// Cholesky factor cached for repeated solves.
#[derive(Debug, Clone)]
pub struct MetricContext {
    m: Mat,
    chol: Cholesky<f64, Dyn>,
}

/// A point `X` with `XᵀMX = I_p`.
#[derive(Debug, Clone)]
pub struct ManifoldPoint {
    x: Mat,
    mx: Mat,
    id: PointId,
}

/// A tangent vector `Z` at a point `X`, i.e. `XᵀMZ` skew-symmetric.
#[derive(Debug, Clone)]
pub struct TangentVector {
    z: Mat,
    mz: Mat,
    base: PointId,
}

impl MetricContext {
    /// Validates symmetry (relative Frobenius tolerance `1e-12`) and positive
    /// definiteness, then factors `M` once.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                expected: (m.nrows(), m.nrows()),
                found: (m.nrows(), m.ncols()),
            });
        }
        let scale = m.norm();
        let asym = (&m - m.transpose()).norm();
        if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric(asym / scale));
        }
        let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
        for i in 0..m.nrows() {
            let d = chol.l_dirty()[(i, i)];
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(Self { m, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Mat::identity(n, n)).expect("identity is SPD")
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    /// Lower-triangular Cholesky factor `L` with `M = LLᵀ`.
    pub fn cholesky_factor(&self) -> Mat {
        self.chol.l()
    }

    /// `M·A`.
    pub fn apply(&self, a: &Mat) -> Result<Mat> {
        ensure_shape(a, self.n(), a.ncols())?;
        Ok(&self.m * a)
    }

    /// `M⁻¹·B` through the cached factorization.
    pub fn solve(&self, b: &Mat) -> Result<Mat> {
        ensure_shape(b, self.n(), b.ncols())?;
        let out = self.chol.solve(b);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NotPositiveDefinite)
        }
    }

    /// `tr(UᵀMV)`.
    pub fn inner(&self, u: &Mat, v: &Mat) -> Result<f64> {
        ensure_shape(u, self.n(), u.ncols())?;
        ensure_shape(v, self.n(), u.ncols())?;
        Ok(u.dot(&(&self.m * v)))
    }

    /// `sqrt(tr(UᵀMU))`.
    pub fn norm(&self, u: &Mat) -> Result<f64> {
        Ok(sqrt(self.inner(u, u)?.max(0.0)))
    }

    /// `‖XᵀMX − I_p‖_F`.
    pub fn check_feasibility(&self, x: &Mat) -> f64 {
        feasibility_residual(x, &(&self.m * x))
    }

    /// Wraps `x` as a point without checking feasibility. Iterates of the
    /// solver drift slightly off the manifold and are represented this way.
    pub fn point(&self, x: Mat) -> Result<ManifoldPoint> {
        ensure_shape(&x, self.n(), x.ncols())?;
        let mx = &self.m * &x;
        Ok(ManifoldPoint::from_parts(x, mx))
    }

    /// Wraps `x` as a point, rejecting it if `‖XᵀMX − I‖_F > tol`.
    pub fn checked_point(&self, x: Mat, tol: f64) -> Result<ManifoldPoint> {
        let pt = self.point(x)?;
        let residual = pt.feasibility();
        if residual > tol {
            return Err(Error::Infeasible {
                residual,
                tolerance: tol,
            });
        }
        Ok(pt)
    }

    /// Wraps `z` as a tangent vector at `x`, checking
    /// `‖sym(XᵀMZ)‖_F ≤ 1e-10·(1 + ‖Z‖_F)`.
    pub fn tangent(&self, x: &ManifoldPoint, z: Mat) -> Result<TangentVector> {
        ensure_shape(&z, self.n(), x.p())?;
        let mz = &self.m * &z;
        let t = TangentVector { z, mz, base: x.id };
        let residual = t.tangency_residual(x);
        if residual > DEFAULT_TANGENCY_TOL * (1.0 + t.z.norm()) {
            return Err(Error::Degenerate("matrix is not tangent at the base point"));
        }
        Ok(t)
    }

    /// Orthogonal projection `N − X·sym(XᵀMN)` onto `T_X St_M`.
    pub fn project_tangent(&self, x: &ManifoldPoint, n: &Mat) -> Result<TangentVector> {
        ensure_shape(n, self.n(), x.p())?;
        Ok(self.project_exact(x, n))
    }

    /// Riemannian gradient from the Euclidean gradient `eg = ∇f̄(X)`:
    /// `G̃ = M⁻¹·eg` followed by tangent projection.
    pub fn egrad_to_rgrad(&self, x: &ManifoldPoint, eg: &Mat) -> Result<TangentVector> {
        ensure_shape(eg, self.n(), x.p())?;
        let g_tilde = self.solve(eg)?;
        Ok(self.project_exact(x, &g_tilde))
    }

    /// Projection with `MZ` formed from the projected `Z`. Updating `MN`
    /// instead cancels badly when `Z` is much smaller than `N`, as gradients
    /// near a minimizer are, and the cached product then disagrees with `Z`.
    fn project_exact(&self, x: &ManifoldPoint, n: &Mat) -> TangentVector {
        let s = sym(&(x.mx.transpose() * n));
        let z = n - &x.x * &s;
        let mz = &self.m * &z;
        TangentVector { z, mz, base: x.id }
    }

    /// Column-by-column modified Gram–Schmidt in the M-inner product, with
    /// one reorthogonalization pass. Diagonal of `XᵀMA` comes out positive.
    pub fn m_orthonormalize(&self, a: &Mat) -> Result<ManifoldPoint> {
        ensure_shape(a, self.n(), a.ncols())?;
        let p = a.ncols();
        let ma = &self.m * a;
        let total = sqrt(a.dot(&ma).max(0.0));
        if total == 0.0 || !total.is_finite() {
            return Err(Error::Degenerate("matrix has zero M-norm"));
        }
        let mut q = a.clone();
        let mut mq = ma;
        for j in 0..p {
            for _pass in 0..2 {
                for i in 0..j {
                    let r = mq.column(i).dot(&q.column(j));
                    let (qi, mqi) = (q.column(i).clone_owned(), mq.column(i).clone_owned());
                    q.column_mut(j).axpy(-r, &qi, 1.0);
                    mq.column_mut(j).axpy(-r, &mqi, 1.0);
                }
            }
            let norm = sqrt(q.column(j).dot(&mq.column(j)).max(0.0));
            if !(norm > RANK_TOL * total) {
                return Err(Error::Degenerate("matrix is rank deficient in the M-inner product"));
            }
            q.column_mut(j).scale_mut(1.0 / norm);
            // Recompute rather than rescale so later columns see an accurate MQ.
            let fresh = &self.m * q.column(j);
            mq.column_mut(j).copy_from(&fresh);
        }
        Ok(ManifoldPoint::from_parts(q, mq))
    }

    /// Random feasible point: M-orthonormalized standard-normal `n×p` matrix.
    pub fn random_point<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Result<ManifoldPoint> {
        let n = self.n();
        if p == 0 || p > n {
            return Err(Error::InvalidParams(alloc::format!(
                "need 1 ≤ p ≤ n, got p = {p}, n = {n}"
            )));
        }
        match self.m_orthonormalize(&gaussian(n, p, rng)) {
            Err(Error::Degenerate(_)) => self.m_orthonormalize(&gaussian(n, p, rng)),
            other => other,
        }
    }

    /// Random unit-norm tangent vector at `x`.
    pub fn random_tangent<R: Rng + ?Sized>(&self, x: &ManifoldPoint, rng: &mut R) -> Result<TangentVector> {
        for _ in 0..2 {
            let t = self.project_tangent(x, &gaussian(self.n(), x.p(), rng))?;
            let nrm = t.norm();
            if nrm > 1e-12 {
                return Ok(t.scaled(1.0 / nrm));
            }
        }
        Err(Error::Degenerate("random tangent draw vanished"))
    }
}

/// Standard-normal `rows×cols` matrix, filled column by column.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    let mut out = Mat::zeros(rows, cols);
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    out
}

pub(crate) fn feasibility_residual(x: &Mat, mx: &Mat) -> f64 {
    let mut g = x.transpose() * mx;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

/// Projection when `M·N` is already known.
pub(crate) fn project_with_cache(x: &ManifoldPoint, n: &Mat, mn: &Mat) -> TangentVector {
    let s = sym(&(x.mx.transpose() * n));
    TangentVector {
        z: n - &x.x * &s,
        mz: mn - &x.mx * &s,
        base: x.id,
    }
}

impl ManifoldPoint {
    pub(crate) fn from_parts(x: Mat, mx: Mat) -> Self {
        Self {
            x,
            mx,
            id: PointId::fresh(),
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.x
    }

    /// Cached `M·X`.
    pub fn mx(&self) -> &Mat {
        &self.mx
    }

    pub fn id(&self) -> PointId {
        self.id
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn feasibility(&self) -> f64 {
        feasibility_residual(&self.x, &self.mx)
    }

    pub fn into_matrix(self) -> Mat {
        self.x
    }
}

impl TangentVector {
    pub(crate) fn from_parts(z: Mat, mz: Mat, base: PointId) -> Self {
        Self { z, mz, base }
    }

    pub fn zero(x: &ManifoldPoint) -> Self {
        let (n, p) = (x.n(), x.p());
        Self {
            z: Mat::zeros(n, p),
            mz: Mat::zeros(n, p),
            base: x.id,
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.z
    }

    /// Cached `M·Z`.
    pub fn mz(&self) -> &Mat {
        &self.mz
    }

    pub fn base(&self) -> PointId {
        self.base
    }

    /// `tr(ZᵀMY)`. The metric does not depend on the base point, so this is
    /// also used between vectors attached to different points.
    pub fn inner(&self, other: &TangentVector) -> f64 {
        self.z.dot(&other.mz)
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.inner(self).max(0.0))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            z: &self.z * a,
            mz: &self.mz * a,
            base: self.base,
        }
    }

    /// `self + a·other`; both must live at the same point.
    pub fn add_scaled(&self, a: f64, other: &TangentVector) -> Result<Self> {
        if self.base != other.base {
            return Err(Error::BaseMismatch);
        }
        Ok(Self {
            z: &self.z + &other.z * a,
            mz: &self.mz + &other.mz * a,
            base: self.base,
        })
    }

    /// `‖sym(XᵀMZ)‖_F`.
    pub fn tangency_residual(&self, x: &ManifoldPoint) -> f64 {
        sym(&(x.mx.transpose() * &self.z)).norm()
    }

    /// Reattaches the vector to `x` and projects it onto `T_x St_M`.
    pub fn project_to(&self, x: &ManifoldPoint) -> Self {
        project_with_cache(x, &self.z, &self.mz)
    }
}
