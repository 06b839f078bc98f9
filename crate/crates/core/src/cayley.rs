//! Cayley-transform retraction on `St_M(n,p)` and the two vector transports
//! built on it.
//!
//! For a tangent vector `Z` at `X` let `P_X = I − ½XXᵀM` and
//! `W_Z = P_X Z Xᵀ − X Zᵀ P_Xᵀ = UVᵀ` with `U = [P_X Z, X]`,
//! `V = [X, −P_X Z]`. Then `Z = W_Z M X` and the retraction is
//!
//! ```text
//! R_X(tZ) = (I − t/2·W_Z M)⁻¹ (I + t/2·W_Z M) X.
//! ```
//!
//! Every operation has a dense path, which factors the `n×n` matrix
//! `I − t/2·W_Z M`, and a low-rank path, which only inverts the `2p×2p`
//! matrix `K = I − t/2·VᵀMU` through the Sherman–Morrison–Woodbury identity
//! `(I − t/2·UVᵀM)⁻¹ = I + t/2·U K⁻¹ VᵀM`. With `M₁ = VᵀMX`, `M₂ = VᵀMU`
//! and `M₃ = K⁻¹M₁`:
//!
//! ```text
//! R_X(tZ)     = X + t·U M₃
//! T^R_{tZ}(Z) = U [M₁ + t/2·M₂M₃ + t/2·K⁻¹M₂M₃]     (differentiated retraction)
//! T_{tZ}(Z)   = U [M₁ + t·M₂M₃]                      (isometric)
//! ```

use nalgebra::SymmetricEigen;

use crate::dense::{hcat, sqrt, PivotedLu};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldPoint, MetricContext, TangentVector};
use crate::Mat;

/// Largest dimension for which [`angle_bound`] runs its dense eigensolvers.
pub const ANGLE_BOUND_MAX_N: usize = 500;

/// How the Cayley systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetractionStrategy {
    /// Factor the `n×n` system.
    Full,
    /// Sherman–Morrison–Woodbury with a `2p×2p` inner system.
    LowRank,
    /// `LowRank` when `4p ≤ n`, otherwise `Full`.
    #[default]
    Auto,
}

impl RetractionStrategy {
    /// Resolves `Auto` for an `n×p` problem. Never returns `Auto`.
    pub fn resolve(self, n: usize, p: usize) -> Self {
        match self {
            RetractionStrategy::Auto if 4 * p <= n => RetractionStrategy::LowRank,
            RetractionStrategy::Auto => RetractionStrategy::Full,
            other => other,
        }
    }
}

/// Low-rank factors `W_Z = UVᵀ` of the skew-symmetric generator, together
/// with the products `MU` and `MV`.
#[derive(Debug, Clone)]
pub struct SkewFactors {
    u: Mat,
    v: Mat,
    mu: Mat,
    mv: Mat,
}

impl SkewFactors {
    /// `U = [P_X Z, X]`.
    pub fn u(&self) -> &Mat {
        &self.u
    }

    /// `V = [X, −P_X Z]`.
    pub fn v(&self) -> &Mat {
        &self.v
    }

    /// Materializes the `n×n` matrix `W_Z = UVᵀ`.
    pub fn dense(&self) -> Mat {
        &self.u * self.v.transpose()
    }

    /// `W_Z M B` without forming `W_Z`.
    pub fn apply_wm(&self, b: &Mat) -> Mat {
        &self.u * (self.mv.transpose() * b)
    }
}

/// Builds `(U, V)` for `Z` at `X`. Never forms an `n×n` matrix.
pub fn skew_factors(x: &ManifoldPoint, z: &TangentVector) -> Result<SkewFactors> {
    if z.base() != x.id() {
        return Err(Error::BaseMismatch);
    }
    let xt_mz = x.mx().transpose() * z.matrix();
    let pz = z.matrix() - x.matrix() * &xt_mz * 0.5;
    let mpz = z.mz() - x.mx() * &xt_mz * 0.5;
    Ok(SkewFactors {
        u: hcat(&pz, x.matrix()),
        v: hcat(x.matrix(), &(-&pz)),
        mu: hcat(&mpz, x.mx()),
        mv: hcat(x.mx(), &(-mpz)),
    })
}

#[derive(Debug)]
enum Solver {
    Full { lu: PivotedLu },
    LowRank { k_lu: PivotedLu, m1: Mat, m2: Mat, m3: Mat },
}

/// A Cayley step `X ↦ R_X(tZ)` together with everything needed to transport
/// vectors along it. Building the step factors the Cayley system once; each
/// transport then costs a few products with the cached factors.
#[derive(Debug)]
pub struct CayleyStep {
    t: f64,
    origin: ManifoldPoint,
    direction: TangentVector,
    factors: SkewFactors,
    solver: Solver,
    point: ManifoldPoint,
}

impl CayleyStep {
    pub fn new(
        ctx: &MetricContext,
        x: &ManifoldPoint,
        z: &TangentVector,
        t: f64,
        strategy: RetractionStrategy,
    ) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::StepTooLarge);
        }
        let factors = skew_factors(x, z)?;
        let (n, p) = (x.n(), x.p());
        let half = 0.5 * t;
        let (solver, new_x) = match strategy.resolve(n, p) {
            RetractionStrategy::LowRank => {
                let m2 = factors.v.transpose() * &factors.mu;
                let m1 = factors.v.transpose() * x.mx();
                let k = Mat::identity(2 * p, 2 * p) - &m2 * half;
                let k_lu = PivotedLu::new(k)?;
                let m3 = k_lu.solve(&m1);
                let new_x = x.matrix() + &factors.u * &m3 * t;
                (Solver::LowRank { k_lu, m1, m2, m3 }, new_x)
            }
            _ => {
                let wm = &factors.u * factors.mv.transpose();
                let a = Mat::identity(n, n) - &wm * half;
                let lu = PivotedLu::new(a)?;
                let rhs = x.matrix() + &wm * x.matrix() * half;
                let new_x = lu.solve(&rhs);
                (Solver::Full { lu }, new_x)
            }
        };
        if !new_x.iter().all(|v| v.is_finite()) {
            return Err(Error::StepTooLarge);
        }
        let point = ctx.point(new_x)?;
        Ok(Self {
            t,
            origin: x.clone(),
            direction: z.clone(),
            factors,
            solver,
            point,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn factors(&self) -> &SkewFactors {
        &self.factors
    }

    /// The retracted point `R_X(tZ)`.
    pub fn point(&self) -> &ManifoldPoint {
        &self.point
    }

    pub fn into_point(self) -> ManifoldPoint {
        self.point
    }

    fn at_point(&self, z: Mat, mz: Mat) -> TangentVector {
        TangentVector::from_parts(z, mz, self.point.id())
    }

    /// `(I − t/2·W_Z M)⁻¹ B` and its product with `M`, given `MB`.
    fn resolvent(&self, ctx: &MetricContext, b: &Mat, mb: &Mat) -> (Mat, Mat) {
        match &self.solver {
            Solver::Full { lu } => {
                let out = lu.solve(b);
                let m_out = ctx.matrix() * &out;
                (out, m_out)
            }
            Solver::LowRank { k_lu, .. } => {
                let coef = k_lu.solve(&(self.factors.mv.transpose() * b)) * (0.5 * self.t);
                (b + &self.factors.u * &coef, mb + &self.factors.mu * &coef)
            }
        }
    }

    /// Differentiated-retraction transport of the step direction itself,
    /// `T^R_{tZ}(Z) = (I − t/2·W_Z M)⁻² Z`.
    pub fn transport_diff_direction(&self, ctx: &MetricContext) -> TangentVector {
        match &self.solver {
            Solver::Full { lu } => {
                let out = lu.solve(&lu.solve(self.direction.matrix()));
                let m_out = ctx.matrix() * &out;
                self.at_point(out, m_out)
            }
            Solver::LowRank { k_lu, m1, m2, m3 } => {
                let half = 0.5 * self.t;
                let m2m3 = m2 * m3;
                let coef = m1 + &m2m3 * half + k_lu.solve(&m2m3) * half;
                self.at_point(&self.factors.u * &coef, &self.factors.mu * &coef)
            }
        }
    }

    /// Isometric transport of the step direction,
    /// `T_{tZ}(Z) = (I − t/2·W_Z M)⁻¹(I + t/2·W_Z M) Z`.
    pub fn transport_iso_direction(&self, ctx: &MetricContext) -> TangentVector {
        match &self.solver {
            Solver::Full { .. } => self.transport_iso(ctx, &self.direction),
            Solver::LowRank { m1, m2, m3, .. } => {
                let coef = m1 + m2 * m3 * self.t;
                self.at_point(&self.factors.u * &coef, &self.factors.mu * &coef)
            }
        }
    }

    /// Differentiated-retraction transport of an arbitrary tangent vector `Y`
    /// at the origin:
    /// `T^R_{tZ}(Y) = (I − t/2·W_Z M)⁻¹ W_Y M (I − t/2·W_Z M)⁻¹ X`.
    pub fn transport_diff(&self, ctx: &MetricContext, y: &TangentVector) -> Result<TangentVector> {
        let wy = skew_factors(&self.origin, y)?;
        // (I − t/2·W_Z M)⁻¹ X
        let q = match &self.solver {
            Solver::Full { lu } => lu.solve(self.origin.matrix()),
            Solver::LowRank { m3, .. } => self.origin.matrix() + &self.factors.u * m3 * (0.5 * self.t),
        };
        // W_Y M Q = U_Y (MV_Y)ᵀ Q
        let inner = wy.mv.transpose() * &q;
        let b = &wy.u * &inner;
        let mb = &wy.mu * &inner;
        let (out, m_out) = self.resolvent(ctx, &b, &mb);
        Ok(self.at_point(out, m_out))
    }

    /// Isometric transport of an arbitrary tangent vector `Y` at the origin:
    /// `T_{tZ}(Y) = (I − t/2·W_Z M)⁻¹(I + t/2·W_Z M) Y`.
    pub fn transport_iso(&self, ctx: &MetricContext, y: &TangentVector) -> TangentVector {
        match &self.solver {
            Solver::Full { lu } => {
                let rhs = y.matrix() + self.factors.apply_wm(y.matrix()) * (0.5 * self.t);
                let out = lu.solve(&rhs);
                let m_out = ctx.matrix() * &out;
                self.at_point(out, m_out)
            }
            Solver::LowRank { k_lu, .. } => {
                let coef = k_lu.solve(&(self.factors.mv.transpose() * y.matrix())) * self.t;
                self.at_point(y.matrix() + &self.factors.u * &coef, y.mz() + &self.factors.mu * &coef)
            }
        }
    }

    /// Projection of `Y` onto the tangent space at the new point.
    pub fn transport_projection(&self, y: &TangentVector) -> TangentVector {
        y.project_to(&self.point)
    }
}

/// `R_X(tZ)`. `t = 0` returns `X` unchanged.
pub fn retract(
    ctx: &MetricContext,
    x: &ManifoldPoint,
    z: &TangentVector,
    t: f64,
    strategy: RetractionStrategy,
) -> Result<ManifoldPoint> {
    if z.base() != x.id() {
        return Err(Error::BaseMismatch);
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    Ok(CayleyStep::new(ctx, x, z, t, strategy)?.into_point())
}

/// `T^R_{tZ}(Y)`, tangent at `R_X(tZ)`. When `Y` is `Z` itself the cheaper
/// direction formula is used.
pub fn transport_diff(
    ctx: &MetricContext,
    x: &ManifoldPoint,
    z: &TangentVector,
    t: f64,
    y: &TangentVector,
    strategy: RetractionStrategy,
) -> Result<TangentVector> {
    if y.base() != x.id() {
        return Err(Error::BaseMismatch);
    }
    let step = CayleyStep::new(ctx, x, z, t, strategy)?;
    if y.matrix() == z.matrix() {
        Ok(step.transport_diff_direction(ctx))
    } else {
        step.transport_diff(ctx, y)
    }
}

/// `T_{tZ}(Y)`, tangent at `R_X(tZ)` and of the same M-norm as `Y`.
pub fn transport_iso(
    ctx: &MetricContext,
    x: &ManifoldPoint,
    z: &TangentVector,
    t: f64,
    y: &TangentVector,
    strategy: RetractionStrategy,
) -> Result<TangentVector> {
    if y.base() != x.id() {
        return Err(Error::BaseMismatch);
    }
    let step = CayleyStep::new(ctx, x, z, t, strategy)?;
    if y.matrix() == z.matrix() {
        Ok(step.transport_iso_direction(ctx))
    } else {
        Ok(step.transport_iso(ctx, y))
    }
}

/// Angle between the two transports of `Z` along `tZ` and its analytic
/// lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBound {
    /// Cosine of the angle between `T_{tZ}(Z)` and `T^R_{tZ}(Z)` in the
    /// M-metric.
    pub cos_theta: f64,
    /// `sqrt((4 + t²β₁²γ₁²) / (4 + t²βₙ²γₙ²))`, where `γ` are the extreme
    /// eigenvalues of `M` and `β` the extreme imaginary parts of the
    /// eigenvalues of `W_Z`.
    pub lower_bound: f64,
}

/// Compares the two transports of the direction. Dense diagnostic, limited
/// to `n ≤ 500`.
pub fn angle_bound(ctx: &MetricContext, x: &ManifoldPoint, z: &TangentVector, t: f64) -> Result<AngleBound> {
    let n = x.n();
    if n > ANGLE_BOUND_MAX_N {
        return Err(Error::InvalidParams(alloc::format!(
            "angle bound diagnostic is limited to n ≤ {ANGLE_BOUND_MAX_N}, got {n}"
        )));
    }
    if z.norm() == 0.0 {
        return Err(Error::Degenerate("zero direction has no angle"));
    }
    let step = CayleyStep::new(ctx, x, z, t, RetractionStrategy::Auto)?;
    let diff = step.transport_diff_direction(ctx);
    let iso = step.transport_iso_direction(ctx);
    let cos = diff.inner(&iso) / (diff.norm() * iso.norm());

    let gamma = SymmetricEigen::new(ctx.matrix().clone()).eigenvalues;
    let (g_min, g_max) = extremes(gamma.iter().map(|g| g.abs()));
    let beta = step.factors().dense().complex_eigenvalues();
    let (b_min, b_max) = extremes(beta.iter().map(|c| c.im.abs()));
    let t2 = t * t;
    let lower = sqrt((4.0 + t2 * b_min * b_min * g_min * g_min) / (4.0 + t2 * b_max * b_max * g_max * g_max));

    Ok(AngleBound {
        cos_theta: cos.min(1.0),
        lower_bound: lower,
    })
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
