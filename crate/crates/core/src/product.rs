//! Products `St_{M₁}(n₁,p₁) × … × St_{M_k}(n_k,p_k)` with the sum metric.
//!
//! Every operation acts componentwise. A single generalized Stiefel manifold
//! is the product with one factor, which is how the solver sees it.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::baseline::{baseline_retraction, BaselineKind};
use crate::cayley::{CayleyStep, RetractionStrategy};
use crate::dense::sqrt;
use crate::error::{Error, Result};
use crate::manifold::{ManifoldPoint, MetricContext, TangentVector};
use crate::Mat;

/// How a trial point `R_X(tZ)` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retraction {
    Cayley(RetractionStrategy),
    CholQr,
    Polar,
}

impl Default for Retraction {
    fn default() -> Self {
        Retraction::Cayley(RetractionStrategy::Auto)
    }
}

/// How tangent vectors are carried to the new point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Transport {
    /// Differentiated Cayley retraction.
    #[default]
    DiffRetraction,
    /// Isometric Cayley transport.
    Isometric,
    /// Orthogonal projection onto the new tangent space. Works with every
    /// retraction.
    Projection,
}

impl Transport {
    pub fn requires_cayley(self) -> bool {
        !matches!(self, Transport::Projection)
    }
}

#[derive(Debug, Clone)]
pub struct ProductManifold {
    factors: Vec<MetricContext>,
}

#[derive(Debug, Clone)]
pub struct ProductPoint {
    parts: Vec<ManifoldPoint>,
}

#[derive(Debug, Clone)]
pub struct ProductTangent {
    parts: Vec<TangentVector>,
}

impl ProductManifold {
    pub fn new(factors: Vec<MetricContext>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParams(
                "product manifold needs at least one factor".into(),
            ));
        }
        Ok(Self { factors })
    }

    pub fn single(ctx: MetricContext) -> Self {
        Self {
            factors: alloc::vec![ctx],
        }
    }

    pub fn factors(&self) -> &[MetricContext] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    fn check_arity(&self, k: usize) -> Result<()> {
        if k != self.factors.len() {
            return Err(Error::Dimension {
                expected: (self.factors.len(), 1),
                found: (k, 1),
            });
        }
        Ok(())
    }

    /// Wraps one matrix per factor, computing the cached `M`-products.
    pub fn point(&self, xs: Vec<Mat>) -> Result<ProductPoint> {
        self.check_arity(xs.len())?;
        let parts = self
            .factors
            .iter()
            .zip(xs)
            .map(|(ctx, x)| ctx.point(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductPoint { parts })
    }

    pub fn from_points(&self, parts: Vec<ManifoldPoint>) -> Result<ProductPoint> {
        self.check_arity(parts.len())?;
        for (ctx, x) in self.factors.iter().zip(&parts) {
            if x.n() != ctx.n() {
                return Err(Error::Dimension {
                    expected: (ctx.n(), x.p()),
                    found: (x.n(), x.p()),
                });
            }
        }
        Ok(ProductPoint { parts })
    }

    pub fn random_point<R: rand::Rng + ?Sized>(&self, ps: &[usize], rng: &mut R) -> Result<ProductPoint> {
        self.check_arity(ps.len())?;
        let parts = self
            .factors
            .iter()
            .zip(ps)
            .map(|(ctx, &p)| ctx.random_point(p, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductPoint { parts })
    }

    pub fn random_tangent<R: rand::Rng + ?Sized>(&self, x: &ProductPoint, rng: &mut R) -> Result<ProductTangent> {
        let parts = self
            .factors
            .iter()
            .zip(&x.parts)
            .map(|(ctx, xi)| ctx.random_tangent(xi, rng))
            .collect::<Result<Vec<_>>>()?;
        let t = ProductTangent { parts };
        let nrm = t.norm();
        Ok(t.scaled(1.0 / nrm))
    }

    pub fn project(&self, x: &ProductPoint, ns: &[Mat]) -> Result<ProductTangent> {
        self.check_arity(ns.len())?;
        let parts = self
            .factors
            .iter()
            .zip(&x.parts)
            .zip(ns)
            .map(|((ctx, xi), n)| ctx.project_tangent(xi, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent { parts })
    }

    pub fn egrad_to_rgrad(&self, x: &ProductPoint, egs: &[Mat]) -> Result<ProductTangent> {
        self.check_arity(egs.len())?;
        let parts = self
            .factors
            .iter()
            .zip(&x.parts)
            .zip(egs)
            .map(|((ctx, xi), eg)| ctx.egrad_to_rgrad(xi, eg))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductTangent { parts })
    }

    /// Largest component feasibility residual.
    pub fn feasibility(&self, x: &ProductPoint) -> f64 {
        x.parts.iter().map(|xi| xi.feasibility()).fold(0.0, f64::max)
    }

    /// M-orthonormalizes every component whose residual exceeds `tol`.
    /// Returns the new point and whether anything changed.
    pub fn restore(&self, x: &ProductPoint, tol: f64) -> Result<(ProductPoint, bool)> {
        let mut changed = false;
        let mut parts = Vec::with_capacity(x.parts.len());
        for (ctx, xi) in self.factors.iter().zip(&x.parts) {
            if xi.feasibility() > tol {
                parts.push(ctx.m_orthonormalize(xi.matrix())?);
                changed = true;
            } else {
                parts.push(xi.clone());
            }
        }
        Ok((ProductPoint { parts }, changed))
    }

    /// `R_X(tZ)` together with what is needed to transport vectors along it.
    pub fn step(&self, x: &ProductPoint, z: &ProductTangent, t: f64, retraction: Retraction) -> Result<ProductStep> {
        self.check_arity(x.parts.len())?;
        self.check_arity(z.parts.len())?;
        let mut parts = Vec::with_capacity(self.factors.len());
        for ((ctx, xi), zi) in self.factors.iter().zip(&x.parts).zip(&z.parts) {
            if zi.base() != xi.id() {
                return Err(Error::BaseMismatch);
            }
            let part = match retraction {
                Retraction::Cayley(strategy) => {
                    ComponentStep::Cayley(Box::new(CayleyStep::new(ctx, xi, zi, t, strategy)?))
                }
                Retraction::CholQr => ComponentStep::Plain(baseline_retraction(BaselineKind::CholQr, ctx, xi, zi, t)?),
                Retraction::Polar => ComponentStep::Plain(baseline_retraction(BaselineKind::Polar, ctx, xi, zi, t)?),
            };
            parts.push(part);
        }
        let point = ProductPoint {
            parts: parts.iter().map(|p| p.point().clone()).collect(),
        };
        Ok(ProductStep { parts, point })
    }

    /// Convenience wrapper returning only the retracted point.
    pub fn retract(
        &self,
        x: &ProductPoint,
        z: &ProductTangent,
        t: f64,
        retraction: Retraction,
    ) -> Result<ProductPoint> {
        if t == 0.0 {
            return Ok(x.clone());
        }
        Ok(self.step(x, z, t, retraction)?.point)
    }
}

#[derive(Debug)]
enum ComponentStep {
    Cayley(Box<CayleyStep>),
    Plain(ManifoldPoint),
}

impl ComponentStep {
    fn point(&self) -> &ManifoldPoint {
        match self {
            ComponentStep::Cayley(s) => s.point(),
            ComponentStep::Plain(p) => p,
        }
    }
}

/// An accepted (or trial) step `X → R_X(tZ)` on a product manifold.
#[derive(Debug)]
pub struct ProductStep {
    parts: Vec<ComponentStep>,
    point: ProductPoint,
}

impl ProductStep {
    pub fn point(&self) -> &ProductPoint {
        &self.point
    }

    pub fn into_point(self) -> ProductPoint {
        self.point
    }

    /// Transport of the step direction `Z` itself.
    pub fn transport_direction(
        &self,
        manifold: &ProductManifold,
        z: &ProductTangent,
        kind: Transport,
    ) -> Result<ProductTangent> {
        let mut parts = Vec::with_capacity(self.parts.len());
        for ((ctx, step), zi) in manifold.factors.iter().zip(&self.parts).zip(&z.parts) {
            let v = match (step, kind) {
                (ComponentStep::Cayley(s), Transport::DiffRetraction) => s.transport_diff_direction(ctx),
                (ComponentStep::Cayley(s), Transport::Isometric) => s.transport_iso_direction(ctx),
                (step, Transport::Projection) => zi.project_to(step.point()),
                (ComponentStep::Plain(_), _) => return Err(cayley_only()),
            };
            parts.push(v);
        }
        Ok(ProductTangent { parts })
    }

    /// Transport of an arbitrary tangent vector at the origin.
    pub fn transport(&self, manifold: &ProductManifold, y: &ProductTangent, kind: Transport) -> Result<ProductTangent> {
        let mut parts = Vec::with_capacity(self.parts.len());
        for ((ctx, step), yi) in manifold.factors.iter().zip(&self.parts).zip(&y.parts) {
            let v = match (step, kind) {
                (ComponentStep::Cayley(s), Transport::DiffRetraction) => s.transport_diff(ctx, yi)?,
                (ComponentStep::Cayley(s), Transport::Isometric) => s.transport_iso(ctx, yi),
                (step, Transport::Projection) => yi.project_to(step.point()),
                (ComponentStep::Plain(_), _) => return Err(cayley_only()),
            };
            parts.push(v);
        }
        Ok(ProductTangent { parts })
    }
}

fn cayley_only() -> Error {
    Error::InvalidParams("differentiated and isometric transports require the Cayley retraction".into())
}

impl ProductPoint {
    pub fn parts(&self) -> &[ManifoldPoint] {
        &self.parts
    }

    pub fn matrices(&self) -> Vec<&Mat> {
        self.parts.iter().map(|p| p.matrix()).collect()
    }

    pub fn into_matrices(self) -> Vec<Mat> {
        self.parts.into_iter().map(|p| p.into_matrix()).collect()
    }

    pub fn feasibility(&self) -> f64 {
        self.parts.iter().map(|xi| xi.feasibility()).fold(0.0, f64::max)
    }
}

impl ProductTangent {
    pub fn parts(&self) -> &[TangentVector] {
        &self.parts
    }

    pub fn zero(x: &ProductPoint) -> Self {
        Self {
            parts: x.parts.iter().map(TangentVector::zero).collect(),
        }
    }

    /// Sum of the component inner products.
    pub fn inner(&self, other: &ProductTangent) -> f64 {
        self.parts.iter().zip(&other.parts).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.inner(self).max(0.0))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            parts: self.parts.iter().map(|v| v.scaled(a)).collect(),
        }
    }

    pub fn add_scaled(&self, a: f64, other: &ProductTangent) -> Result<Self> {
        if self.parts.len() != other.parts.len() {
            return Err(Error::BaseMismatch);
        }
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(u, v)| u.add_scaled(a, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parts })
    }

    pub fn tangency_residual(&self, x: &ProductPoint) -> f64 {
        self.parts
            .iter()
            .zip(&x.parts)
            .map(|(v, xi)| v.tangency_residual(xi))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spd(n: usize, rng: &mut ChaCha8Rng) -> MetricContext {
        let b = gaussian(n, n, rng);
        MetricContext::new(b.transpose() * &b / n as f64 + Mat::identity(n, n)).unwrap()
    }

    #[test]
    fn inner_is_sum_of_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let man = ProductManifold::new(alloc::vec![spd(12, &mut rng), spd(9, &mut rng)]).unwrap();
        let x = man.random_point(&[3, 3], &mut rng).unwrap();
        let a = man.random_tangent(&x, &mut rng).unwrap();
        let b = man.random_tangent(&x, &mut rng).unwrap();
        let sum: f64 = a.parts().iter().zip(b.parts()).map(|(u, v)| u.inner(v)).sum();
        assert_eq!(a.inner(&b), sum);
    }

    #[test]
    fn step_keeps_every_component_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let man = ProductManifold::new(alloc::vec![spd(15, &mut rng), spd(10, &mut rng)]).unwrap();
        let x = man.random_point(&[2, 2], &mut rng).unwrap();
        let z = man.random_tangent(&x, &mut rng).unwrap();
        for r in [Retraction::default(), Retraction::CholQr, Retraction::Polar] {
            let step = man.step(&x, &z, 0.7, r).unwrap();
            assert!(man.feasibility(step.point()) < 1e-11);
            let moved = step.transport_direction(&man, &z, Transport::Projection).unwrap();
            assert!(moved.tangency_residual(step.point()) < 1e-10);
        }
    }

    #[test]
    fn cayley_transports_reject_baseline_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let man = ProductManifold::single(spd(8, &mut rng));
        let x = man.random_point(&[2], &mut rng).unwrap();
        let z = man.random_tangent(&x, &mut rng).unwrap();
        let step = man.step(&x, &z, 0.3, Retraction::Polar).unwrap();
        assert!(matches!(
            step.transport_direction(&man, &z, Transport::Isometric),
            Err(Error::InvalidParams(_))
        ));
    }
}
