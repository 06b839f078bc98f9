//! Cholesky-QR and polar retractions on `St_M(n,p)`.
//!
//! Both normalize `Y = X + tZ` from the right using its Gram matrix
//! `G = YᵀMY`: Cholesky-QR takes `R = Y L⁻ᵀ` with `G = LLᵀ`, the polar
//! retraction takes `R = Y G^{-1/2}`. `G` is assembled from the cached
//! products `MX`, `MZ`, so a step costs `O(np²)`.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::dense::sqrt;
use crate::error::{Error, Result};
use crate::manifold::{ManifoldPoint, MetricContext, TangentVector};
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    CholQr,
    Polar,
}

/// `R_X(tZ)` via Cholesky-QR or polar normalization of `X + tZ`.
pub fn baseline_retraction(
    kind: BaselineKind,
    ctx: &MetricContext,
    x: &ManifoldPoint,
    z: &TangentVector,
    t: f64,
) -> Result<ManifoldPoint> {
    let _ = ctx;
    if z.base() != x.id() {
        return Err(Error::BaseMismatch);
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    let y = x.matrix() + z.matrix() * t;
    let my = x.mx() + z.mz() * t;
    let gram = {
        let g = y.transpose() * &my;
        (&g + g.transpose()) * 0.5
    };
    let right = match kind {
        BaselineKind::CholQr => {
            let chol = Cholesky::new(gram).ok_or(Error::StepTooLarge)?;
            let l = chol.l();
            let p = l.nrows();
            // L⁻ᵀ = (L⁻¹)ᵀ
            let l_inv = l
                .solve_lower_triangular(&Mat::identity(p, p))
                .ok_or(Error::StepTooLarge)?;
            l_inv.transpose()
        }
        BaselineKind::Polar => {
            let eig = SymmetricEigen::new(gram);
            let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
            let mut q = eig.eigenvectors.clone();
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                if !(lambda > 1e-14 * scale) {
                    return Err(Error::StepTooLarge);
                }
                q.column_mut(j).scale_mut(1.0 / sqrt(sqrt(lambda)));
            }
            &q * q.transpose()
        }
    };
    let r = &y * &right;
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::StepTooLarge);
    }
    Ok(ManifoldPoint::from_parts(r, my * right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn baselines_are_feasible_and_fix_the_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = gaussian(25, 25, &mut rng);
        let ctx = MetricContext::new(b.transpose() * &b / 25.0 + Mat::identity(25, 25)).unwrap();
        let x = ctx.random_point(3, &mut rng).unwrap();
        let z = ctx.random_tangent(&x, &mut rng).unwrap();
        for kind in [BaselineKind::CholQr, BaselineKind::Polar] {
            let same = baseline_retraction(kind, &ctx, &x, &z, 0.0).unwrap();
            assert_eq!(same.matrix(), x.matrix());
            let y = baseline_retraction(kind, &ctx, &x, &z, 0.8).unwrap();
            assert!(ctx.check_feasibility(y.matrix()) < 1e-12);
            assert!((y.mx() - ctx.matrix() * y.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn polar_of_identity_metric_matches_svd() {
        let ctx = MetricContext::identity(3);
        let x = ctx.point(Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        let z = ctx.tangent(&x, Mat::from_column_slice(3, 1, &[0.0, 3.0, 4.0])).unwrap();
        let y = baseline_retraction(BaselineKind::Polar, &ctx, &x, &z, 1.0).unwrap();
        let expected = Mat::from_column_slice(3, 1, &[1.0, 3.0, 4.0]) / sqrt(26.0);
        assert!((y.matrix() - expected).norm() < 1e-15);
    }
}
