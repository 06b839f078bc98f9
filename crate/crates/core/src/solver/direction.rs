//! Conjugate-direction coefficient and Barzilai–Borwein trial step.

use crate::error::{Error, Result};
use crate::manifold::{MetricContext, TangentVector};
use crate::Mat;

use super::SolverParams;

/// Modified PRP coefficient
/// `β = (‖g₊‖² − (‖g₊‖/‖g‖)·|⟨g₊, T(g)⟩|) / ‖g‖²`,
/// given `‖g₊‖`, `‖g‖` and `⟨g₊, T(g)⟩`.
pub fn beta_mprp(g_new_norm: f64, g_old_norm: f64, inner_new_transported: f64) -> Result<f64> {
    if !(g_old_norm > 0.0) {
        return Err(Error::Degenerate("previous gradient norm is zero"));
    }
    let g2 = g_old_norm * g_old_norm;
    Ok((g_new_norm * g_new_norm - (g_new_norm / g_old_norm) * inner_new_transported.abs()) / g2)
}

/// [`beta_mprp`] from the tangent vectors themselves.
pub fn beta_mprp_vectors(g_new: &TangentVector, g_old_norm: f64, transported_g_old: &TangentVector) -> Result<f64> {
    beta_mprp(g_new.norm(), g_old_norm, g_new.inner(transported_g_old))
}

/// Clamped BB step from `⟨S,S⟩` and `⟨Y,S⟩`.
pub fn bb_step(ss: f64, ys: f64, params: &SolverParams) -> f64 {
    let denom = ys.abs();
    if !(denom > 1e-30 * ss) || !ss.is_finite() || !denom.is_finite() {
        return params.t_max;
    }
    (ss / denom).min(params.t_max).max(params.t_min)
}

/// Clamped BB step `⟨S,S⟩/|⟨Y,S⟩|` with inner products in the M-metric.
pub fn bb_initial_step(ctx: &MetricContext, s: &Mat, y_diff: &Mat, params: &SolverParams) -> Result<f64> {
    let ss = ctx.inner(s, s)?;
    let ys = ctx.inner(y_diff, s)?;
    Ok(bb_step(ss, ys, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_special_cases() {
        assert_eq!(beta_mprp(0.0, 2.0, 0.0).unwrap(), 0.0);
        assert_eq!(beta_mprp(3.0, 2.0, 0.0).unwrap(), 9.0 / 4.0);
        // T(g) aligned with g₊ and of norm ‖g‖.
        let (gn, go) = (3.0, 2.0);
        assert!(beta_mprp(gn, go, gn * go).unwrap().abs() < 1e-15);
        assert!(matches!(beta_mprp(1.0, 0.0, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bb_cases() {
        let p = SolverParams::default();
        assert_eq!(bb_step(4.0, 4.0, &p), 1.0);
        assert_eq!(bb_step(4.0, 0.0, &p), p.t_max);
        assert_eq!(bb_step(4.0, -8.0, &p), 0.5);
        assert_eq!(bb_step(1e-30, 1.0, &p), p.t_min.max(1e-30));
    }

    #[test]
    fn bb_with_metric() {
        let ctx = MetricContext::new(Mat::identity(2, 2) * 4.0).unwrap();
        let s = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let y = &s * -2.0;
        // ⟨S,S⟩ = 4, ⟨Y,S⟩ = −8
        assert_eq!(bb_initial_step(&ctx, &s, &y, &SolverParams::default()).unwrap(), 0.5);
    }
}
