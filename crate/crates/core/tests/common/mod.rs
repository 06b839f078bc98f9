#![allow(dead_code)]

use gstiefel_core::manifold::gaussian;
use gstiefel_core::{Mat, MetricContext};
use nalgebra::DVector;
use rand::Rng;

/// SPD matrix `Q diag(λ) Qᵀ` with eigenvalues log-spaced in `[1, kappa]`.
pub fn spd_with_condition<R: Rng>(n: usize, kappa: f64, rng: &mut R) -> Mat {
    let q = gaussian(n, n, rng).qr().q();
    let lambdas = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            kappa.powf(i as f64 / (n - 1) as f64)
        }
    });
    let m = &q * Mat::from_diagonal(&lambdas) * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn metric<R: Rng>(n: usize, kappa: f64, rng: &mut R) -> MetricContext {
    MetricContext::new(spd_with_condition(n, kappa, rng)).unwrap()
}

/// `W_Z = P_X Z Xᵀ − X Zᵀ P_Xᵀ` with `P_X = I − ½XXᵀM`, built densely.
pub fn dense_w(m: &Mat, x: &Mat, z: &Mat) -> Mat {
    let n = m.nrows();
    let px = Mat::identity(n, n) - x * x.transpose() * m * 0.5;
    &px * z * x.transpose() - x * z.transpose() * px.transpose()
}

/// `(I − t/2·W M)⁻¹(I + t/2·W M) X`.
pub fn dense_cayley(m: &Mat, x: &Mat, z: &Mat, t: f64) -> Mat {
    let n = m.nrows();
    let wm = dense_w(m, x, z) * m;
    let lhs = Mat::identity(n, n) - &wm * (0.5 * t);
    let rhs = x + &wm * x * (0.5 * t);
    lhs.lu().solve(&rhs).unwrap()
}

/// `(I − t/2·W M)⁻² Z`.
pub fn dense_diff_direction(m: &Mat, x: &Mat, z: &Mat, t: f64) -> Mat {
    let n = m.nrows();
    let wm = dense_w(m, x, z) * m;
    let lu = (Mat::identity(n, n) - &wm * (0.5 * t)).lu();
    lu.solve(&lu.solve(z).unwrap()).unwrap()
}

/// `(I − t/2·W_Z M)⁻¹(I + t/2·W_Z M) Y`.
pub fn dense_iso(m: &Mat, x: &Mat, z: &Mat, t: f64, y: &Mat) -> Mat {
    let n = m.nrows();
    let wm = dense_w(m, x, z) * m;
    let lhs = Mat::identity(n, n) - &wm * (0.5 * t);
    lhs.lu().solve(&(y + &wm * y * (0.5 * t))).unwrap()
}

pub fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn m_norm(m: &Mat, z: &Mat) -> f64 {
    z.dot(&(m * z)).max(0.0).sqrt()
}

/// Least-squares slope of `log err` against `log t`.
pub fn loglog_slope(ts: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
