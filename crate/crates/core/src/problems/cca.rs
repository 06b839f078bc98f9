//! Weighted canonical correlation analysis on
//! `St_{Cx}(m,p) × St_{Cy}(n,p)`: minimize `−tr(UᵀC_xy V N)`.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::sym;
use crate::error::{Error, Result};
use crate::manifold::{gaussian, MetricContext};
use crate::product::{ProductManifold, ProductPoint};
use crate::solver::Problem;
use crate::Mat;

/// Sample count used by the generator unless told otherwise.
pub const CCA_SAMPLES: usize = 1000;

#[derive(Debug, Clone)]
pub struct CcaInstance {
    cx: MetricContext,
    cy: MetricContext,
    cxy: Mat,
    weights: Vec<f64>,
}

/// `μ = (1 + 0.1p, …, 1.2, 1.1)`.
pub fn default_weights(p: usize) -> Vec<f64> {
    (0..p).map(|i| 1.0 + 0.1 * (p - i) as f64).collect()
}

impl CcaInstance {
    pub fn new(cx: Mat, cy: Mat, cxy: Mat, weights: Vec<f64>) -> Result<Self> {
        let (m, n) = (cx.nrows(), cy.nrows());
        if cxy.nrows() != m || cxy.ncols() != n {
            return Err(Error::Dimension {
                expected: (m, n),
                found: (cxy.nrows(), cxy.ncols()),
            });
        }
        let p = weights.len();
        if p == 0 || p > n || p > m {
            return Err(Error::InvalidParams(alloc::format!(
                "need 1 ≤ p ≤ min(m, n), got p = {p}"
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || weights.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidParams(
                "weights must be positive and strictly decreasing".into(),
            ));
        }
        Ok(Self {
            cx: MetricContext::new(cx)?,
            cy: MetricContext::new(cy)?,
            cxy,
            weights,
        })
    }

    pub fn cx(&self) -> &Mat {
        self.cx.matrix()
    }

    pub fn cy(&self) -> &Mat {
        self.cy.matrix()
    }

    pub fn cxy(&self) -> &Mat {
        &self.cxy
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn p(&self) -> usize {
        self.weights.len()
    }

    /// `(m, n)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.cxy.nrows(), self.cxy.ncols())
    }
}

#[derive(Debug, Clone)]
pub struct CcaProblem {
    cxy: Mat,
    weights: Vec<f64>,
    manifold: ProductManifold,
}

impl CcaProblem {
    pub fn p(&self) -> usize {
        self.weights.len()
    }

    fn scale_columns(&self, a: &Mat) -> Mat {
        let mut out = a.clone();
        for (j, &w) in self.weights.iter().enumerate() {
            out.column_mut(j).scale_mut(w);
        }
        out
    }
}

pub fn cca_problem(inst: &CcaInstance) -> CcaProblem {
    CcaProblem {
        cxy: inst.cxy.clone(),
        weights: inst.weights.clone(),
        manifold: ProductManifold::new(alloc::vec![inst.cx.clone(), inst.cy.clone()]).expect("two factors"),
    }
}

impl Problem for CcaProblem {
    fn manifold(&self) -> &ProductManifold {
        &self.manifold
    }

    fn objective(&self, x: &ProductPoint) -> f64 {
        let (u, v) = (x.parts()[0].matrix(), x.parts()[1].matrix());
        -u.dot(&(&self.cxy * self.scale_columns(v)))
    }

    fn euclidean_gradient(&self, x: &ProductPoint) -> Vec<Mat> {
        let (u, v) = (x.parts()[0].matrix(), x.parts()[1].matrix());
        let gu = &self.cxy * self.scale_columns(v) * -1.0;
        let gv = self.cxy.tr_mul(&self.scale_columns(u)) * -1.0;
        alloc::vec![gu, gv]
    }

    /// `−tr(ΔUᵀC_xy V' N) − tr(UᵀC_xy ΔV N)` with `ΔU = U' − U`, `ΔV = V' − V`.
    fn objective_change(&self, x: &ProductPoint, y: &ProductPoint) -> f64 {
        let (u, v) = (x.parts()[0].matrix(), x.parts()[1].matrix());
        let (u2, v2) = (y.parts()[0].matrix(), y.parts()[1].matrix());
        let du = u2 - u;
        let dv = v2 - v;
        -(du.dot(&(&self.cxy * self.scale_columns(v2))) + u.dot(&(&self.cxy * self.scale_columns(&dv))))
    }
}

/// `−Σ μᵢσᵢ` with `σ` the leading singular values of `Lx⁻¹ C_xy Ly⁻ᵀ`.
pub fn cca_oracle(inst: &CcaInstance) -> Result<f64> {
    let lx = inst.cx.cholesky_factor();
    let ly = inst.cy.cholesky_factor();
    let left = lx.solve_lower_triangular(&inst.cxy).ok_or(Error::NotPositiveDefinite)?;
    let whitened = ly
        .solve_lower_triangular(&left.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let mut sv: Vec<f64> = whitened.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(-inst.weights.iter().zip(&sv).map(|(w, s)| w * s).sum::<f64>())
}

/// Seeded instance from `samples` Gaussian observations `X₀` (`samples×m`)
/// and `Y₀` (`samples×n`): `Cx = X₀ᵀX₀/T`, `Cy = Y₀ᵀY₀/T`, `Cxy = X₀ᵀY₀/T`.
pub fn generate_cca_instance(
    m: usize,
    n: usize,
    p: usize,
    samples: usize,
    seed: u64,
    weights: Option<Vec<f64>>,
) -> Result<CcaInstance> {
    if p == 0 || p > n || n > m {
        return Err(Error::InvalidParams(alloc::format!(
            "need 1 ≤ p ≤ n ≤ m, got m = {m}, n = {n}, p = {p}"
        )));
    }
    if samples < m {
        return Err(Error::Generation("fewer samples than dimensions makes Cx singular"));
    }
    let weights = weights.unwrap_or_else(|| default_weights(p));
    if weights.len() != p {
        return Err(Error::InvalidParams(alloc::format!(
            "expected {p} weights, got {}",
            weights.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = gaussian(samples, m, &mut rng);
    let y0 = gaussian(samples, n, &mut rng);
    let scale = 1.0 / samples as f64;
    let cx = sym(&(x0.tr_mul(&x0) * scale));
    let cy = sym(&(y0.tr_mul(&y0) * scale));
    let cxy = x0.tr_mul(&y0) * scale;
    match CcaInstance::new(cx, cy, cxy, weights) {
        Err(Error::NotPositiveDefinite) | Err(Error::NotSymmetric(_)) => {
            Err(Error::Generation("sample covariance is numerically singular"))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_weights_follow_the_table_pattern() {
        let w = default_weights(10);
        assert_eq!(w.len(), 10);
        assert!((w[0] - 2.0).abs() < 1e-15);
        assert!((w[9] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn diagonal_oracle() {
        let mut cxy = Mat::zeros(3, 2);
        cxy[(0, 0)] = 0.9;
        cxy[(1, 1)] = 0.5;
        let inst = CcaInstance::new(Mat::identity(3, 3), Mat::identity(2, 2), cxy, alloc::vec![2.0, 1.0]).unwrap();
        assert!((cca_oracle(&inst).unwrap() + 2.3).abs() < 1e-14);
    }

    #[test]
    fn zero_cross_covariance_is_flat() {
        let inst = CcaInstance::new(
            Mat::identity(4, 4),
            Mat::identity(3, 3),
            Mat::zeros(4, 3),
            alloc::vec![1.2, 1.1],
        )
        .unwrap();
        assert_eq!(cca_oracle(&inst).unwrap(), 0.0);
        let prob = cca_problem(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = prob.manifold().random_point(&[2, 2], &mut rng).unwrap();
        assert_eq!(prob.objective(&x), 0.0);
        assert_eq!(prob.riemannian_gradient(&x).unwrap().norm(), 0.0);
    }

    #[test]
    fn generation_checks() {
        let a = generate_cca_instance(20, 10, 3, 100, 4, None).unwrap();
        let b = generate_cca_instance(20, 10, 3, 100, 4, None).unwrap();
        assert_eq!(a.cxy(), b.cxy());
        assert!(matches!(
            generate_cca_instance(20, 10, 3, 10, 4, None),
            Err(Error::Generation(_))
        ));
        assert!(matches!(
            generate_cca_instance(20, 10, 2, 100, 4, Some(alloc::vec![1.0, 2.0])),
            Err(Error::InvalidParams(_))
        ));
    }
}
