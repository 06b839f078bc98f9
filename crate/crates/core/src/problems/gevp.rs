//! Generalized eigenvalue problem `max tr(XᵀAX)` s.t. `XᵀMX = I`, solved as
//! the minimization of `−tr(XᵀAX)`.

use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::sym;
use crate::error::{Error, Result};
use crate::manifold::{gaussian, MetricContext};
use crate::product::{ProductManifold, ProductPoint};
use crate::solver::Problem;
use crate::Mat;

/// Rows of the Gaussian factor used to build the random metric `M`.
pub const METRIC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GevpKind {
    /// `A = diag(1, …, n)`.
    DiagA,
    /// `A = DᵀD` with Gaussian `D`.
    RandomA,
}

#[derive(Debug, Clone)]
pub struct GevpInstance {
    a: Mat,
    metric: MetricContext,
    p: usize,
}

impl GevpInstance {
    pub fn new(a: Mat, m: Mat, p: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension {
                expected: (n, n),
                found: (m.nrows(), m.ncols()),
            });
        }
        if p == 0 || p > n {
            return Err(Error::InvalidParams(alloc::format!(
                "need 1 ≤ p ≤ n, got p = {p}, n = {n}"
            )));
        }
        let asym = (&a - a.transpose()).amax() / a.amax().max(f64::MIN_POSITIVE);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        let metric = MetricContext::new(m)?;
        Ok(Self { a, metric, p })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn m(&self) -> &Mat {
        self.metric.matrix()
    }

    pub fn metric(&self) -> &MetricContext {
        &self.metric
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

#[derive(Debug, Clone)]
pub struct GevpProblem {
    a: Mat,
    manifold: ProductManifold,
    p: usize,
}

impl GevpProblem {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn metric(&self) -> &MetricContext {
        &self.manifold.factors()[0]
    }
}

pub fn gevp_problem(inst: &GevpInstance) -> GevpProblem {
    GevpProblem {
        a: inst.a.clone(),
        manifold: ProductManifold::single(inst.metric.clone()),
        p: inst.p,
    }
}

impl Problem for GevpProblem {
    fn manifold(&self) -> &ProductManifold {
        &self.manifold
    }

    fn objective(&self, x: &ProductPoint) -> f64 {
        let x = x.parts()[0].matrix();
        -x.dot(&(&self.a * x))
    }

    fn euclidean_gradient(&self, x: &ProductPoint) -> Vec<Mat> {
        let x = x.parts()[0].matrix();
        alloc::vec![&self.a * x * -2.0]
    }

    /// `−tr((Y−X)ᵀA(X+Y))`; `Y − X` is formed from nearby entries and is
    /// nearly exact.
    fn objective_change(&self, x: &ProductPoint, y: &ProductPoint) -> f64 {
        let (x, y) = (x.parts()[0].matrix(), y.parts()[0].matrix());
        -(y - x).dot(&(&self.a * (x + y)))
    }
}

/// `−Σ` of the `p` largest eigenvalues of the pencil `(A, M)`, from the
/// standard problem `L⁻¹AL⁻ᵀ` with `M = LLᵀ`.
pub fn gevp_oracle(inst: &GevpInstance) -> Result<f64> {
    let l = inst.metric.cholesky_factor();
    let la = l.solve_lower_triangular(&inst.a).ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&la.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let mut eig: Vec<f64> = SymmetricEigen::new(sym(&c)).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(-eig.iter().take(inst.p).sum::<f64>())
}

/// Seeded instance: `M = YᵀY/S + I` with `Y` an `S×n` Gaussian matrix, then
/// `A` according to `kind`.
pub fn generate_gevp_instance(kind: GevpKind, n: usize, p: usize, seed: u64) -> Result<GevpInstance> {
    if p == 0 || p > n {
        return Err(Error::InvalidParams(alloc::format!(
            "need 1 ≤ p ≤ n, got p = {p}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = gaussian(METRIC_SAMPLES, n, &mut rng);
    let m = sym(&(y.tr_mul(&y) / METRIC_SAMPLES as f64)) + Mat::identity(n, n);
    let a = match kind {
        GevpKind::DiagA => Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| (i + 1) as f64)),
        GevpKind::RandomA => {
            let d = gaussian(n, n, &mut rng);
            sym(&d.tr_mul(&d))
        }
    };
    GevpInstance::new(a, m, p).map_err(|_| Error::Generation("generated GEVP instance is invalid"))
}
