//! Riemannian non-monotone conjugate gradient with modified-PRP directions
//! and Barzilai–Borwein trial steps.

mod direction;
mod line_search;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use crate::cayley::RetractionStrategy;
use crate::error::{Error, Result};
use crate::product::{ProductManifold, ProductPoint, ProductTangent, Retraction, Transport};
use crate::Mat;

pub use direction::{bb_initial_step, bb_step, beta_mprp, beta_mprp_vectors};
pub use line_search::{line_search_nonmonotone, LineSearchOutcome};

/// Relative threshold below which `⟨grad, Z⟩` is not trusted as descent.
pub const DESCENT_TOL: f64 = 1e-12;

/// A smooth objective on a (product of) generalized Stiefel manifold(s).
pub trait Problem {
    fn manifold(&self) -> &ProductManifold;
    fn objective(&self, x: &ProductPoint) -> f64;
    /// One Euclidean gradient block per manifold factor.
    fn euclidean_gradient(&self, x: &ProductPoint) -> Vec<Mat>;

    /// `f(y) − f(x)`. Problems should override this with a formula that
    /// stays accurate when the change is far below the rounding error of
    /// `f` itself; the line search compares these differences.
    fn objective_change(&self, x: &ProductPoint, y: &ProductPoint) -> f64 {
        self.objective(y) - self.objective(x)
    }

    fn riemannian_gradient(&self, x: &ProductPoint) -> Result<ProductTangent> {
        self.manifold().egrad_to_rgrad(x, &self.euclidean_gradient(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub epsilon: f64,
    pub epsilon_c: f64,
    pub delta: f64,
    /// Non-monotone window length.
    pub q: usize,
    pub sigma: f64,
    pub t0: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Iteration cap.
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub retraction: Retraction,
    pub transport: Transport,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            epsilon_c: 1e-13,
            delta: 1e-4,
            q: 2,
            sigma: 0.2,
            t0: 1e-3,
            t_min: 1e-20,
            t_max: 1.0,
            max_iter: 1000,
            max_backtracks: 50,
            retraction: Retraction::default(),
            transport: Transport::default(),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if !(self.epsilon >= 0.0) || !(self.epsilon_c >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma must lie in (0, 1)");
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return bad("need 0 < t_min < t_max < ∞");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0 must be positive");
        }
        if self.q == 0 {
            return bad("window length q must be at least 1");
        }
        if self.max_iter == 0 {
            return bad("iteration cap must be at least 1");
        }
        if self.transport.requires_cayley() && !matches!(self.retraction, Retraction::Cayley(_)) {
            return Err(Error::InvalidParams(format!(
                "{:?} transport needs the Cayley retraction, got {:?}",
                self.transport, self.retraction
            )));
        }
        Ok(())
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        let (r, t) = variant.scheme();
        self.retraction = r;
        self.transport = t;
        self
    }
}

/// The algorithm configurations compared by the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Cayley retraction with the differentiated-retraction transport.
    Algor1a,
    /// Cayley retraction with the isometric transport.
    Algor1b,
    CgCholQr,
    CgPolar,
    /// Dense Cayley retraction with projection transport.
    CgCayleyFull,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Algor1a,
        Variant::Algor1b,
        Variant::CgCholQr,
        Variant::CgPolar,
        Variant::CgCayleyFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Algor1a => "algor1a",
            Variant::Algor1b => "algor1b",
            Variant::CgCholQr => "cg-cholqr",
            Variant::CgPolar => "cg-pol",
            Variant::CgCayleyFull => "cg-cayley-full",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn scheme(self) -> (Retraction, Transport) {
        match self {
            Variant::Algor1a => (Retraction::Cayley(RetractionStrategy::Auto), Transport::DiffRetraction),
            Variant::Algor1b => (Retraction::Cayley(RetractionStrategy::Auto), Transport::Isometric),
            Variant::CgCholQr => (Retraction::CholQr, Transport::Projection),
            Variant::CgPolar => (Retraction::Polar, Transport::Projection),
            Variant::CgCayleyFull => (Retraction::Cayley(RetractionStrategy::Full), Transport::Projection),
        }
    }

    pub fn params(self) -> SolverParams {
        SolverParams::default().with_variant(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// `f(X_k)`.
    pub f: f64,
    pub grad_norm: f64,
    /// `⟨grad f(X_k), Z_k⟩`.
    pub slope: f64,
    /// `max_j f(X_j) − f(X_k)` over the non-monotone window.
    pub window_slack: f64,
    /// Accepted step `t_k`.
    pub t: f64,
    /// `f(X_{k+1}) − f(X_k)`, evaluated by [`Problem::objective_change`].
    pub df: f64,
    /// `β_{k+1}`.
    pub beta: f64,
    /// Cumulative evaluation count after this iteration.
    pub nfe: usize,
    /// Whether `Z_k` was reset to `−grad f(X_k)`.
    pub restarted: bool,
    pub feasibility: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: ProductPoint,
    pub obj: f64,
    pub grad_norm: f64,
    pub initial_grad_norm: f64,
    pub rel_grad_norm: f64,
    pub iterations: usize,
    pub nfe: usize,
    /// Seconds; zero without the `std` feature.
    pub wall_time: f64,
    pub feasibility: f64,
    /// Largest iterate feasibility residual before restoration.
    pub max_feasibility_drift: f64,
    pub obj_history: Vec<f64>,
    pub grad_history: Vec<f64>,
    pub restored: bool,
    pub status: Status,
    pub trace: Vec<IterRecord>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

struct Clock {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

/// Runs the conjugate gradient method from `x0`.
pub fn solve<P: Problem + ?Sized>(problem: &P, x0: &ProductPoint, params: &SolverParams) -> Result<SolveResult> {
    params.validate()?;
    let manifold = problem.manifold();
    let residual = manifold.feasibility(x0);
    if !(residual <= 1e-8) {
        return Err(Error::Infeasible {
            residual,
            tolerance: 1e-8,
        });
    }
    let clock = Clock::start();

    let mut x = x0.clone();
    let mut f = problem.objective(&x);
    let mut nfe = 1;
    let mut g = problem.riemannian_gradient(&x)?;
    let mut g_norm = g.norm();
    let initial_grad_norm = g_norm;
    let mut z = g.scaled(-1.0);
    let mut t = params.t0;
    // Offsets f(X_j) − f(X_k) of the last q iterates, current one last.
    let mut window: VecDeque<f64> = VecDeque::with_capacity(params.q);
    window.push_back(0.0);
    let mut obj_history = alloc::vec![f];
    let mut grad_history = alloc::vec![g_norm];
    let mut trace = Vec::new();
    let mut max_drift = residual;
    let mut k = 0;

    let status = loop {
        if g_norm <= params.epsilon {
            break Status::Converged;
        }
        if k >= params.max_iter {
            break Status::MaxIterations;
        }
        let mut restarted = false;
        let mut slope = g.inner(&z);
        if !(slope < -DESCENT_TOL * g_norm * z.norm()) {
            z = g.scaled(-1.0);
            slope = -g_norm * g_norm;
            restarted = true;
        }
        let offsets: Vec<f64> = window.iter().copied().collect();
        let window_slack = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let outcome = match line_search_nonmonotone(problem, &x, &z, &g, &offsets, t, params) {
            Ok(o) => o,
            Err(Error::LineSearchFailure { trials, .. }) if !restarted => {
                nfe += trials;
                z = g.scaled(-1.0);
                slope = -g_norm * g_norm;
                restarted = true;
                match line_search_nonmonotone(problem, &x, &z, &g, &offsets, t, params) {
                    Ok(o) => o,
                    Err(Error::LineSearchFailure { trials, .. }) => {
                        nfe += trials;
                        break Status::LineSearchFailure;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::LineSearchFailure { trials, .. }) => {
                nfe += trials;
                break Status::LineSearchFailure;
            }
            Err(e) => return Err(e),
        };
        nfe += outcome.nfe_used;
        let t_k = outcome.t;
        let df = outcome.df;
        let f_new = f + df;
        let x_new = outcome.step.point().clone();
        let g_new = problem.riemannian_gradient(&x_new)?;
        let g_new_norm = g_new.norm();

        let tz = outcome.step.transport_direction(manifold, &z, params.transport)?;
        let tg = outcome.step.transport(manifold, &g, params.transport)?;
        let beta = beta_mprp(g_new_norm, g_norm, g_new.inner(&tg))?;
        let z_new = g_new.scaled(-1.0).add_scaled(beta, &tz)?;

        // S = t_k Z_k, Y = g₊ − T(g); ⟨Y,S⟩ pairs the coefficient arrays with M·S.
        let ss = t_k * t_k * z.inner(&z);
        let ys = t_k * (g_new.inner(&z) - tg.inner(&z));
        let t_next = bb_step(ss, ys, params);

        let drift = manifold.feasibility(&x_new);
        max_drift = max_drift.max(drift);
        trace.push(IterRecord {
            k,
            f,
            grad_norm: g_norm,
            slope,
            window_slack,
            t: t_k,
            df,
            beta,
            nfe,
            restarted,
            feasibility: drift,
        });

        if window.len() == params.q {
            window.pop_front();
        }
        for w in window.iter_mut() {
            *w -= df;
        }
        window.push_back(0.0);
        obj_history.push(f_new);
        grad_history.push(g_new_norm);

        x = x_new;
        f = f_new;
        g = g_new;
        g_norm = g_new_norm;
        z = z_new;
        t = t_next;
        k += 1;
    };

    let (x_final, restored) = manifold.restore(&x, params.epsilon_c)?;
    if restored {
        x = x_final;
        nfe += 1;
        g_norm = problem.riemannian_gradient(&x)?.norm();
    }
    // The running value f₀ + Σ Δf carries the accumulated rounding of the
    // sum; report a fresh evaluation instead.
    f = problem.objective(&x);
    let wall_time = clock.elapsed();
    let feasibility = manifold.feasibility(&x);
    let rel_grad_norm = if initial_grad_norm > 0.0 {
        g_norm / initial_grad_norm
    } else {
        0.0
    };
    Ok(SolveResult {
        x,
        obj: f,
        grad_norm: g_norm,
        initial_grad_norm,
        rel_grad_norm,
        iterations: k,
        nfe,
        wall_time,
        feasibility,
        max_feasibility_drift: max_drift,
        obj_history,
        grad_history,
        restored,
        status,
        trace,
    })
}
