//! Non-monotone backtracking on `f(R_X(tZ))`.

use crate::error::{Error, Result};
use crate::product::{ProductPoint, ProductStep, ProductTangent};

use super::{Problem, SolverParams};

/// Result of an accepted line search.
#[derive(Debug)]
pub struct LineSearchOutcome {
    pub t: f64,
    pub step: ProductStep,
    /// `f(R_X(tZ)) − f(X)`.
    pub df: f64,
    /// Trials spent, counting retraction failures.
    pub nfe_used: usize,
}

/// Finds the largest `t = t_init·σʰ` with
/// `f(R_X(tZ)) ≤ max_j f(X_j) + δ·t·⟨grad f(X), Z⟩`.
///
/// The window is passed as offsets `f(X_j) − f(X)` and trial values are
/// compared through [`Problem::objective_change`], so the test keeps working
/// once the decrease per step drops below the rounding error of `f`.
pub fn line_search_nonmonotone<P: Problem + ?Sized>(
    problem: &P,
    x: &ProductPoint,
    z: &ProductTangent,
    grad: &ProductTangent,
    window_offsets: &[f64],
    t_init: f64,
    params: &SolverParams,
) -> Result<LineSearchOutcome> {
    let slope = grad.inner(z);
    if !(slope < 0.0) {
        return Err(Error::Degenerate("search direction is not a descent direction"));
    }
    let Some(slack) = window_offsets.iter().copied().reduce(f64::max) else {
        return Err(Error::InvalidParams("objective window is empty".into()));
    };
    let manifold = problem.manifold();
    let mut t = t_init;
    let mut best = (f64::NAN, f64::INFINITY);
    for h in 0..=params.max_backtracks {
        match manifold.step(x, z, t, params.retraction) {
            Ok(step) => {
                let df = problem.objective_change(x, step.point());
                if df < best.1 {
                    best = (t, df);
                }
                if df <= slack + params.delta * t * slope {
                    return Ok(LineSearchOutcome {
                        t,
                        step,
                        df,
                        nfe_used: h + 1,
                    });
                }
            }
            Err(Error::StepTooLarge) => {}
            Err(e) => return Err(e),
        }
        t *= params.sigma;
    }
    Err(Error::LineSearchFailure {
        trials: params.max_backtracks + 1,
        best_t: best.0,
        best_change: best.1,
    })
}
