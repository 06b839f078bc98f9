//! JSON overrides for the solver defaults, e.g. `{"epsilon": 1e-8, "q": 5}`.
//!
//! Retraction and transport are chosen by the variant and cannot be
//! overridden here.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use gstiefel_core::SolverParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub epsilon: Option<f64>,
    pub epsilon_c: Option<f64>,
    pub delta: Option<f64>,
    pub q: Option<usize>,
    pub sigma: Option<f64>,
    pub t0: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_backtracks: Option<usize>,
}

impl ParamOverrides {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn apply(&self, mut p: SolverParams) -> SolverParams {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f {
                    p.$f = v;
                }
            )*};
        }
        set!(
            epsilon,
            epsilon_c,
            delta,
            q,
            sigma,
            t0,
            t_min,
            t_max,
            max_iter,
            max_backtracks
        );
        p
    }
}

/// The numeric part of a parameter set, for report metadata.
#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub epsilon: f64,
    pub epsilon_c: f64,
    pub delta: f64,
    pub q: usize,
    pub sigma: f64,
    pub t0: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl From<&SolverParams> for ParamSummary {
    fn from(p: &SolverParams) -> Self {
        Self {
            epsilon: p.epsilon,
            epsilon_c: p.epsilon_c,
            delta: p.delta,
            q: p.q,
            sigma: p.sigma,
            t0: p.t0,
            t_min: p.t_min,
            t_max: p.t_max,
            max_iter: p.max_iter,
            max_backtracks: p.max_backtracks,
        }
    }
}
