//! Tucker completion by gradient descent on a product of Grassmannians.
//!
//! The objective is `F̃ = F + G`, where `F(X, Y, Z)` is the least-squares fit
//! on the observed entries with the core solved in closed form, and `G`
//! penalizes frames whose rows grow past the `3μ0` coherence level. Each
//! iteration moves all three frames along their geodesics in the negative
//! gradient direction, with the step chosen by a line search restricted to a
//! ball of radius `γ` (in summed projection distance) around the starting
//! point.

mod gog;
mod line_search;
mod objective;

pub use gog::{gog_run, SolveReport, SolveState, StopReason, TraceEntry};
pub use line_search::line_search;
pub use objective::{
    auto_rho, frame_penalty, frame_penalty_gradient, objective_f, penalty, penalty_g0,
    penalty_g0_prime, solve_core, CoreSolve, Evaluation, Objective, PENALTY_CLAMP, PINV_RCOND,
};

use crate::error::{arg, Result};
use crate::observations::ObservationSet;

/// Penalty weight: fixed, or derived from the data by [`auto_rho`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rho {
    Fixed(f64),
    Auto,
}

impl Rho {
    pub fn resolve(self, obs: &ObservationSet) -> Result<f64> {
        match self {
            Rho::Fixed(v) => Ok(v),
            Rho::Auto => auto_rho(obs),
        }
    }
}

/// Controls for the bracketing + golden-section step search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchConfig {
    /// First probe moves `initial_fraction · min(γ, diameter)` in tangent norm.
    pub initial_fraction: f64,
    /// Bracket expansion factor.
    pub growth: f64,
    /// Golden-section stops when the bracket is narrower than this fraction
    /// of its midpoint.
    pub golden_tol: f64,
    /// Hard cap on objective evaluations per search.
    pub max_probes: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            initial_fraction: 1e-3,
            growth: 2.0,
            golden_tol: 1e-3,
            max_probes: 80,
        }
    }
}

/// Solver hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GogConfig {
    pub mu0: f64,
    pub rho: Rho,
    /// Trust-ball radius around the initial point. The default is unbounded,
    /// which leaves the search free over the whole product of Grassmannians.
    pub gamma: f64,
    pub eps_tol: f64,
    /// Stop once `F̃ ≤ fit_tol · ½ Σ_i T(ω_i)²`.
    pub fit_tol: f64,
    pub max_iterations: usize,
    pub line_search: LineSearchConfig,
}

impl Default for GogConfig {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            rho: Rho::Auto,
            gamma: f64::INFINITY,
            eps_tol: 1e-14,
            fit_tol: 1e-20,
            max_iterations: 500,
            line_search: LineSearchConfig::default(),
        }
    }
}

impl GogConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 >= 1.0) {
            return arg(format!("mu0 must be at least 1, got {}", self.mu0));
        }
        if let Rho::Fixed(r) = self.rho {
            if !(r >= 0.0) {
                return arg(format!("rho must be nonnegative, got {r}"));
            }
        }
        if !(self.gamma > 0.0) {
            return arg(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.eps_tol > 0.0) {
            return arg(format!("eps_tol must be positive, got {}", self.eps_tol));
        }
        if !(self.fit_tol >= 0.0) {
            return arg(format!("fit_tol must be nonnegative, got {}", self.fit_tol));
        }
        if self.max_iterations < 1 {
            return arg("max_iterations must be at least 1");
        }
        let ls = &self.line_search;
        if !(ls.initial_fraction > 0.0
            && ls.growth > 1.0
            && ls.golden_tol > 0.0
            && ls.max_probes >= 4)
        {
            return arg("invalid line-search controls");
        }
        Ok(())
    }
}
