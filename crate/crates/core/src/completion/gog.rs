use crate::clock::Stopwatch;
use crate::error::{arg, Result};
use crate::grassmann::TripleFrame;
use crate::observations::ObservationSet;
use crate::tensor::{multilinear_product, CoreTensor, Tensor3};

use super::line_search::line_search;
use super::objective::Objective;
use super::GogConfig;

/// One iterate of the descent.
#[derive(Clone, Debug)]
pub struct SolveState {
    pub frames: TripleFrame,
    /// Least-squares core at `frames`.
    pub core: CoreTensor,
    /// `F̃` at `frames`.
    pub objective: f64,
    pub gradient_norm: f64,
    pub iteration: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    /// Step accepted to reach this iterate (0 for the start).
    pub step: f64,
    /// Summed projection distance from the initial frames.
    pub distance_from_init: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// `F̃` fell below `fit_tol` times the observed energy.
    FitTolerance,
    /// Gradient norm below `eps_tol · n / (d1 d2 d3)`.
    GradientTolerance,
    /// Relative decrease of `F̃` below `eps_tol`, including a line search
    /// that found no admissible decrease.
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub state: SolveState,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceEntry>,
    pub rho: f64,
    /// Objective evaluations where the normal matrix was singular and the
    /// pseudoinverse was used.
    pub degenerate_solves: usize,
    pub wall_time_ms: f64,
}

impl SolveReport {
    /// `(X, Y, Z)·C` at the final iterate.
    pub fn reconstruction(&self) -> Result<Tensor3> {
        let f = &self.state.frames;
        multilinear_product(&self.state.core, f.x.matrix(), f.y.matrix(), f.z.matrix())
    }

    pub fn iterations(&self) -> usize {
        self.state.iteration
    }
}

/// Gradient descent on Grassmannians from `init`.
pub fn gog_run(
    obs: &ObservationSet,
    ranks: [usize; 3],
    config: &GogConfig,
    init: &TripleFrame,
) -> Result<SolveReport> {
    config.validate()?;
    if init.dims() != obs.dims() || init.ranks() != ranks {
        return arg(format!(
            "initial frames are {:?}/{:?}, expected dims {:?} and ranks {ranks:?}",
            init.dims(),
            init.ranks(),
            obs.dims()
        ));
    }
    let clock = Stopwatch::start();
    let rho = config.rho.resolve(obs)?;
    let objective = Objective::new(obs, config.mu0, rho);
    let energy = 0.5 * obs.values().map(|v| v * v).sum::<f64>();
    let grad_floor = config.eps_tol * obs.len() as f64 / obs.volume() as f64;

    let mut frames = init.clone();
    let mut eval = objective.evaluate(&frames)?;
    let mut degenerate_solves = usize::from(eval.degenerate);
    let mut value = eval.total();
    let mut grad = objective.gradient(&frames, &eval)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: value,
        gradient_norm: grad.norm(),
        step: 0.0,
        distance_from_init: 0.0,
    }];

    let mut iteration = 0;
    let stop_reason = loop {
        let gnorm = grad.norm();
        if value <= config.fit_tol * energy {
            break StopReason::FitTolerance;
        }
        if gnorm < grad_floor {
            break StopReason::GradientTolerance;
        }
        if iteration >= config.max_iterations {
            break StopReason::MaxIterations;
        }
        let dirs = grad.scaled(-1.0);
        let step = line_search(&objective, &frames, &eval, &dirs, config, init)?;
        degenerate_solves += usize::from(step.eval.degenerate);
        if step.t == 0.0 {
            break StopReason::Stalled;
        }
        let decrease = (value - step.value) / value;
        frames = step.frames;
        eval = step.eval;
        value = step.value;
        grad = objective.gradient(&frames, &eval)?;
        iteration += 1;
        trace.push(TraceEntry {
            iteration,
            objective: value,
            gradient_norm: grad.norm(),
            step: step.t,
            distance_from_init: frames.distance(init)?,
        });
        if decrease < config.eps_tol {
            break StopReason::Stalled;
        }
    };

    let gradient_norm = grad.norm();
    Ok(SolveReport {
        state: SolveState {
            frames,
            core: eval.core,
            objective: value,
            gradient_norm,
            iteration,
        },
        converged: stop_reason != StopReason::MaxIterations,
        stop_reason,
        trace,
        rho,
        degenerate_solves,
        wall_time_ms: clock.elapsed_ms(),
    })
}
