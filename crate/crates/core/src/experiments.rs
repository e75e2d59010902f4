//! Synthetic recovery experiments on orthogonally decomposable tensors.
//!
//! A trial draws an ODECO ground truth `T = d Σ_k u_k ⊗ v_k ⊗ w_k`, samples
//! `n = round(α √r d^{3/2})` entries uniformly with replacement, initializes
//! spectrally, runs the Grassmannian descent and scores the result by the
//! relative Frobenius error of the completed tensor. A trial succeeds when
//! that error is at most [`SUCCESS_TOL`].
//!
//! Seeds: every trial owns a 64-bit seed. Inside a trial the ground truth,
//! the sample and the initialization perturbation use independent streams
//! keyed by `mix(&[seed, label])`. A sweep derives the seed of trial `t` in
//! cell `(r, α_j)` as `mix(&[master, d, r, j, t])`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::clock::Stopwatch;
use crate::completion::{gog_run, solve_core, GogConfig};
use crate::error::{arg, Error, Result};
use crate::grassmann::{Frame, TripleFrame};
use crate::linalg;
use crate::observations::ObservationSet;
use crate::rng::{mix, Stream};
use crate::spectral;
use crate::tensor::{multilinear_product, CoreTensor, Tensor3};

/// Relative error at or below which a trial counts as exact recovery.
pub const SUCCESS_TOL: f64 = 1e-7;

const TRUTH_LABEL: u64 = 0x7E57_0001;
const SAMPLE_LABEL: u64 = 0x7E57_0002;
const PERTURB_LABEL: u64 = 0x7E57_0003;

/// An ODECO tensor together with its decomposition.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub tensor: Tensor3,
    pub factors: TripleFrame,
    pub core: CoreTensor,
}

impl GroundTruth {
    /// Largest coherence among the three factor frames.
    pub fn coherence(&self) -> f64 {
        self.factors.max_coherence()
    }
}

/// `d · Σ_k u_k ⊗ v_k ⊗ w_k` with each factor frame the leading `r`
/// eigenvectors of an independent symmetrized standard Gaussian matrix.
pub fn generate_odeco(d: usize, r: usize, seed: u64) -> Result<GroundTruth> {
    if r == 0 || r > d {
        return arg(format!("rank must be in 1..={d}, got {r}"));
    }
    let mut stream = Stream::derive(seed, TRUTH_LABEL);
    let mut frame = || -> Result<Frame> {
        let g = DMatrix::from_fn(d, d, |_, _| stream.normal());
        let sym = (&g + g.transpose()) * 0.5;
        let (_, vecs) = linalg::symmetric_eigen_desc(&sym)?;
        Frame::orthonormalize(&vecs.columns(0, r).into_owned())
    };
    let factors = TripleFrame::new(frame()?, frame()?, frame()?);
    let core = CoreTensor::diagonal(&vec![d as f64; r]);
    let tensor = multilinear_product(
        &core,
        factors.x.matrix(),
        factors.y.matrix(),
        factors.z.matrix(),
    )?;
    Ok(GroundTruth {
        tensor,
        factors,
        core,
    })
}

/// `round(α √r d^{3/2})` with halves rounded up.
pub fn sample_size(d: usize, r: usize, alpha: f64) -> usize {
    let raw = alpha * (r as f64).sqrt() * (d as f64).powf(1.5);
    (raw + 0.5).floor() as usize
}

/// How the coherence level of the penalty is chosen in a trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mu0 {
    /// Measured coherence of the generated ground truth.
    Truth,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    /// Solver settings; its `mu0` is replaced according to `mu0` below.
    pub solver: GogConfig,
    pub mu0: Mu0,
    /// Record wall time in `runtime_ms`. Off by default so that records
    /// are bitwise reproducible.
    pub timing: bool,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            solver: GogConfig::default(),
            mu0: Mu0::Truth,
            timing: false,
        }
    }
}

/// Outcome of one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRecord {
    pub d: usize,
    pub r: usize,
    pub alpha: f64,
    pub n: usize,
    /// Index of the trial within its sweep cell (0 for standalone trials).
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub rel_error: f64,
    pub iterations: usize,
    /// Summed projection distance between the initialization and the truth.
    pub dp_init: f64,
    pub runtime_ms: f64,
}

/// One recovery trial.
pub fn run_trial(
    d: usize,
    r: usize,
    alpha: f64,
    seed: u64,
    config: &TrialConfig,
) -> Result<TrialRecord> {
    perturbed_init_trial(d, r, alpha, 0.0, seed, config)
}

/// A trial whose spectral frames get `σ Z` added (Z i.i.d. standard normal)
/// before re-orthonormalization and trimming. `σ = 0` is exactly
/// [`run_trial`].
pub fn perturbed_init_trial(
    d: usize,
    r: usize,
    alpha: f64,
    sigma: f64,
    seed: u64,
    config: &TrialConfig,
) -> Result<TrialRecord> {
    Ok(TrialSpec::with_alpha(d, r, alpha, seed)?
        .sigma(sigma)
        .run(config)?
        .record)
}

/// Everything that identifies a trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSpec {
    pub d: usize,
    pub r: usize,
    /// Recorded oversampling factor, `n / (√r d^{3/2})` up to rounding.
    pub alpha: f64,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Run the descent; when false the estimate is the least-squares core on
    /// the initial frames and `iterations` is 0.
    pub descend: bool,
}

/// A finished trial with the completed tensor.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub estimate: Tensor3,
}

impl TrialSpec {
    /// `n = round(α √r d^{3/2})`.
    pub fn with_alpha(d: usize, r: usize, alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return arg(format!("alpha must be positive, got {alpha}"));
        }
        Ok(Self {
            d,
            r,
            alpha,
            n: sample_size(d, r, alpha),
            sigma: 0.0,
            seed,
            descend: true,
        })
    }

    /// Explicit sample size; `alpha` is derived from it.
    pub fn with_size(d: usize, r: usize, n: usize, seed: u64) -> Self {
        Self {
            d,
            r,
            alpha: n as f64 / ((r as f64).sqrt() * (d as f64).powf(1.5)),
            n,
            sigma: 0.0,
            seed,
            descend: true,
        }
    }

    pub fn sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn init_only(mut self) -> Self {
        self.descend = false;
        self
    }

    pub fn run(&self, config: &TrialConfig) -> Result<TrialOutcome> {
        let TrialSpec {
            d,
            r,
            alpha,
            n,
            sigma,
            seed,
            descend,
        } = *self;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return arg(format!("sigma must be nonnegative, got {sigma}"));
        }
        let clock = Stopwatch::start();
        let truth = generate_odeco(d, r, mix(&[seed, TRUTH_LABEL]))?;
        let obs = ObservationSet::sample_uniform(&truth.tensor, n, mix(&[seed, SAMPLE_LABEL]))?;
        let mut solver = config.solver;
        solver.mu0 = match config.mu0 {
            Mu0::Truth => truth.coherence(),
            Mu0::Fixed(m) => m,
        };
        solver.validate()?;

        let ranks = [r; 3];
        let raw = spectral::spectral_frames(&obs, ranks)?;
        let raw = if sigma > 0.0 {
            perturb(&raw, sigma, mix(&[seed, PERTURB_LABEL]))?
        } else {
            raw
        };
        let init = raw.trim(solver.mu0)?;
        let dp_init = init.distance(&truth.factors)?;

        let (estimate, iterations) = if descend {
            let report = gog_run(&obs, ranks, &solver, &init)?;
            (report.reconstruction()?, report.iterations())
        } else {
            (least_squares_estimate(&init, &obs)?, 0)
        };
        let rel_error = relative_error(&estimate, &truth.tensor)?;
        if !rel_error.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite relative error (seed {seed})"
            )));
        }
        let record = TrialRecord {
            d,
            r,
            alpha,
            n,
            trial: 0,
            seed,
            success: rel_error <= SUCCESS_TOL,
            rel_error,
            iterations,
            dp_init,
            runtime_ms: if config.timing {
                clock.elapsed_ms()
            } else {
                0.0
            },
        };
        Ok(TrialOutcome { record, estimate })
    }
}

/// `(X, Y, Z)·C` with `C` the least-squares core for the given frames.
pub fn least_squares_estimate(frames: &TripleFrame, obs: &ObservationSet) -> Result<Tensor3> {
    let core = solve_core(frames, obs)?.core;
    multilinear_product(
        &core,
        frames.x.matrix(),
        frames.y.matrix(),
        frames.z.matrix(),
    )
}

/// `‖estimate − truth‖F / ‖truth‖F`.
pub fn relative_error(estimate: &Tensor3, truth: &Tensor3) -> Result<f64> {
    Ok(estimate.sub(truth)?.frobenius_norm() / truth.frobenius_norm())
}

fn perturb(frames: &TripleFrame, sigma: f64, seed: u64) -> Result<TripleFrame> {
    let mut stream = Stream::new(seed);
    let mut one = |f: &Frame| -> Result<Frame> {
        let m = f.matrix();
        let noisy = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            m[(i, j)] + sigma * stream.normal()
        });
        Frame::orthonormalize(&noisy)
    };
    Ok(TripleFrame::new(
        one(&frames.x)?,
        one(&frames.y)?,
        one(&frames.z)?,
    ))
}

/// Seed of trial `trial` in the sweep cell `(r, alphas[alpha_index])`.
pub fn trial_seed(master: u64, d: usize, r: usize, alpha_index: usize, trial: usize) -> u64 {
    mix(&[master, d as u64, r as u64, alpha_index as u64, trial as u64])
}

/// Grid and execution settings of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub d: usize,
    pub ranks: Vec<usize>,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Initialization perturbation; 0 runs plain trials.
    pub sigma: f64,
    /// Worker threads; `None` uses rayon's default (one per core).
    pub threads: Option<usize>,
}

/// Aggregates over the trials of one `(r, α)` cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellSummary {
    pub r: usize,
    pub alpha: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_rel_error: f64,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Ordered by rank, then α.
    pub cells: Vec<CellSummary>,
    /// Ordered by cell, then trial index.
    pub records: Vec<TrialRecord>,
}

/// Runs `spec.trials` independent trials for every `(r, α)` pair.
///
/// Trials may run in parallel; the output does not depend on the thread
/// count.
pub fn sweep(spec: &SweepSpec, config: &TrialConfig) -> Result<SweepResult> {
    if spec.ranks.is_empty() || spec.alphas.is_empty() {
        return arg("sweep needs at least one rank and one alpha");
    }
    if spec.trials == 0 {
        return arg("sweep needs at least one trial per cell");
    }
    if spec.threads == Some(0) {
        return arg("thread count must be positive");
    }
    let jobs: Vec<(usize, usize, usize)> = spec
        .ranks
        .iter()
        .flat_map(|&r| {
            (0..spec.alphas.len()).flat_map(move |j| (0..spec.trials).map(move |t| (r, j, t)))
        })
        .collect();
    let run = |&(r, j, t): &(usize, usize, usize)| -> Result<TrialRecord> {
        let seed = trial_seed(spec.seed, spec.d, r, j, t);
        let mut rec = perturbed_init_trial(spec.d, r, spec.alphas[j], spec.sigma, seed, config)?;
        rec.trial = t;
        Ok(rec)
    };
    let records: Vec<TrialRecord> = match spec.threads {
        Some(1) => jobs.iter().map(run).collect::<Result<_>>()?,
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {k} threads: {e}")))?
            .install(|| jobs.par_iter().map(run).collect::<Result<_>>())?,
        None => jobs.par_iter().map(run).collect::<Result<_>>()?,
    };
    let cells = records.chunks(spec.trials).map(summarize).collect();
    Ok(SweepResult { cells, records })
}

/// Success rate and means over a set of trials from one cell.
pub fn summarize(records: &[TrialRecord]) -> CellSummary {
    let k = records.len() as f64;
    let first = records.first();
    CellSummary {
        r: first.map_or(0, |rec| rec.r),
        alpha: first.map_or(f64::NAN, |rec| rec.alpha),
        trials: records.len(),
        success_rate: records.iter().filter(|rec| rec.success).count() as f64 / k,
        mean_rel_error: records.iter().map(|rec| rec.rel_error).sum::<f64>() / k,
        mean_iterations: records.iter().map(|rec| rec.iterations as f64).sum::<f64>() / k,
    }
}
