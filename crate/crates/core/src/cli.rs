//! The `tcomp` command line.
//!
//! ```text
//! tcomp complete  --dims 20,20,20 --ranks 1,1,1 --alpha 10 --seed 1 --out run.csv
//! tcomp sweep     --d 50 --ranks 2,3,4,5 --alphas 1:10:1 --trials 50 --seed 7 --out rates.csv
//! tcomp init-only --dims 30,30,30 --ranks 2,2,2 --n 3000
//! ```
//!
//! Without `--input`, `complete` and `init-only` run one synthetic ODECO
//! trial (cubic dims, equal ranks). With `--input` they read either a tensor
//! file (header `d1 d2 d3`), which is then sampled, or an observation file
//! (header `d1 d2 d3 n`), which is used as is. Results go to `--out` as CSV
//! (stdout when absent).
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 numeric
//! failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};

use clap::{Args, Parser, Subcommand};

use crate::completion::{gog_run, GogConfig, Rho};
use crate::error::{arg, Error, Result};
use crate::experiments::{
    self, least_squares_estimate, relative_error, Mu0, SweepResult, SweepSpec, TrialConfig,
    TrialRecord, TrialSpec, SUCCESS_TOL,
};
use crate::grassmann::{Frame, TripleFrame};
use crate::linalg;
use crate::observations::ObservationSet;
use crate::rng::mix;
use crate::spectral;
use crate::tensor::{Mode, Tensor3};

/// Column names of the trial CSV, in order.
pub const CSV_HEADER: [&str; 11] = [
    "d",
    "r",
    "alpha",
    "n",
    "trial",
    "seed",
    "success",
    "rel_error",
    "iterations",
    "dp_init",
    "runtime_ms",
];

const INPUT_SAMPLE_LABEL: u64 = 0x1_0B5E;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Complete,
    Sweep,
    InitOnly,
}

/// Where the sample comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleSpec {
    Count(usize),
    Alphas(Vec<f64>),
    /// An observation file supplies the sample.
    FromInput,
}

/// Parsed command line.
#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    /// Required for synthetic runs; checked against the file with `--input`.
    pub dims: Option<[usize; 3]>,
    /// Three mode ranks for `complete`/`init-only`; the rank list for `sweep`.
    pub ranks: Vec<usize>,
    pub sample: SampleSpec,
    /// `None` means auto.
    pub mu0: Option<f64>,
    pub rho: Rho,
    pub gamma: f64,
    pub eps_tol: f64,
    pub fit_tol: f64,
    pub max_iterations: usize,
    pub trials: usize,
    pub seed: u64,
    pub sigma: f64,
    pub threads: Option<usize>,
    pub timing: bool,
    pub input: Option<String>,
    pub output: Option<String>,
    pub tensor_out: Option<String>,
}

impl CliConfig {
    pub fn solver(&self) -> GogConfig {
        GogConfig {
            mu0: self.mu0.unwrap_or(1.0),
            rho: self.rho,
            gamma: self.gamma,
            eps_tol: self.eps_tol,
            fit_tol: self.fit_tol,
            max_iterations: self.max_iterations,
            ..GogConfig::default()
        }
    }

    pub fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            solver: self.solver(),
            mu0: self.mu0.map_or(Mu0::Truth, Mu0::Fixed),
            timing: self.timing,
        }
    }
}

/// A command line that could not be turned into a [`CliConfig`]. Help and
/// version requests also land here, with exit code 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Usage {
    pub message: String,
    pub code: i32,
}

#[derive(Parser)]
#[command(
    name = "tcomp",
    version,
    about = "Low-rank Tucker completion of third-order tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Complete one tensor (synthetic, or from --input).
    Complete(SingleArgs),
    /// Recovery-rate sweep over ranks and sample sizes.
    Sweep(SweepArgs),
    /// Spectral initialization only; the estimate uses the least-squares core.
    InitOnly(SingleArgs),
}

#[derive(Args)]
struct SingleArgs {
    /// Tensor dimensions d1,d2,d3.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Multilinear ranks r1,r2,r3.
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    /// Number of sampled entries.
    #[arg(long, conflicts_with = "alpha")]
    n: Option<usize>,
    /// Sample size factor: n = round(alpha * sqrt(r) * d^1.5).
    #[arg(long)]
    alpha: Option<f64>,
    /// Tensor or observation file.
    #[arg(long)]
    input: Option<String>,
    /// Write the completed tensor here.
    #[arg(long)]
    tensor_out: Option<String>,
    /// Standard deviation of the initialization perturbation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Cubic dimension d.
    #[arg(long)]
    d: usize,
    /// Ranks to sweep, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    /// Alpha values: `start:stop:step` or a comma list.
    #[arg(long, value_parser = parse_alphas)]
    alphas: AlphaList,
    /// Trials per (rank, alpha) cell.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Worker threads (default: one per core).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SolverArgs {
    /// Coherence level of the penalty, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_auto)]
    mu0: Auto,
    /// Penalty weight, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_auto)]
    rho: Auto,
    /// Trust-ball radius around the initialization (`inf` for none).
    #[arg(long, default_value_t = f64::INFINITY)]
    gamma: f64,
    /// Stop when the gradient norm falls below eps_tol * n / (d1 d2 d3) or
    /// the relative decrease of the objective below eps_tol.
    #[arg(long, default_value = "1e-14")]
    eps_tol: f64,
    /// Stop when the objective falls below fit_tol times the observed energy.
    #[arg(long, default_value = "1e-20")]
    fit_tol: f64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    max_iterations: u64,
    /// Record wall time in runtime_ms (otherwise 0, keeping output reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, Debug)]
struct Auto(Option<f64>);

#[derive(Clone, Debug)]
struct AlphaList(Vec<f64>);

fn parse_auto(s: &str) -> std::result::Result<Auto, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Auto(None));
    }
    s.parse::<f64>()
        .map(|v| Auto(Some(v)))
        .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
}

fn parse_alphas(s: &str) -> std::result::Result<AlphaList, String> {
    alpha_list(s).map(AlphaList)
}

/// Parses `start:stop:step` (stop included when reachable to within a
/// millionth of a step) or a comma separated list.
pub fn alpha_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("malformed number `{t}` in `{s}`"))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:stop:step, got `{s}`"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(stop >= start) {
            return Err(format!("range `{s}` needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-6).floor() as usize + 1;
        (0..count).map(|k| start + k as f64 * step).collect()
    } else {
        s.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(format!("alphas must be positive, got `{s}`"));
    }
    Ok(values)
}

/// Parses a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<CliConfig, Usage>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Usage {
        message: e.render().to_string(),
        code: if e.use_stderr() { 1 } else { 0 },
    })?;
    let usage = |message: String| Usage { message, code: 1 };
    let config = match cli.command {
        Sub::Sweep(a) => CliConfig {
            command: Command::Sweep,
            dims: Some([a.d; 3]),
            ranks: a.ranks,
            sample: SampleSpec::Alphas(a.alphas.0),
            mu0: a.solver.mu0.0,
            rho: a.solver.rho.0.map_or(Rho::Auto, Rho::Fixed),
            gamma: a.solver.gamma,
            eps_tol: a.solver.eps_tol,
            fit_tol: a.solver.fit_tol,
            max_iterations: a.solver.max_iterations as usize,
            trials: a.trials,
            seed: a.seed,
            sigma: a.sigma,
            threads: a.threads.map(|t| t as usize),
            timing: a.solver.timing,
            input: None,
            output: a.out,
            tensor_out: None,
        },
        Sub::Complete(a) => single(Command::Complete, a)?,
        Sub::InitOnly(a) => single(Command::InitOnly, a)?,
    };
    let mut probe = config.solver();
    probe.mu0 = config.mu0.unwrap_or(1.0);
    probe.validate().map_err(|e| usage(e.to_string()))?;
    if !(config.sigma >= 0.0 && config.sigma.is_finite()) {
        return Err(usage(format!(
            "--sigma must be nonnegative, got {}",
            config.sigma
        )));
    }
    if config.trials == 0 {
        return Err(usage("--trials must be at least 1".into()));
    }
    Ok(config)
}

fn single(command: Command, a: SingleArgs) -> std::result::Result<CliConfig, Usage> {
    let usage = |message: String| Usage { message, code: 1 };
    let dims = match a.dims {
        None => None,
        Some(v) => Some(
            <[usize; 3]>::try_from(v.as_slice())
                .map_err(|_| usage(format!("--dims needs three values, got {v:?}")))?,
        ),
    };
    if a.ranks.len() != 3 {
        return Err(usage(format!(
            "--ranks needs three values, got {:?}",
            a.ranks
        )));
    }
    let sample = match (a.n, a.alpha) {
        (Some(n), None) => SampleSpec::Count(n),
        (None, Some(alpha)) => SampleSpec::Alphas(vec![alpha]),
        (None, None) if a.input.is_some() => SampleSpec::FromInput,
        _ => return Err(usage("exactly one of --n and --alpha is required".into())),
    };
    if a.input.is_none() && dims.is_none() {
        return Err(usage("--dims is required without --input".into()));
    }
    Ok(CliConfig {
        command,
        dims,
        ranks: a.ranks,
        sample,
        mu0: a.solver.mu0.0,
        rho: a.solver.rho.0.map_or(Rho::Auto, Rho::Fixed),
        gamma: a.solver.gamma,
        eps_tol: a.solver.eps_tol,
        fit_tol: a.solver.fit_tol,
        max_iterations: a.solver.max_iterations as usize,
        trials: 1,
        seed: a.seed,
        sigma: a.sigma,
        threads: None,
        timing: a.solver.timing,
        input: a.input,
        output: a.out,
        tensor_out: a.tensor_out,
    })
}

/// Writes `records` as CSV with [`CSV_HEADER`]. Floats carry 17 significant
/// digits and `success` is 0/1.
pub fn emit_csv<'a, W: Write>(
    records: impl IntoIterator<Item = &'a TrialRecord>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let float = |x: f64| format!("{x:.16e}");
    for rec in records {
        w.write_record([
            rec.d.to_string(),
            rec.r.to_string(),
            float(rec.alpha),
            rec.n.to_string(),
            rec.trial.to_string(),
            rec.seed.to_string(),
            u8::from(rec.success).to_string(),
            float(rec.rel_error),
            rec.iterations.to_string(),
            float(rec.dp_init),
            float(rec.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// [`emit_csv`] to a file, or to stdout when `path` is `None`.
pub fn emit_csv_path<'a>(
    records: impl IntoIterator<Item = &'a TrialRecord>,
    path: Option<&str>,
) -> Result<()> {
    match path {
        Some(p) => emit_csv(records, BufWriter::new(create(p)?)),
        None => emit_csv(records, io::stdout().lock()),
    }
}

fn with_path(e: io::Error, path: &str) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{path}: {e}")))
}

fn create(path: &str) -> Result<File> {
    File::create(path).map_err(|e| with_path(e, path))
}

/// Reads records written by [`emit_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected CSV header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |field: &str| Error::Parse {
            line: i + 2,
            message: format!("malformed {field}"),
        };
        let get = |k: usize| row.get(k).ok_or_else(|| bad(CSV_HEADER[k]));
        let int = |k: usize| get(k)?.parse::<u64>().map_err(|_| bad(CSV_HEADER[k]));
        let float = |k: usize| get(k)?.parse::<f64>().map_err(|_| bad(CSV_HEADER[k]));
        out.push(TrialRecord {
            d: int(0)? as usize,
            r: int(1)? as usize,
            alpha: float(2)?,
            n: int(3)? as usize,
            trial: int(4)? as usize,
            seed: int(5)?,
            success: match get(6)? {
                "0" => false,
                "1" => true,
                _ => return Err(bad("success")),
            },
            rel_error: float(7)?,
            iterations: int(8)? as usize,
            dp_init: float(9)?,
            runtime_ms: float(10)?,
        });
    }
    Ok(out)
}

/// What a command produced, for callers that want more than the CSV.
#[derive(Clone, Debug)]
pub enum RunOutput {
    Single(TrialRecord),
    Sweep(SweepResult),
}

/// Executes a parsed configuration, writing the CSV (and tensor) outputs.
pub fn run(config: &CliConfig) -> Result<RunOutput> {
    match config.command {
        Command::Sweep => {
            let SampleSpec::Alphas(alphas) = &config.sample else {
                return arg("sweep needs --alphas");
            };
            let spec = SweepSpec {
                d: config.dims.map_or(0, |d| d[0]),
                ranks: config.ranks.clone(),
                alphas: alphas.clone(),
                trials: config.trials,
                seed: config.seed,
                sigma: config.sigma,
                threads: config.threads,
            };
            let result = experiments::sweep(&spec, &config.trial_config())?;
            emit_csv_path(&result.records, config.output.as_deref())?;
            Ok(RunOutput::Sweep(result))
        }
        Command::Complete | Command::InitOnly => {
            let (record, estimate) = match &config.input {
                None => synthetic(config)?,
                Some(path) => from_file(config, path)?,
            };
            emit_csv_path([&record], config.output.as_deref())?;
            if let Some(p) = &config.tensor_out {
                estimate.write_text(BufWriter::new(create(p)?))?;
            }
            Ok(RunOutput::Single(record))
        }
    }
}

fn synthetic(config: &CliConfig) -> Result<(TrialRecord, Tensor3)> {
    let dims = config.dims.unwrap_or([0; 3]);
    let r = config.ranks[0];
    if dims[1] != dims[0] || dims[2] != dims[0] || config.ranks.iter().any(|&k| k != r) {
        return arg("synthetic trials need cubic --dims and equal --ranks");
    }
    let d = dims[0];
    let spec = match &config.sample {
        SampleSpec::Count(n) => TrialSpec::with_size(d, r, *n, config.seed),
        SampleSpec::Alphas(a) => TrialSpec::with_alpha(d, r, a[0], config.seed)?,
        SampleSpec::FromInput => return arg("synthetic trials need --n or --alpha"),
    };
    let mut spec = spec.sigma(config.sigma);
    if config.command == Command::InitOnly {
        spec = spec.init_only();
    }
    let outcome = spec.run(&config.trial_config())?;
    Ok((outcome.record, outcome.estimate))
}

/// Leading `r_k` left singular vectors of each unfolding.
fn singular_frames(t: &Tensor3, ranks: [usize; 3]) -> Result<TripleFrame> {
    let frame = |mode: Mode| -> Result<Frame> {
        let m = t.unfold(mode).matrix;
        let (_, vecs) = linalg::symmetric_eigen_desc(&(&m * m.transpose()))?;
        Frame::orthonormalize(&vecs.columns(0, ranks[mode.index()]).into_owned())
    };
    Ok(TripleFrame::new(
        frame(Mode::One)?,
        frame(Mode::Two)?,
        frame(Mode::Three)?,
    ))
}

enum InputFile {
    Tensor(Tensor3),
    Observations(ObservationSet),
}

fn read_input(path: &str) -> Result<InputFile> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| with_path(e, path))?;
    let header_tokens = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .map_or(0, |l| l.split_whitespace().count());
    match header_tokens {
        3 => Ok(InputFile::Tensor(Tensor3::read_text(BufReader::new(
            text.as_bytes(),
        ))?)),
        4 => Ok(InputFile::Observations(ObservationSet::read_text(
            BufReader::new(text.as_bytes()),
        )?)),
        _ => Err(Error::Parse {
            line: 1,
            message: "header must be `d1 d2 d3` (tensor) or `d1 d2 d3 n` (observations)".into(),
        }),
    }
}

fn from_file(config: &CliConfig, path: &str) -> Result<(TrialRecord, Tensor3)> {
    let ranks = [config.ranks[0], config.ranks[1], config.ranks[2]];
    let rmax = *config.ranks.iter().max().unwrap_or(&1);
    let input = read_input(path)?;
    let dims = match &input {
        InputFile::Tensor(t) => t.dims(),
        InputFile::Observations(o) => o.dims(),
    };
    if let Some(expected) = config.dims {
        if expected != dims {
            return arg(format!(
                "--dims {expected:?} disagree with {path} ({dims:?})"
            ));
        }
    }
    let scale = (rmax as f64).sqrt() * (dims.iter().product::<usize>() as f64).sqrt();
    let (obs, truth) = match input {
        InputFile::Observations(o) => {
            if config.sample != SampleSpec::FromInput {
                return arg("--n/--alpha do not apply to an observation file");
            }
            (o, None)
        }
        InputFile::Tensor(t) => {
            let n = match &config.sample {
                SampleSpec::Count(n) => *n,
                SampleSpec::Alphas(a) => {
                    let alpha = a[0];
                    if !(alpha > 0.0) {
                        return arg(format!("alpha must be positive, got {alpha}"));
                    }
                    (alpha * scale + 0.5).floor() as usize
                }
                SampleSpec::FromInput => return arg("sampling a tensor file needs --n or --alpha"),
            };
            let o = ObservationSet::sample_uniform(&t, n, mix(&[config.seed, INPUT_SAMPLE_LABEL]))?;
            let frames = singular_frames(&t, ranks)?;
            (o, Some((t, frames)))
        }
    };

    let raw = spectral::spectral_frames(&obs, ranks)?;
    let mut solver = config.solver();
    solver.mu0 = match (config.mu0, &truth) {
        (Some(m), _) => m,
        (None, Some((_, frames))) => frames.max_coherence(),
        (None, None) => raw.max_coherence(),
    };
    solver.validate()?;
    let init = raw.trim(solver.mu0)?;
    let (estimate, iterations) = match config.command {
        Command::InitOnly => (least_squares_estimate(&init, &obs)?, 0),
        _ => {
            let report = gog_run(&obs, ranks, &solver, &init)?;
            (report.reconstruction()?, report.iterations())
        }
    };
    let (rel_error, dp_init) = match &truth {
        Some((t, frames)) => (relative_error(&estimate, t)?, init.distance(frames)?),
        None => (f64::NAN, f64::NAN),
    };
    let record = TrialRecord {
        d: dims[0],
        r: rmax,
        alpha: obs.len() as f64 / scale,
        n: obs.len(),
        trial: 0,
        seed: config.seed,
        success: rel_error <= SUCCESS_TOL,
        rel_error,
        iterations,
        dp_init,
        runtime_ms: 0.0,
    };
    Ok((record, estimate))
}

/// Exit code for a runtime error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) => 1,
        Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => 2,
        Error::Numeric(_) => 3,
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(u) => {
            if u.code == 0 {
                print!("{}", u.message);
            } else {
                eprint!("{}", u.message);
                if !u.message.ends_with('\n') {
                    eprintln!();
                }
            }
            return u.code;
        }
    };
    match run(&config) {
        Ok(RunOutput::Sweep(result)) => {
            for c in &result.cells {
                eprintln!(
                    "r={} alpha={} success_rate={:.3} mean_rel_error={:.3e} mean_iterations={:.1}",
                    c.r, c.alpha, c.success_rate, c.mean_rel_error, c.mean_iterations
                );
            }
            0
        }
        Ok(RunOutput::Single(_)) => 0,
        Err(e) => {
            eprintln!("tcomp: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_ranges() {
        assert_eq!(
            alpha_list("1:10:1").unwrap(),
            (1..=10).map(f64::from).collect::<Vec<_>>()
        );
        assert_eq!(alpha_list("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(alpha_list("1:2.2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(alpha_list("2,4,8").unwrap(), vec![2.0, 4.0, 8.0]);
        assert_eq!(alpha_list("3").unwrap(), vec![3.0]);
        assert!(alpha_list("1:2").is_err());
        assert!(alpha_list("2:1:1").is_err());
        assert!(alpha_list("0,1").is_err());
        assert!(alpha_list("a").is_err());
    }

    #[test]
    fn sample_size_matches_experiments() {
        assert_eq!(experiments::sample_size(20, 1, 10.0), 894);
    }
}
