//! `randcorr` command-line front end.
//!
//! Exit codes: 0 success or entangled verdict, 3 not detected, 2 usage or
//! validation error, 1 internal failure.

mod sweep;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use randcorr::correlations::{correlation_tensor, random_correlations_mc, two_copy_operator_spectrum, TwoCopySpectrum};
use randcorr::format::{self, parse_directions, parse_state_json, NamedState, StateSpec};
use randcorr::qudit::qudit_bound_check;
use randcorr::shotsim::{eight_photon_scenario, run_experiment_on, EIGHT_PHOTON_PARTIES};
use randcorr::witness::{detection_probability, product_mean, single_setting_threshold, witness_decide};
use randcorr::{BoundMode, ConfidenceLevel, ExperimentConfig, Shots, Sidedness, State, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "randcorr",
    version,
    about = "Correlations under random local measurements and entanglement witnesses"
)]
struct Cli {
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true, env = "RANDCORR_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub(crate) struct StateArgs {
    /// JSON state file.
    #[arg(long, value_name = "FILE")]
    state: Option<PathBuf>,
    /// Named state: ghz, ghz-noise, bell, product, haar.
    #[arg(long, value_name = "NAME")]
    named: Option<String>,
    /// Number of parties for named states.
    #[arg(long)]
    n: Option<usize>,
    /// Product-state directions, e.g. `z,z,-x`.
    #[arg(long, value_name = "LIST")]
    dirs: Option<String>,
    /// Visibility of the white-noise mixture.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed of a `haar` state (defaults to --seed).
    #[arg(long)]
    state_seed: Option<u64>,
}

#[derive(Args, Clone, Debug)]
pub(crate) struct ConfidenceArgs {
    /// Confidence level p in (0, 1).
    #[arg(long, default_value_t = 0.954)]
    confidence: f64,
    /// Use the one-sided multiplier z = Phi^-1(p).
    #[arg(long)]
    one_sided: bool,
}

impl ConfidenceArgs {
    pub(crate) fn level(&self) -> Result<ConfidenceLevel, CliError> {
        let sidedness = if self.one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
        Ok(ConfidenceLevel::with_sidedness(self.confidence, sidedness)?)
    }
}

#[derive(Args, Clone, Debug)]
pub(crate) struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Full correlation tensor of a state.
    Tensor {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
        #[command(flatten)]
        output: Output,
    },
    /// Length of correlations and random correlations, exact and sampled.
    Randcorr {
        #[command(flatten)]
        state: StateArgs,
        /// Also estimate R from M random settings.
        #[arg(long = "M")]
        m: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Simulated experiment followed by the entanglement witness.
    Witness {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long = "M", default_value_t = 1000)]
        m: u64,
        /// Shots per setting, or `inf`.
        #[arg(long = "K", default_value = "inf")]
        k: Shots,
        #[command(flatten)]
        confidence: ConfidenceArgs,
        #[arg(long, default_value = "pure")]
        bound: BoundMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the exact R of the state instead of a sampled estimate.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Per-setting records of a simulated experiment.
    Simulate {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long = "M", default_value_t = 1000)]
        m: u64,
        #[arg(long = "K", default_value = "inf")]
        k: Shots,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
        #[command(flatten)]
        output: Output,
    },
    /// Spectrum of the two-copy operator S.
    Spectrum {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Probability that one random setting tuple detects entanglement.
    Detectprob {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        confidence: ConfidenceArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Single-setting confirmation rate for an ideal eight-qubit GHZ state.
    Eightphoton {
        #[arg(long = "K", default_value = "1000")]
        k: Shots,
        #[command(flatten)]
        confidence: ConfidenceArgs,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Checks the qudit bound on random pure states.
    Quditcheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        states: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Grid over one parameter, one CSV row per value and repetition.
    Sweep(sweep::SweepArgs),
}

#[derive(Debug)]
pub(crate) enum CliError {
    Usage(String),
    Model(randcorr::Error),
    Io(String),
}

impl From<randcorr::Error> for CliError {
    fn from(e: randcorr::Error) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use randcorr::Error::{ImaginaryResidue, NumericDomain};
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(NumericDomain(_) | ImaginaryResidue { .. }) => 1,
            CliError::Model(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl StateArgs {
    pub(crate) fn spec(&self, seed: u64) -> Result<StateSpec, CliError> {
        match (&self.state, &self.named) {
            (Some(_), Some(_)) => Err(CliError::Usage("--state and --named are mutually exclusive".into())),
            (None, None) => Err(CliError::Usage("a state is required: --state FILE or --named NAME".into())),
            (Some(path), None) => {
                if self.n.is_some() || self.dirs.is_some() || self.epsilon.is_some() || self.state_seed.is_some() {
                    return Err(CliError::Usage(
                        "--n, --dirs, --epsilon and --state-seed apply to --named only".into(),
                    ));
                }
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read state file {}: {e}", path.display())))?;
                parse_state_json(&text).map_err(|e| match e {
                    randcorr::Error::Format(msg) => {
                        CliError::Model(randcorr::Error::Format(format!("{}: {msg}", path.display())))
                    }
                    other => other.into(),
                })
            }
            (None, Some(name)) => Ok(StateSpec::Named(NamedState {
                named: name.clone(),
                n: self.n,
                epsilon: self.epsilon,
                dirs: self.dirs.as_deref().map(parse_directions).transpose()?,
                seed: if name == "haar" { Some(self.state_seed.unwrap_or(seed)) } else { self.state_seed },
            })),
        }
    }

    fn build(&self, seed: u64) -> Result<(StateSpec, State), CliError> {
        let spec = self.spec(seed)?;
        let state = spec.build()?;
        Ok((spec, state))
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output is serializable");
    s.push('\n');
    s
}

fn emit(output: &Output, text: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    schema: u32,
    distinct_symmetric: Vec<f64>,
    distinct_all: Vec<f64>,
    #[serde(flatten)]
    spectrum: &'a TwoCopySpectrum,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Tensor { state, format, output } => {
            let (_, state) = state.build(0)?;
            let tensor = correlation_tensor(&state)?;
            let text = match format {
                OutFormat::Csv => format::tensor_to_csv(&tensor),
                OutFormat::Json => to_json(&format::tensor_to_json(&tensor)),
            };
            emit(&output, &text)?;
        }
        Command::Randcorr { state, m, seed, output } => {
            let (_, state) = state.build(seed)?;
            let tensor = correlation_tensor(&state)?;
            let mc = m.map(|m| random_correlations_mc(&state, m, seed)).transpose()?;
            let value = json!({
                "schema": SCHEMA_VERSION,
                "num_parties": tensor.num_parties(),
                "correlation_length": tensor.length(),
                "random_correlations": tensor.random_correlations(),
                "product_mean": product_mean(tensor.num_parties()),
                "monte_carlo": mc,
                "seed": m.map(|_| seed),
            });
            emit(&output, &to_json(&value))?;
        }
        Command::Witness { state, m, k, confidence, bound, seed, exact, output } => {
            let level = confidence.level()?;
            let (spec, state) = state.build(seed)?;
            let r_hat = if exact {
                correlation_tensor(&state)?.random_correlations()
            } else {
                let config = ExperimentConfig { state: spec, settings: m, shots: k, seed };
                run_experiment_on(&state, &config)?.r_mk
            };
            let verdict = witness_decide(r_hat.clamp(0.0, 1.0), state.num_parties(), m, k, level, bound)?;
            emit(&output, &to_json(&verdict))?;
            eprintln!("{}", if verdict.entangled { "entangled" } else { "not detected" });
            return Ok(if verdict.entangled { 0 } else { 3 });
        }
        Command::Simulate { state, m, k, seed, format, output } => {
            let (spec, state) = state.build(seed)?;
            let config = ExperimentConfig { state: spec, settings: m, shots: k, seed };
            let result = run_experiment_on(&state, &config)?;
            let text = match format {
                OutFormat::Csv => format::experiment_to_csv(&result),
                OutFormat::Json => to_json(&result),
            };
            emit(&output, &text)?;
        }
        Command::Spectrum { n, output } => {
            let spectrum = two_copy_operator_spectrum(n)?;
            let out = SpectrumOutput {
                schema: SCHEMA_VERSION,
                distinct_symmetric: TwoCopySpectrum::distinct(&spectrum.symmetric_eigenvalues, 1e-9),
                distinct_all: TwoCopySpectrum::distinct(&spectrum.all_eigenvalues, 1e-9),
                spectrum: &spectrum,
            };
            emit(&output, &to_json(&out))?;
        }
        Command::Detectprob { state, confidence, samples, seed, output } => {
            let level = confidence.level()?;
            let (_, state) = state.build(seed)?;
            let threshold = single_setting_threshold(state.num_parties(), level)?;
            let probability = detection_probability(&state, level, samples, seed)?;
            let value = json!({
                "schema": SCHEMA_VERSION,
                "num_parties": state.num_parties(),
                "confidence": level,
                "level": threshold.c,
                "delta": threshold.delta,
                "samples": samples,
                "seed": seed,
                "detection_probability": probability,
            });
            emit(&output, &to_json(&value))?;
        }
        Command::Eightphoton { k, confidence, reps, seed, output } => {
            let level = confidence.level()?;
            let rate = eight_photon_scenario(k, level, reps, seed)?;
            let value = json!({
                "schema": SCHEMA_VERSION,
                "num_parties": EIGHT_PHOTON_PARTIES,
                "shots": k,
                "confidence": level,
                "repetitions": reps,
                "seed": seed,
                "success_rate": rate,
            });
            emit(&output, &to_json(&value))?;
        }
        Command::Quditcheck { n, d, states, seed, output } => {
            let report = qudit_bound_check(n, d, states, seed)?;
            emit(&output, &to_json(&report))?;
            if report.violations > 0 || report.product_mismatches > 0 {
                eprintln!("bound violated");
                return Ok(3);
            }
        }
        Command::Sweep(args) => {
            let text = sweep::run(&args)?;
            emit(&args.output, &text)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
