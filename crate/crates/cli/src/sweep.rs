//! Parameter sweeps: one CSV row per (value, repetition).

use clap::{Args, ValueEnum};
use randcorr::correlations::correlation_tensor;
use randcorr::format::StateSpec;
use randcorr::rng::derive_seed;
use randcorr::shotsim::estimate_random_correlations;
use randcorr::witness::{detection_probability, single_setting_threshold, witness_decide};
use randcorr::{BoundMode, Shots};

use crate::{CliError, ConfidenceArgs, Output, StateArgs};

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub(crate) enum Param {
    M,
    K,
    Epsilon,
    N,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub(crate) enum Measure {
    Witness,
    Detectprob,
}

#[derive(Args, Debug)]
pub(crate) struct SweepArgs {
    /// Swept parameter.
    #[arg(long, value_enum, ignore_case = true)]
    param: Param,
    /// Comma-separated values; integer ranges `a..b` are inclusive.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    #[arg(long, value_enum, default_value_t = Measure::Witness)]
    measure: Measure,
    #[command(flatten)]
    state: StateArgs,
    #[arg(long = "M", default_value_t = 1000)]
    m: u64,
    #[arg(long = "K", default_value = "inf")]
    k: Shots,
    #[command(flatten)]
    confidence: ConfidenceArgs,
    #[arg(long, default_value = "pure")]
    bound: BoundMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Setting samples per cell for `--measure detectprob`.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Use the exact R instead of a sampled estimate.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    pub(crate) output: Output,
}

/// Expands `1,2,5..7` into `["1", "2", "5", "6", "7"]`.
fn expand_values(list: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token.split_once("..") {
            Some((a, b)) => {
                let parse = |s: &str| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|_| CliError::Usage(format!("bad range `{token}`: integer bounds required")))
                };
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(CliError::Usage(format!("empty range `{token}`")));
                }
                out.extend((a..=b).map(|v| v.to_string()));
            }
            None => out.push(token.to_string()),
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(param: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Usage(format!("invalid value `{value}` for {param}")))
}

struct Cell {
    spec: StateSpec,
    m: u64,
    k: Shots,
}

fn cell(args: &SweepArgs, base: &StateSpec, value: &str) -> Result<Cell, CliError> {
    let mut cell = Cell { spec: base.clone(), m: args.m, k: args.k };
    let named = |spec: &StateSpec| match spec {
        StateSpec::Named(n) => Ok(n.clone()),
        StateSpec::Explicit(_) => Err(CliError::Usage("sweeping N or epsilon needs a --named state".into())),
    };
    match args.param {
        Param::M => cell.m = parse("M", value)?,
        Param::K => cell.k = parse("K", value)?,
        Param::N => {
            let mut n = named(&cell.spec)?;
            n.n = Some(parse("N", value)?);
            cell.spec = StateSpec::Named(n);
        }
        Param::Epsilon => {
            let mut n = named(&cell.spec)?;
            n.epsilon = Some(parse("epsilon", value)?);
            cell.spec = StateSpec::Named(n);
        }
    }
    Ok(cell)
}

pub(crate) fn run(args: &SweepArgs) -> Result<String, CliError> {
    let values = expand_values(&args.values)?;
    if args.reps < 1 {
        return Err(CliError::Usage("--reps must be >= 1".into()));
    }
    let level = args.confidence.level()?;
    let base = args.state.spec(args.seed)?;
    let param = format!("{:?}", args.param).to_ascii_lowercase();
    let param = if param == "m" || param == "k" || param == "n" { param.to_ascii_uppercase() } else { param };

    let mut out = String::from(match args.measure {
        Measure::Witness => "param,value,rep,seed,r_hat,threshold,delta_mk,entangled\n",
        Measure::Detectprob => "param,value,rep,seed,level,detection_probability\n",
    });
    for (vi, value) in values.iter().enumerate() {
        let cell = cell(args, &base, value)?;
        let state = cell.spec.build()?;
        let n = state.num_parties();
        let tensor = correlation_tensor(&state)?;
        for rep in 0..args.reps {
            let seed = derive_seed(derive_seed(args.seed, vi as u64), rep);
            match args.measure {
                Measure::Witness => {
                    let r_hat = if args.exact {
                        tensor.random_correlations()
                    } else {
                        estimate_random_correlations(&tensor, cell.m, cell.k, seed)?
                    };
                    let v = witness_decide(r_hat.clamp(0.0, 1.0), n, cell.m, cell.k, level, args.bound)?;
                    out.push_str(&format!(
                        "{param},{value},{rep},{seed},{:?},{:?},{:?},{}\n",
                        r_hat, v.threshold, v.delta_mk, v.entangled
                    ));
                }
                Measure::Detectprob => {
                    let c = single_setting_threshold(n, level)?.c;
                    let p = detection_probability(&state, level, args.samples, seed)?;
                    out.push_str(&format!("{param},{value},{rep},{seed},{c:?},{p:?}\n"));
                }
            }
        }
    }
    Ok(out)
}
