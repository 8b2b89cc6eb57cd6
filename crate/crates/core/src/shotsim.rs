//! Finite-statistics random-setting experiments.
//!
//! An experiment draws `M` sphere-uniform setting tuples; for each it takes
//! the exact correlation `E` from the correlation tensor and simulates `K`
//! dichotomic product outcomes with `P(+1) = (1 + E) / 2`. The estimator
//! `R_{M,K}` is the mean of the squared per-setting estimates.
//!
//! Setting `i` uses random stream `(seed, i)`: first the N directions, then
//! the shots. Results do not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::correlations::{correlation_tensor, CorrelationTensor, SettingTuple};
use crate::error::{Error, Result};
use crate::format::StateSpec;
use crate::rng;
use crate::states::{make_ghz, State};
use crate::witness::{witness_decide, BoundMode, ConfidenceLevel};
use crate::{SCHEMA_VERSION, TOLERANCE};

/// Shots per setting: a finite count or the exact-correlation limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Finite(u64),
    Infinite,
}

impl Shots {
    pub fn finite(self) -> Option<u64> {
        match self {
            Shots::Finite(k) => Some(k),
            Shots::Infinite => None,
        }
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Finite(k) => write!(f, "{k}"),
            Shots::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "Inf" | "INF" => Ok(Shots::Infinite),
            other => match other.parse::<u64>() {
                Ok(k) if k >= 1 => Ok(Shots::Finite(k)),
                _ => Err(Error::Format(format!("shots must be a positive integer or `inf`, got `{other}`"))),
            },
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Finite(k) => serializer.serialize_u64(*k),
            Shots::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Count(k) if k >= 1 => Ok(Shots::Finite(k)),
            Raw::Count(k) => Err(serde::de::Error::custom(format!("shots must be >= 1, got {k}"))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parameters of one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateSpec,
    /// Number of random setting tuples, `M`.
    #[serde(alias = "M")]
    pub settings: u64,
    /// Shots per setting tuple, `K`.
    #[serde(alias = "K")]
    pub shots: Shots,
    pub seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.settings < 1 {
            return Err(Error::Domain("number of settings M must be >= 1".into()));
        }
        if let Shots::Finite(k) = self.shots {
            if k < 1 {
                return Err(Error::Domain("shots K must be >= 1".into()));
            }
            self.settings
                .checked_mul(k)
                .ok_or_else(|| Error::Unsupported(format!("M * K = {} * {k} overflows", self.settings)))?;
        }
        Ok(())
    }
}

/// Data recorded for one setting tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub setting_index: u64,
    pub settings: SettingTuple,
    pub exact_e: f64,
    pub estimated_e_k: f64,
    /// Sum of the `K` outcomes (each +1 or -1); absent for infinite shots.
    pub shot_sum: Option<i64>,
}

/// Records of one experiment plus the estimator `R_{M,K}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub num_parties: usize,
    pub records: Vec<RunRecord>,
    pub r_mk: f64,
    /// Expected upward shift of `R_{M,K}` from shot noise, the mean of
    /// `(1 - E^2) / K` over the recorded settings. Not subtracted.
    pub finite_k_bias: Option<f64>,
}

/// Outcome of `K` simulated shots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotOutcome {
    pub shot_sum: i64,
    pub estimate: f64,
}

/// Mean of `K` independent `±1` outcomes with `P(+1) = (1 + E) / 2`.
pub fn simulate_shots<R: Rng + ?Sized>(e: f64, k: u64, rng: &mut R) -> Result<ShotOutcome> {
    if !e.is_finite() || e.abs() > 1.0 + TOLERANCE {
        return Err(Error::Domain(format!("correlation {e} outside [-1, 1]")));
    }
    if k < 1 {
        return Err(Error::Domain("shots K must be >= 1".into()));
    }
    let p = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
    let plus =
        Binomial::new(k, p).map_err(|err| Error::NumericDomain(format!("binomial({k}, {p}): {err}")))?.sample(rng);
    let shot_sum = 2 * plus as i64 - k as i64;
    Ok(ShotOutcome { shot_sum, estimate: shot_sum as f64 / k as f64 })
}

struct SettingDraw {
    tuple: SettingTuple,
    exact_e: f64,
    outcome: Option<ShotOutcome>,
}

fn draw_setting(
    tensor: &CorrelationTensor,
    shots: Shots,
    seed: u64,
    index: u64,
    scratch: &mut Vec<f64>,
) -> Result<SettingDraw> {
    let (tuple, mut stream) = SettingTuple::for_index(tensor.num_parties(), seed, index);
    let exact_e = tensor.contract(&tuple.components(), scratch);
    let outcome = match shots {
        Shots::Infinite => None,
        Shots::Finite(k) => Some(simulate_shots(exact_e, k, &mut stream)?),
    };
    Ok(SettingDraw { tuple, exact_e, outcome })
}

impl SettingDraw {
    fn estimate(&self) -> f64 {
        self.outcome.map_or(self.exact_e, |o| o.estimate)
    }
}

/// Simulates the records of an experiment on a precomputed tensor.
pub fn simulate_records(tensor: &CorrelationTensor, m: u64, shots: Shots, seed: u64) -> Result<Vec<RunRecord>> {
    (0..m)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let d = draw_setting(tensor, shots, seed, i, scratch)?;
            Ok(RunRecord {
                setting_index: i,
                exact_e: d.exact_e,
                estimated_e_k: d.estimate(),
                shot_sum: d.outcome.map(|o| o.shot_sum),
                settings: d.tuple,
            })
        })
        .collect()
}

/// `R_{M,K}` without keeping the per-setting records.
pub fn estimate_random_correlations(tensor: &CorrelationTensor, m: u64, shots: Shots, seed: u64) -> Result<f64> {
    let squares: Vec<f64> = (0..m)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let e = draw_setting(tensor, shots, seed, i, scratch)?.estimate();
            Ok(e * e)
        })
        .collect::<Result<_>>()?;
    Ok(squares.iter().sum::<f64>() / m as f64)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let state = config.state.build()?;
    run_experiment_on(&state, config)
}

/// Like [`run_experiment`] with an already constructed state; `config.state`
/// is echoed into the result unchanged.
pub fn run_experiment_on(state: &State, config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let tensor = correlation_tensor(state)?;
    let records = simulate_records(&tensor, config.settings, config.shots, config.seed)?;
    let m = config.settings as f64;
    let r_mk = records.iter().map(|r| r.estimated_e_k * r.estimated_e_k).sum::<f64>() / m;
    let finite_k_bias = config
        .shots
        .finite()
        .map(|k| records.iter().map(|r| (1.0 - r.exact_e * r.exact_e) / k as f64).sum::<f64>() / m);
    Ok(ExperimentResult {
        schema: SCHEMA_VERSION,
        config: config.clone(),
        num_parties: tensor.num_parties(),
        records,
        r_mk,
        finite_k_bias,
    })
}

/// Spread of `R_{M,K}` over repeated experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub repetitions: u64,
    pub mean_r: f64,
    pub std_r: f64,
}

/// Repeats the experiment with seeds derived from `(config.seed, rep)` and
/// reports the sample mean and standard deviation of `R_{M,K}`.
pub fn empirical_deviation(config: &ExperimentConfig, repetitions: u64) -> Result<DeviationSummary> {
    config.validate()?;
    let state = config.state.build()?;
    empirical_deviation_on(&state, config, repetitions)
}

pub fn empirical_deviation_on(state: &State, config: &ExperimentConfig, repetitions: u64) -> Result<DeviationSummary> {
    config.validate()?;
    if repetitions < 2 {
        return Err(Error::Domain("empirical deviation needs at least 2 repetitions".into()));
    }
    let tensor = correlation_tensor(state)?;
    let values = (0..repetitions)
        .map(|rep| {
            estimate_random_correlations(&tensor, config.settings, config.shots, rng::derive_seed(config.seed, rep))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean_r, std_r) = crate::stats::mean_std(&values);
    Ok(DeviationSummary { repetitions, mean_r, std_r: std_r.unwrap_or(0.0) })
}

/// Fraction of repetitions in which a single random setting tuple with `K`
/// shots passes the witness with `M = 1` (pure-product deviations).
pub fn single_setting_success_rate(
    state: &State,
    shots: Shots,
    confidence: ConfidenceLevel,
    repetitions: u64,
    seed: u64,
) -> Result<f64> {
    if repetitions < 1 {
        return Err(Error::Domain("need at least one repetition".into()));
    }
    let tensor = correlation_tensor(state)?;
    let n = tensor.num_parties();
    let threshold = witness_decide(0.0, n, 1, shots, confidence, BoundMode::Pure)?.threshold;
    let hits: Vec<bool> = (0..repetitions)
        .into_par_iter()
        .map_init(Vec::new, |scratch, rep| {
            let e = draw_setting(&tensor, shots, seed, rep, scratch)?.estimate();
            Ok(e * e > threshold)
        })
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / repetitions as f64)
}

/// Number of photons in the eight-party scenario.
pub const EIGHT_PHOTON_PARTIES: usize = 8;

/// Single-setting confirmation rate for an ideal eight-qubit GHZ state.
pub fn eight_photon_scenario(shots: Shots, confidence: ConfidenceLevel, repetitions: u64, seed: u64) -> Result<f64> {
    let ghz: State = make_ghz(EIGHT_PHOTON_PARTIES)?.into();
    single_setting_success_rate(&ghz, shots, confidence, repetitions, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::NamedState;

    fn named(name: &str, n: usize) -> StateSpec {
        StateSpec::Named(NamedState { named: name.into(), n: Some(n), ..Default::default() })
    }

    #[test]
    fn perfect_correlation_is_exact() {
        let mut r = rng::stream(1, 0);
        for k in [1, 7, 1000] {
            let o = simulate_shots(1.0, k, &mut r).unwrap();
            assert_eq!(o.estimate, 1.0);
            assert_eq!(o.shot_sum, k as i64);
            assert_eq!(simulate_shots(-1.0, k, &mut r).unwrap().estimate, -1.0);
        }
    }

    #[test]
    fn shot_errors() {
        let mut r = rng::stream(1, 0);
        assert!(simulate_shots(1.1, 10, &mut r).is_err());
        assert!(simulate_shots(0.0, 0, &mut r).is_err());
        assert!(simulate_shots(f64::NAN, 10, &mut r).is_err());
    }

    #[test]
    fn binomial_moments() {
        let k = 10_000;
        let reps = 1_000;
        let mut r = rng::stream(9, 0);
        let zeros: Vec<f64> = (0..reps).map(|_| simulate_shots(0.0, k, &mut r).unwrap().estimate).collect();
        let (_, s) = crate::stats::mean_std(&zeros);
        let var = s.unwrap().powi(2);
        assert!((var * k as f64 - 1.0).abs() < 0.1, "var*K = {}", var * k as f64);
        let halves: Vec<f64> = (0..reps).map(|_| simulate_shots(0.5, k, &mut r).unwrap().estimate).collect();
        let (m, _) = crate::stats::mean_std(&halves);
        assert!((m - 0.5).abs() < 4.0 * (0.75 / (k as f64 * reps as f64)).sqrt());
    }

    #[test]
    fn shots_parse_and_serialize() {
        assert_eq!("inf".parse::<Shots>().unwrap(), Shots::Infinite);
        assert_eq!("12".parse::<Shots>().unwrap(), Shots::Finite(12));
        assert!("0".parse::<Shots>().is_err());
        assert!("-3".parse::<Shots>().is_err());
        assert_eq!(serde_json::to_string(&Shots::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<Shots>("40").unwrap(), Shots::Finite(40));
    }

    #[test]
    fn experiment_is_deterministic() {
        let config = ExperimentConfig { state: named("ghz", 3), settings: 50, shots: Shots::Finite(20), seed: 4 };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        let other = run_experiment(&ExperimentConfig { seed: 5, ..config }).unwrap();
        assert_ne!(a.r_mk, other.r_mk);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let config = ExperimentConfig { state: named("ghz", 4), settings: 300, shots: Shots::Finite(30), seed: 8 };
        let run_with = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&config).unwrap())
        };
        assert_eq!(run_with(1), run_with(3));
    }

    #[test]
    fn record_invariants() {
        let config = ExperimentConfig { state: named("ghz", 3), settings: 40, shots: Shots::Finite(25), seed: 2 };
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.records.len(), 40);
        for (i, rec) in result.records.iter().enumerate() {
            assert_eq!(rec.setting_index, i as u64);
            assert!(rec.estimated_e_k.abs() <= 1.0);
            assert_eq!(rec.estimated_e_k, rec.shot_sum.unwrap() as f64 / 25.0);
        }
        let mean: f64 = result.records.iter().map(|r| r.estimated_e_k.powi(2)).sum::<f64>() / 40.0;
        assert!((mean - result.r_mk).abs() < 1e-15);
    }

    #[test]
    fn infinite_shots_use_exact_correlations() {
        let config = ExperimentConfig { state: named("ghz", 3), settings: 30, shots: Shots::Infinite, seed: 2 };
        let result = run_experiment(&config).unwrap();
        assert!(result.finite_k_bias.is_none());
        for rec in &result.records {
            assert_eq!(rec.estimated_e_k, rec.exact_e);
            assert!(rec.shot_sum.is_none());
        }
    }

    #[test]
    fn result_round_trips_through_json() {
        let config = ExperimentConfig { state: named("ghz", 2), settings: 20, shots: Shots::Finite(9), seed: 1 };
        let result = run_experiment(&config).unwrap();
        let text = serde_json::to_string(&result).unwrap();
        let back: ExperimentResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, result);
    }

    #[test]
    fn config_guards() {
        let bad = ExperimentConfig { state: named("ghz", 2), settings: 0, shots: Shots::Infinite, seed: 1 };
        assert!(run_experiment(&bad).is_err());
        let huge = ExperimentConfig { state: named("ghz", 2), settings: u64::MAX, shots: Shots::Finite(3), seed: 1 };
        assert!(matches!(run_experiment(&huge), Err(Error::Unsupported(_))));
        let ok = ExperimentConfig { state: named("ghz", 2), settings: 10, shots: Shots::Infinite, seed: 1 };
        assert!(empirical_deviation(&ok, 1).is_err());
    }

    #[test]
    fn estimator_shortcut_matches_records() {
        let config = ExperimentConfig { state: named("ghz", 3), settings: 64, shots: Shots::Finite(15), seed: 12 };
        let result = run_experiment(&config).unwrap();
        let tensor = correlation_tensor(&config.state.build().unwrap()).unwrap();
        let r = estimate_random_correlations(&tensor, 64, Shots::Finite(15), 12).unwrap();
        assert!((r - result.r_mk).abs() < 1e-15);
    }
}
