//! Product-state statistics of squared correlations and the statistical
//! entanglement witness.
//!
//! For a pure product state and sphere-uniform settings, `E^2` follows the
//! density `chi_N(e) = (-ln e)^(N-1) / (2^N sqrt(e) (N-1)!)` on `(0, 1]`, with
//! mean `1/3^N` and second moment `1/5^N`. The witness declares entanglement
//! when the estimated random correlations exceed `1/3^N` by a confidence
//! multiple of the product-state standard deviation at finite `M` and `K`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::correlations::{correlation_tensor, squared_correlation_samples};
use crate::error::{Error, Result};
use crate::shotsim::Shots;
use crate::states::State;
use crate::SCHEMA_VERSION;

/// How a confidence probability maps to a normal multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `P(|Z| < z) = p`; 95.4% and 99.7% are read as the 2 and 3 sigma
    /// coverages and map to exactly 2 and 3.
    #[default]
    TwoSided,
    /// `P(Z < z) = p`.
    OneSided,
}

/// Confidence probability with its normal multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfidenceRepr", into = "ConfidenceRepr")]
pub struct ConfidenceLevel {
    p: f64,
    sidedness: Sidedness,
}

#[derive(Serialize, Deserialize)]
struct ConfidenceRepr {
    p: f64,
    #[serde(default)]
    sidedness: Sidedness,
    #[serde(default, skip_deserializing)]
    z: f64,
}

impl TryFrom<ConfidenceRepr> for ConfidenceLevel {
    type Error = Error;
    fn try_from(r: ConfidenceRepr) -> Result<Self> {
        Self::with_sidedness(r.p, r.sidedness)
    }
}

impl From<ConfidenceLevel> for ConfidenceRepr {
    fn from(c: ConfidenceLevel) -> Self {
        ConfidenceRepr { p: c.p, sidedness: c.sidedness, z: c.z() }
    }
}

impl ConfidenceLevel {
    /// Two-sided confidence level.
    pub fn new(p: f64) -> Result<Self> {
        Self::with_sidedness(p, Sidedness::TwoSided)
    }

    pub fn one_sided(p: f64) -> Result<Self> {
        Self::with_sidedness(p, Sidedness::OneSided)
    }

    pub fn with_sidedness(p: f64, sidedness: Sidedness) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidConfidence(p));
        }
        Ok(Self { p, sidedness })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    /// Normal multiplier; non-decreasing in `p`.
    pub fn z(&self) -> f64 {
        let normal = Normal::standard();
        match self.sidedness {
            Sidedness::OneSided => normal.inverse_cdf(self.p),
            Sidedness::TwoSided => {
                let z = normal.inverse_cdf((1.0 + self.p) / 2.0);
                // 95.4% and 99.7% are the rounded 2 and 3 sigma coverages.
                let mut snapped: f64 = z;
                if self.p >= 0.954 {
                    snapped = snapped.max(2.0);
                }
                if self.p >= 0.997 {
                    snapped = snapped.max(3.0);
                }
                snapped
            }
        }
    }
}

impl Default for ConfidenceLevel {
    fn default() -> Self {
        Self { p: 0.954, sidedness: Sidedness::TwoSided }
    }
}

/// Which standard deviation of single-setting `E^2` the witness assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    /// Pure product states: `sqrt(1/5^N - 1/9^N)`.
    #[default]
    Pure,
    /// Upper bound over all separable states: `1/5^(N/2)`.
    Separable,
}

impl std::str::FromStr for BoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(BoundMode::Pure),
            "separable" => Ok(BoundMode::Separable),
            other => Err(Error::Format(format!("unknown bound mode `{other}` (pure|separable)"))),
        }
    }
}

fn check_parties(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Domain("number of parties must be >= 1".into()));
    }
    Ok(())
}

/// Mean of `E^2` for product states, `1/3^N`.
pub fn product_mean(n: usize) -> f64 {
    3f64.powi(-(n as i32))
}

/// Density of `E^2` for a product state under uniform random settings.
pub fn chi_density(e2: f64, n: usize) -> Result<f64> {
    check_parties(n)?;
    if !(e2 > 0.0 && e2 <= 1.0) {
        return Err(Error::Domain(format!("chi density is defined on (0, 1], got {e2}")));
    }
    let log_term = (-e2.ln()).powi(n as i32 - 1);
    let factorial: f64 = (1..n).map(|k| k as f64).product();
    Ok(log_term / (2f64.powi(n as i32) * e2.sqrt() * factorial))
}

/// Regularized upper incomplete gamma `Gamma(N, x) / (N-1)!` for integer N,
/// via the finite sum `e^-x sum_{k<N} x^k / k!`.
pub fn upper_gamma_regularized_int(n: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..n {
        term *= x / k as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// `P(E^2 <= c)` for a product state: `Gamma(N, -ln(c) / 2) / (N-1)!`.
pub fn chi_cdf(c: f64, n: usize) -> Result<f64> {
    check_parties(n)?;
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Domain(format!("chi cdf argument {c} outside [0, 1]")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(upper_gamma_regularized_int(n, -0.5 * c.ln()))
}

/// Standard deviation of `E^2` for a pure product state.
pub fn delta_product(n: usize) -> f64 {
    (5f64.powi(-(n as i32)) - 9f64.powi(-(n as i32))).sqrt()
}

/// Standard deviation bound for separable states, `1/5^(N/2)`.
pub fn separable_delta_bound(n: usize) -> f64 {
    5f64.powf(-(n as f64) / 2.0)
}

/// Finite-settings deviation `Delta / sqrt(M)`.
pub fn delta_m(n: usize, m: u64) -> Result<f64> {
    if m < 1 {
        return Err(Error::Domain("number of settings M must be >= 1".into()));
    }
    Ok(delta_product(n) / (m as f64).sqrt())
}

/// Finite-shots deviation for product states.
pub fn delta_k(n: usize, m: u64, k: u64) -> Result<f64> {
    let dm = delta_m(n, m)?;
    delta_k_given(n, m, k, dm)
}

fn delta_k_given(n: usize, m: u64, k: u64, delta_m: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("finite-shot deviation needs K >= 2, got {k}")));
    }
    let (mf, kf) = (m as f64, k as f64);
    let bracket =
        1.0 - 2.0 * (1.0 - kf) * product_mean(n) + (1.0 - 2.0 * kf) * (9f64.powi(-(n as i32)) - delta_m * delta_m);
    let variance = 2.0 / (mf * kf * kf) * bracket;
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::NumericDomain(format!(
            "finite-shot variance {variance} is not positive for N = {n}, M = {m}, K = {k}"
        )));
    }
    Ok(variance.sqrt())
}

/// Combined deviation `sqrt(Delta_M^2 + Delta_K^2)`.
pub fn delta_mk(n: usize, m: u64, shots: Shots) -> Result<f64> {
    let dm = delta_m(n, m)?;
    let dk = match shots {
        Shots::Infinite => 0.0,
        Shots::Finite(k) => delta_k_given(n, m, k, dm)?,
    };
    Ok((dm * dm + dk * dk).sqrt())
}

/// Outcome of the statistical witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub schema: u32,
    pub num_parties: usize,
    pub settings: u64,
    pub shots: Shots,
    pub bound_mode: BoundMode,
    pub confidence: ConfidenceLevel,
    pub estimate: f64,
    pub product_mean: f64,
    pub threshold: f64,
    pub delta_m: f64,
    pub delta_k: f64,
    pub delta_mk: f64,
    pub entangled: bool,
}

/// Compares an estimate of the random correlations against
/// `1/3^N + z * Delta_{M,K}`.
///
/// In separable mode the single-setting deviation is the separable bound
/// `1/5^(N/2)` instead of the pure product value.
pub fn witness_decide(
    r_hat: f64,
    n: usize,
    m: u64,
    shots: Shots,
    confidence: ConfidenceLevel,
    bound_mode: BoundMode,
) -> Result<WitnessVerdict> {
    check_parties(n)?;
    if !(-crate::TOLERANCE..=1.0 + crate::TOLERANCE).contains(&r_hat) {
        return Err(Error::Domain(format!("estimate {r_hat} outside [0, 1]")));
    }
    if m < 1 {
        return Err(Error::Domain("number of settings M must be >= 1".into()));
    }
    let single = match bound_mode {
        BoundMode::Pure => delta_product(n),
        BoundMode::Separable => separable_delta_bound(n),
    };
    let dm = single / (m as f64).sqrt();
    let dk = match shots {
        Shots::Infinite => 0.0,
        Shots::Finite(k) => delta_k_given(n, m, k, dm)?,
    };
    let dmk = (dm * dm + dk * dk).sqrt();
    let threshold = product_mean(n) + confidence.z() * dmk;
    Ok(WitnessVerdict {
        schema: SCHEMA_VERSION,
        num_parties: n,
        settings: m,
        shots,
        bound_mode,
        confidence,
        estimate: r_hat,
        product_mean: product_mean(n),
        threshold,
        delta_m: dm,
        delta_k: dk,
        delta_mk: dmk,
        entangled: r_hat > threshold,
    })
}

/// Noise parameter above which the separable-bound witness fires for a GHZ
/// state mixed with white noise: `sqrt(3^N / (2^(N-2) 5^(N/2)))`.
pub fn ghz_noise_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("GHZ noise threshold needs N >= 2, got {n}")));
    }
    let nf = n as f64;
    Ok((3f64.powf(nf) / (2f64.powf(nf - 2.0) * 5f64.powf(nf / 2.0))).sqrt())
}

/// Single-setting decision level: `c` with `P(E^2 <= c) = p` for product
/// states, and its excess `delta = c - 1/3^N` over the product mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleSettingThreshold {
    pub c: f64,
    pub delta: f64,
}

/// Solves `chi_cdf(c, N) = p` by bisection on `-ln c` to 1e-12.
pub fn single_setting_threshold(n: usize, confidence: ConfidenceLevel) -> Result<SingleSettingThreshold> {
    check_parties(n)?;
    let p = confidence.p();
    // cdf(c) = Q(N, t/2) with t = -ln c; decreasing in t.
    let cdf_at = |t: f64| upper_gamma_regularized_int(n, 0.5 * t);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while cdf_at(hi) >= p {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NumericDomain(format!("no threshold found for p = {p}, N = {n}")));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if cdf_at(mid) >= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = (-0.5 * (lo + hi)).exp();
    Ok(SingleSettingThreshold { c, delta: c - product_mean(n) })
}

/// Fraction of sphere-uniform setting tuples whose squared correlation
/// exceeds the single-setting threshold at `confidence`.
pub fn detection_probability(state: &State, confidence: ConfidenceLevel, num_samples: u64, seed: u64) -> Result<f64> {
    if num_samples < 1 {
        return Err(Error::Domain("detection probability needs at least one sample".into()));
    }
    let n = state.num_parties();
    let level = single_setting_threshold(n, confidence)?.c;
    let tensor = correlation_tensor(state)?;
    let samples = squared_correlation_samples(&tensor, num_samples, seed);
    let hits = samples.iter().filter(|&&e2| e2 > level).count();
    Ok(hits as f64 / num_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint rule on a log-spaced grid; handles the 1/sqrt singularity.
    fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        // substitute e = exp(-s): integral of f(e) e ds over s in [-ln b, -ln a]
        let (s0, s1) = (-b.ln(), if a > 0.0 { -a.ln() } else { 80.0 });
        let steps = 200_000;
        let h = (s1 - s0) / steps as f64;
        (0..steps)
            .map(|i| {
                let s = s0 + (i as f64 + 0.5) * h;
                let e = (-s).exp();
                f(e) * e * h
            })
            .sum()
    }

    #[test]
    fn density_values() {
        assert!((chi_density(0.25, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((chi_density(1.0, 1).unwrap() - 0.5).abs() < 1e-15);
        for n in 2..6 {
            assert_eq!(chi_density(1.0, n).unwrap(), 0.0);
        }
        assert!(chi_density(0.0, 2).is_err());
        assert!(chi_density(1.5, 2).is_err());
    }

    #[test]
    fn cdf_closed_forms() {
        for n in 1..8 {
            assert_eq!(chi_cdf(1.0, n).unwrap(), 1.0);
            assert_eq!(chi_cdf(0.0, n).unwrap(), 0.0);
        }
        for c in [0.01, 0.2, 0.5, 0.9] {
            assert!((chi_cdf(c, 1).unwrap() - f64::sqrt(c)).abs() < 1e-15);
        }
        assert!(chi_cdf(-0.1, 2).is_err());
        assert!(chi_cdf(1.1, 2).is_err());
    }

    #[test]
    fn cdf_matches_quadrature() {
        let q = quad(|e| chi_density(e, 2).unwrap(), 0.0, 0.25);
        assert!((chi_cdf(0.25, 2).unwrap() - q).abs() < 1e-6);
    }

    #[test]
    fn incomplete_gamma_against_statrs() {
        for n in 1..12 {
            for x in [0.01, 0.5, 1.0, 3.7, 10.0, 25.0] {
                let ours = upper_gamma_regularized_int(n, x);
                let reference = statrs::function::gamma::gamma_ur(n as f64, x);
                assert!((ours - reference).abs() < 1e-12, "n={n} x={x}: {ours} vs {reference}");
            }
        }
    }

    #[test]
    fn deltas() {
        let d1 = (1.0f64 / 5.0 - 1.0 / 9.0).sqrt();
        assert!((delta_product(1) - d1).abs() < 1e-15);
        assert!((delta_product(1) - 0.29814).abs() < 1e-5);
        for n in 1..20 {
            assert!(delta_product(n + 1) < delta_product(n));
        }
        assert_eq!(delta_m(4, 1).unwrap(), delta_product(4));
        assert!((delta_m(2, 100).unwrap() - delta_product(2) / 10.0).abs() < 1e-16);
        assert!(delta_m(2, 0).is_err());
    }

    #[test]
    fn delta_k_hand_evaluation() {
        // N = 1, M = 1, K = 2: Delta_M^2 = 1/5 - 1/9 = 4/45.
        // bracket = 1 - 2(1-2)/3 + (1-4)(1/9 - 4/45) = 1 + 2/3 - 3/45 = 8/5
        // Delta_K^2 = 2 / (1 * 4) * 8/5 = 4/5
        let dk = delta_k(1, 1, 2).unwrap();
        assert!((dk * dk - 0.8).abs() < 1e-14);
        assert!(delta_k(1, 1, 1).is_err());
        assert!(delta_k(3, 100, 1_000_000).unwrap() < delta_k(3, 100, 1_000).unwrap());
        // leading term sqrt(4 / (M K 3^N))
        let dk = delta_k(3, 100, 1_000_000_000).unwrap();
        assert!((dk / (4.0f64 / (100.0 * 1e9 * 27.0)).sqrt() - 1.0).abs() < 0.05);
    }

    #[test]
    fn separable_bound_dominates() {
        assert!((separable_delta_bound(2) - 0.2).abs() < 1e-15);
        assert!((separable_delta_bound(1) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        for n in 1..=10 {
            assert!(separable_delta_bound(n) >= delta_product(n));
        }
    }

    #[test]
    fn confidence_multipliers() {
        assert_eq!(ConfidenceLevel::new(0.954).unwrap().z(), 2.0);
        assert_eq!(ConfidenceLevel::new(0.997).unwrap().z(), 3.0);
        assert!((ConfidenceLevel::new(0.80).unwrap().z() - 1.2815515655446004).abs() < 1e-9);
        assert!((ConfidenceLevel::one_sided(0.80).unwrap().z() - 0.8416212335729143).abs() < 1e-9);
        for bad in [0.0, 1.0, 1.5, -0.2, f64::NAN] {
            assert!(matches!(ConfidenceLevel::new(bad), Err(Error::InvalidConfidence(_))));
        }
        let mut last = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let z = ConfidenceLevel::new(i as f64 / 10_000.0).unwrap().z();
            assert!(z >= last);
            last = z;
        }
    }

    #[test]
    fn verdict_at_product_mean_is_negative() {
        for n in 1..6 {
            let v =
                witness_decide(product_mean(n), n, 100, Shots::Finite(50), ConfidenceLevel::default(), BoundMode::Pure)
                    .unwrap();
            assert!(!v.entangled);
            assert!((v.threshold - (product_mean(n) + 2.0 * v.delta_mk)).abs() < 1e-15);
        }
    }

    #[test]
    fn ghz3_exact_is_detected() {
        let v = witness_decide(4.0 / 27.0, 3, 10_000, Shots::Infinite, ConfidenceLevel::default(), BoundMode::Pure)
            .unwrap();
        assert!(v.entangled);
        assert_eq!(v.delta_k, 0.0);
    }

    #[test]
    fn ghz_noise_threshold_values() {
        assert!((ghz_noise_threshold(4).unwrap() - 0.9).abs() < 1e-12);
        for n in 4..30 {
            assert!(ghz_noise_threshold(n + 1).unwrap() < ghz_noise_threshold(n).unwrap());
        }
        assert!(ghz_noise_threshold(1).is_err());
        // exact R of GHZ_4 + noise at eps = 0.95 against the separable rule
        let r = 0.95f64.powi(2) * 9.0 / 81.0;
        let v = witness_decide(r, 4, 1, Shots::Infinite, ConfidenceLevel::default(), BoundMode::Separable).unwrap();
        assert!(v.entangled);
    }

    #[test]
    fn single_setting_levels() {
        let c954 = ConfidenceLevel::new(0.954).unwrap();
        let t = single_setting_threshold(1, c954).unwrap();
        assert!((t.c - 0.954f64 * 0.954).abs() < 1e-11);
        assert!((t.delta - (t.c - 1.0 / 3.0)).abs() < 1e-15);
        for n in 1..12 {
            let t = single_setting_threshold(n, c954).unwrap();
            assert!((chi_cdf(t.c, n).unwrap() - 0.954).abs() < 1e-11);
        }
        let near_one = single_setting_threshold(3, ConfidenceLevel::new(0.999_999).unwrap()).unwrap();
        // upper tail near 1 behaves like (1 - c)^3 / 48
        assert!((near_one.c - (1.0 - (48.0e-6f64).cbrt())).abs() < 2e-3);
    }

    #[test]
    fn verdict_serializes_with_schema() {
        let v =
            witness_decide(0.2, 2, 10, Shots::Finite(100), ConfidenceLevel::default(), BoundMode::Separable).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["schema"], 1);
        assert_eq!(json["shots"], 100);
        assert_eq!(json["confidence"]["z"], 2.0);
        let back: WitnessVerdict = serde_json::from_value(json).unwrap();
        assert_eq!(back, v);
    }
}
