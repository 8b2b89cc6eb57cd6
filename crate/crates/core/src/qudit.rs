//! SU(d) generalisation: correlation tensors over generalized Gell-Mann
//! generators and the pure-state bound on the length of correlations.
//!
//! With the standard normalization `Tr(g_a g_b) = 2 delta_ab` a single pure
//! qudit has `sum_a <g_a>^2 = 2(d-1)/d`. Rescaling every generator by
//! `d/2` turns this into `d(d-1)/2`, so pure product states attain
//! `C = [d(d-1)/2]^N` and every pure state satisfies `C >= [d(d-1)/2]^N`.
//! The `d/2` rescaling is a calibration chosen here and is reported in every
//! bound-check output.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::states::{haar_random_product, haar_random_pure_dims, State};
use crate::{SCHEMA_VERSION, TOLERANCE};

/// The `d^2 - 1` traceless Hermitian generators of SU(d), times `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis {
    dim: usize,
    scale: f64,
    generators: Vec<DMatrix<Complex64>>,
}

/// Scale for which pure product states attain `[d(d-1)/2]^N`.
pub fn calibrated_scale(d: usize) -> f64 {
    d as f64 / 2.0
}

/// Generalized Gell-Mann matrices: symmetric, then antisymmetric, then
/// diagonal families. For `d = 2`, `scale = 1` this is `(sigma_x, sigma_y,
/// sigma_z)`.
pub fn gellmann_basis(d: usize, scale: f64) -> Result<GeneratorBasis> {
    if d < 2 {
        return Err(Error::Domain(format!("SU(d) basis needs d >= 2, got {d}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("generator scale must be positive, got {scale}")));
    }
    let zero = || DMatrix::<Complex64>::zeros(d, d);
    let s = Complex64::new(scale, 0.0);
    let mut generators = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut g = zero();
            g[(j, k)] = s;
            g[(k, j)] = s;
            generators.push(g);
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut g = zero();
            g[(j, k)] = Complex64::new(0.0, -scale);
            g[(k, j)] = Complex64::new(0.0, scale);
            generators.push(g);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * scale;
        let mut g = zero();
        for j in 0..l {
            g[(j, j)] = Complex64::new(norm, 0.0);
        }
        g[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        generators.push(g);
    }
    Ok(GeneratorBasis { dim: d, scale, generators })
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn generators(&self) -> &[DMatrix<Complex64>] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `sum_a <g_a>^2` for any pure state of one subsystem:
    /// `scale^2 * 2(d-1)/d`.
    pub fn pure_single_length(&self) -> f64 {
        let d = self.dim as f64;
        self.scale * self.scale * 2.0 * (d - 1.0) / d
    }
}

/// Correlation tensor over per-party generator bases; party 1 is the most
/// significant axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuditCorrelationTensor {
    pub axis_sizes: Vec<usize>,
    pub entries: Vec<f64>,
}

impl QuditCorrelationTensor {
    pub fn length(&self) -> f64 {
        self.entries.iter().map(|t| t * t).sum()
    }

    /// `C / prod_n (d_n^2 - 1)`.
    pub fn random_correlations(&self) -> f64 {
        self.length() / self.axis_sizes.iter().map(|&s| s as f64).product::<f64>()
    }
}

/// `T_{a_1..a_N} = Tr(rho g^{(1)}_{a_1} ⊗ ... ⊗ g^{(N)}_{a_N})`, one basis per party.
pub fn qudit_correlation_tensor(state: &State, bases: &[GeneratorBasis]) -> Result<QuditCorrelationTensor> {
    let dims = state.local_dims();
    if bases.len() != dims.len() {
        return Err(Error::ArityMismatch { expected: dims.len(), found: bases.len() });
    }
    for (party, (b, &d)) in bases.iter().zip(dims).enumerate() {
        if b.dim != d {
            return Err(Error::DimensionMismatch(format!(
                "party {}: basis for d = {}, subsystem has d = {d}",
                party + 1,
                b.dim
            )));
        }
    }
    let rho = state.to_density();
    let total = rho.dim();
    let m = rho.matrix();
    // Layout: [generator prefix][ket rest][bra rest].
    let mut x: Vec<Complex64> = (0..total * total).map(|k| m[(k / total, k % total)]).collect();
    let mut prefix = 1usize;
    let mut rest = total;
    for (party, basis) in bases.iter().enumerate() {
        let d = dims[party];
        let next = rest / d;
        let g_count = basis.len();
        let mut y = vec![Complex64::new(0.0, 0.0); prefix * g_count * next * next];
        for a in 0..prefix {
            let x_block = &x[a * rest * rest..(a + 1) * rest * rest];
            for (g_idx, g) in basis.generators.iter().enumerate() {
                let y_block = &mut y[(a * g_count + g_idx) * next * next..(a * g_count + g_idx + 1) * next * next];
                for i in 0..d {
                    for j in 0..d {
                        // Tr(rho g) = sum_{ij} rho_ij g_ji
                        let coeff = g[(j, i)];
                        if coeff == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for ir in 0..next {
                            let row = (i * next + ir) * rest + j * next;
                            for jr in 0..next {
                                y_block[ir * next + jr] += x_block[row + jr] * coeff;
                            }
                        }
                    }
                }
            }
        }
        x = y;
        prefix *= g_count;
        rest = next;
    }
    let mut entries = Vec::with_capacity(x.len());
    for (idx, z) in x.into_iter().enumerate() {
        if z.im.abs() > TOLERANCE {
            return Err(Error::ImaginaryResidue { index: idx.to_string(), residue: z.im });
        }
        entries.push(z.re);
    }
    Ok(QuditCorrelationTensor { axis_sizes: bases.iter().map(GeneratorBasis::len).collect(), entries })
}

/// Length of correlations with the same basis on every party.
pub fn qudit_correlation_length(state: &State, basis: &GeneratorBasis) -> Result<f64> {
    let bases = vec![basis.clone(); state.num_parties()];
    Ok(qudit_correlation_tensor(state, &bases)?.length())
}

/// Largest total dimension `d^N` accepted by [`qudit_bound_check`].
pub const MAX_BOUND_CHECK_DIM: usize = 81;

/// Result of checking `C >= [d(d-1)/2]^N` on random pure states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuditBoundReport {
    pub schema: u32,
    pub num_parties: usize,
    pub dim: usize,
    pub normalization_scale: f64,
    pub normalization_note: String,
    pub bound: f64,
    pub states_checked: u64,
    pub min_length: f64,
    pub max_length: f64,
    pub product_min_length: f64,
    pub product_max_length: f64,
    /// Random states with `C < bound - 1e-6`.
    pub violations: u64,
    /// Product states with `|C - bound| > 1e-6`.
    pub product_mismatches: u64,
}

const BOUND_TOLERANCE: f64 = 1e-6;

/// Evaluates `C` under the calibrated normalization for `num_states`
/// Haar-random pure states and as many random product states.
pub fn qudit_bound_check(n: usize, d: usize, num_states: u64, seed: u64) -> Result<QuditBoundReport> {
    if n < 1 {
        return Err(Error::Domain("qudit bound check needs N >= 1".into()));
    }
    let total = d
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_BOUND_CHECK_DIM)
        .ok_or_else(|| Error::Unsupported(format!("d^N = {d}^{n} exceeds {MAX_BOUND_CHECK_DIM}")))?;
    debug_assert!(total >= 2 || d < 2);
    let scale = calibrated_scale(d);
    let basis = gellmann_basis(d, scale)?;
    let dims = vec![d; n];
    let bound = basis.pure_single_length().powi(n as i32);

    let mut lengths = Vec::with_capacity(num_states as usize);
    let mut product_lengths = Vec::with_capacity(num_states as usize);
    for i in 0..num_states {
        let psi: State = haar_random_pure_dims(&dims, rng::derive_seed(seed, 2 * i))?.into();
        lengths.push(qudit_correlation_length(&psi, &basis)?);
        let prod: State = haar_random_product(&dims, rng::derive_seed(seed, 2 * i + 1))?.into();
        product_lengths.push(qudit_correlation_length(&prod, &basis)?);
    }
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(QuditBoundReport {
        schema: SCHEMA_VERSION,
        num_parties: n,
        dim: d,
        normalization_scale: scale,
        normalization_note: format!(
            "generators are Gell-Mann matrices (Tr(g_a g_b) = 2 delta_ab) rescaled by d/2 = {scale}; \
             this calibration makes pure product states attain [d(d-1)/2]^N"
        ),
        bound,
        states_checked: num_states,
        min_length: min(&lengths),
        max_length: max(&lengths),
        product_min_length: min(&product_lengths),
        product_max_length: max(&product_lengths),
        violations: lengths.iter().filter(|&&c| c < bound - BOUND_TOLERANCE).count() as u64,
        product_mismatches: product_lengths.iter().filter(|&&c| (c - bound).abs() > BOUND_TOLERANCE).count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::correlation_tensor;
    use crate::states::{self, haar_random_pure};

    #[test]
    fn pauli_recovery() {
        let b = gellmann_basis(2, 1.0).unwrap();
        assert_eq!(b.len(), 3);
        for (axis, g) in b.generators().iter().enumerate() {
            assert_eq!(g, &states::pauli(axis));
        }
    }

    #[test]
    fn generator_counts_and_gram() {
        for d in 2..=5 {
            for scale in [1.0, calibrated_scale(d)] {
                let b = gellmann_basis(d, scale).unwrap();
                assert_eq!(b.len(), d * d - 1);
                for (a, ga) in b.generators().iter().enumerate() {
                    assert!((ga - ga.adjoint()).norm() < 1e-12);
                    assert!(ga.trace().norm() < 1e-12);
                    for (c, gc) in b.generators().iter().enumerate() {
                        let gram = (ga * gc).trace();
                        let want = if a == c { 2.0 * scale * scale } else { 0.0 };
                        assert!((gram.re - want).abs() < 1e-12 && gram.im.abs() < 1e-12);
                    }
                }
            }
        }
        assert!(gellmann_basis(1, 1.0).is_err());
        assert!(gellmann_basis(3, 0.0).is_err());
    }

    #[test]
    fn qutrit_product_pair() {
        let prod: State = haar_random_product(&[3, 3], 4).unwrap().into();
        let plain = qudit_correlation_length(&prod, &gellmann_basis(3, 1.0).unwrap()).unwrap();
        assert!((plain - 16.0 / 9.0).abs() < 1e-9);
        let calibrated = qudit_correlation_length(&prod, &gellmann_basis(3, 1.5).unwrap()).unwrap();
        assert!((calibrated - 9.0).abs() < 1e-9);
    }

    #[test]
    fn single_qudit_identity_by_brute_force() {
        for d in 2..=5 {
            let b = gellmann_basis(d, 1.0).unwrap();
            for seed in 0..5 {
                let psi = haar_random_pure_dims(&[d], seed).unwrap();
                let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
                let brute: f64 = b.generators().iter().map(|g| (v.adjoint() * g * &v)[(0, 0)].re.powi(2)).sum();
                assert!((brute - 2.0 * (d as f64 - 1.0) / d as f64).abs() < 1e-12);
                let ours = qudit_correlation_length(&psi.into(), &b).unwrap();
                assert!((ours - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_reduction_matches_pauli_tensor() {
        let b = gellmann_basis(2, 1.0).unwrap();
        for n in 1..=4 {
            let psi: State = haar_random_pure(n, 7 + n as u64).unwrap().into();
            let t = correlation_tensor(&psi).unwrap();
            let q = qudit_correlation_tensor(&psi, &vec![b.clone(); n]).unwrap();
            assert_eq!(q.entries.len(), t.entries().len());
            for (a, c) in q.entries.iter().zip(t.entries()) {
                assert!((a - c).abs() < 1e-9);
            }
            let rho: State = states::mix_with_white_noise(&psi, 0.3).unwrap().into();
            let lq = qudit_correlation_length(&rho, &b).unwrap();
            assert!((lq - correlation_tensor(&rho).unwrap().length()).abs() < 1e-9);
        }
    }

    #[test]
    fn mixed_dimensions() {
        let prod: State = haar_random_product(&[2, 3], 2).unwrap().into();
        let bases = [gellmann_basis(2, 1.0).unwrap(), gellmann_basis(3, 1.5).unwrap()];
        let c = qudit_correlation_tensor(&prod, &bases).unwrap().length();
        assert!((c - 1.0 * 3.0).abs() < 1e-9);
        let ent: State = haar_random_pure_dims(&[2, 3], 3).unwrap().into();
        assert!(qudit_correlation_tensor(&ent, &bases).unwrap().length() > 3.0 - 1e-6);
        assert!(qudit_correlation_tensor(&ent, &bases[..1]).is_err());
        let swapped = [bases[1].clone(), bases[0].clone()];
        assert!(matches!(qudit_correlation_tensor(&ent, &swapped), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bound_check_small_cases() {
        let r = qudit_bound_check(1, 3, 20, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert!((r.min_length - 3.0).abs() < 1e-9 && (r.max_length - 3.0).abs() < 1e-9);
        let r = qudit_bound_check(2, 2, 20, 1).unwrap();
        assert_eq!(r.bound, 1.0);
        assert_eq!(r.violations, 0);
        assert!(qudit_bound_check(3, 5, 1, 1).is_err());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["normalization_note"].as_str().unwrap().contains("d/2"));
    }
}
