//! Full correlation tensors and the quantities built from them.
//!
//! For an N-qubit state the tensor holds `T_{j_1..j_N} = Tr(rho sigma_{j_1}
//! ⊗ ... ⊗ sigma_{j_N})` for all `3^N` axis tuples. The correlation along a
//! setting tuple is the contraction `E(u) = sum_j T_j (u_1)_{j_1} ...
//! (u_N)_{j_N}`, the length of correlations `C` is the squared Frobenius norm
//! of `T`, and the random correlations are `R = C / 3^N`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::states::{self, PureState, State};
use crate::TOLERANCE;

/// Unit vector on the Bloch sphere (a measurement setting).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(components: [f64; 3]) -> Result<Self> {
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NonUnitVector { party: 1, norm });
        }
        Ok(Self(components))
    }

    pub const X: BlochVector = BlochVector([1.0, 0.0, 0.0]);
    pub const Y: BlochVector = BlochVector([0.0, 1.0, 0.0]);
    pub const Z: BlochVector = BlochVector([0.0, 0.0, 1.0]);

    /// Axis vector from its letter (`x`, `y` or `z`).
    pub fn axis(letter: char) -> Option<Self> {
        match letter.to_ascii_lowercase() {
            'x' => Some(Self::X),
            'y' => Some(Self::Y),
            'z' => Some(Self::Z),
            _ => None,
        }
    }

    /// Sphere-uniform random direction.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(rng::sphere_direction(rng))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = Error;
    fn try_from(value: [f64; 3]) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        v.0
    }
}

/// One Bloch vector per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SettingTuple(Vec<BlochVector>);

impl SettingTuple {
    pub fn new(vectors: Vec<BlochVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Domain("a setting tuple needs at least one party".into()));
        }
        Ok(Self(vectors))
    }

    /// Validates raw components, naming the offending party on failure.
    pub fn from_components(components: &[[f64; 3]]) -> Result<Self> {
        let vectors = components
            .iter()
            .enumerate()
            .map(|(party, &c)| {
                BlochVector::new(c).map_err(|e| match e {
                    Error::NonUnitVector { norm, .. } => Error::NonUnitVector { party: party + 1, norm },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vectors)
    }

    /// Independent sphere-uniform directions for `n` parties.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| BlochVector::random(rng)).collect())
    }

    /// The setting tuple used for work item `index` under `seed`; the stream
    /// continues with any per-setting draws (shots).
    pub fn for_index(n: usize, seed: u64, index: u64) -> (Self, rand_chacha::ChaCha8Rng) {
        let mut stream = rng::stream(seed, index);
        let tuple = Self::random(n, &mut stream);
        (tuple, stream)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vectors(&self) -> &[BlochVector] {
        &self.0
    }

    pub fn components(&self) -> Vec<[f64; 3]> {
        self.0.iter().map(|v| v.0).collect()
    }
}

const AXIS_LETTERS: [char; 3] = ['x', 'y', 'z'];

/// Full-correlation tensor of an N-qubit state, flattened with party 1 as
/// the most significant axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    num_parties: usize,
    entries: Vec<f64>,
}

impl CorrelationTensor {
    pub fn from_entries(num_parties: usize, entries: Vec<f64>) -> Result<Self> {
        let expected = pow3(num_parties)?;
        if entries.len() != expected {
            return Err(Error::LengthMismatch { expected, found: entries.len() });
        }
        Ok(Self { num_parties, entries })
    }

    pub fn num_parties(&self) -> usize {
        self.num_parties
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry for axis indices (0 = x, 1 = y, 2 = z), one per party.
    pub fn get(&self, axes: &[usize]) -> Option<f64> {
        if axes.len() != self.num_parties || axes.iter().any(|&a| a > 2) {
            return None;
        }
        let flat = axes.iter().fold(0, |acc, &a| acc * 3 + a);
        Some(self.entries[flat])
    }

    /// Entry by letter label such as `"xyy"`.
    pub fn get_label(&self, label: &str) -> Option<f64> {
        let axes: Option<Vec<usize>> =
            label.chars().map(|c| AXIS_LETTERS.iter().position(|&l| l == c.to_ascii_lowercase())).collect();
        self.get(&axes?)
    }

    /// Letter label of a flat index.
    pub fn label(&self, flat: usize) -> String {
        let mut digits = vec!['x'; self.num_parties];
        let mut rest = flat;
        for slot in digits.iter_mut().rev() {
            *slot = AXIS_LETTERS[rest % 3];
            rest /= 3;
        }
        digits.into_iter().collect()
    }

    /// `(label, value)` pairs in flat order.
    pub fn labeled_entries(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        self.entries.iter().enumerate().map(|(i, &v)| (self.label(i), v))
    }

    /// Correlation `E` along a setting tuple.
    pub fn value(&self, settings: &SettingTuple) -> Result<f64> {
        if settings.len() != self.num_parties {
            return Err(Error::ArityMismatch { expected: self.num_parties, found: settings.len() });
        }
        let dirs = settings.components();
        Ok(self.contract(&dirs, &mut Vec::new()))
    }

    /// Contraction against raw directions, reusing `scratch` across calls.
    pub(crate) fn contract(&self, dirs: &[[f64; 3]], scratch: &mut Vec<f64>) -> f64 {
        let n = self.num_parties;
        debug_assert_eq!(dirs.len(), n);
        // Contract the least significant party first; each pass reads
        // triples (3r, 3r+1, 3r+2) and writes slot r, so it can run in place.
        let u = dirs[n - 1];
        let len = self.entries.len() / 3;
        scratch.clear();
        scratch.extend(self.entries.chunks_exact(3).map(|t| t[0] * u[0] + t[1] * u[1] + t[2] * u[2]));
        let mut len_now = len;
        for party in (0..n - 1).rev() {
            let u = dirs[party];
            len_now /= 3;
            for r in 0..len_now {
                let b = 3 * r;
                scratch[r] = scratch[b] * u[0] + scratch[b + 1] * u[1] + scratch[b + 2] * u[2];
            }
        }
        scratch[0]
    }

    /// Length of correlations `C`: sum of squared entries.
    pub fn length(&self) -> f64 {
        self.entries.iter().map(|t| t * t).sum()
    }

    /// Random correlations `R = C / 3^N`.
    pub fn random_correlations(&self) -> f64 {
        self.length() / 3f64.powi(self.num_parties as i32)
    }
}

fn pow3(n: usize) -> Result<usize> {
    3usize.checked_pow(n as u32).ok_or_else(|| Error::Unsupported(format!("3^{n} tensor entries")))
}

fn require_qubits(local_dims: &[usize]) -> Result<()> {
    match local_dims.iter().position(|&d| d != 2) {
        Some(party) => Err(Error::NotQubits { party: party + 1, dim: local_dims[party] }),
        None => Ok(()),
    }
}

/// Pauli string in bit-mask form: `P|x> = i^{n_y} (-1)^{popcount(x & sign)} |x ^ flip>`.
struct PauliMask {
    flip: usize,
    sign: usize,
    n_y: u32,
}

impl PauliMask {
    fn from_flat(flat: usize, n: usize) -> Self {
        let (mut flip, mut sign, mut n_y) = (0, 0, 0);
        let mut rest = flat;
        for party in (0..n).rev() {
            let bit = 1usize << (n - 1 - party);
            match rest % 3 {
                0 => flip |= bit,
                1 => {
                    flip |= bit;
                    sign |= bit;
                    n_y += 1;
                }
                _ => sign |= bit,
            }
            rest /= 3;
        }
        Self { flip, sign, n_y }
    }

    fn phase(&self) -> Complex64 {
        match self.n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Correlation tensor of an N-qubit state.
pub fn correlation_tensor(state: &State) -> Result<CorrelationTensor> {
    require_qubits(state.local_dims())?;
    let n = state.num_parties();
    let count = pow3(n)?;
    let raw: Vec<Complex64> = (0..count)
        .into_par_iter()
        .map(|flat| {
            let mask = PauliMask::from_flat(flat, n);
            let sum = match state {
                State::Pure(p) => {
                    let psi = p.amplitudes();
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, &amp) in psi.iter().enumerate() {
                        let term = psi[x ^ mask.flip].conj() * amp;
                        if (x & mask.sign).count_ones().is_multiple_of(2) {
                            acc += term;
                        } else {
                            acc -= term;
                        }
                    }
                    acc
                }
                State::Mixed(m) => {
                    let rho = m.matrix();
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..rho.nrows() {
                        let term = rho[(x, x ^ mask.flip)];
                        if (x & mask.sign).count_ones().is_multiple_of(2) {
                            acc += term;
                        } else {
                            acc -= term;
                        }
                    }
                    acc
                }
            };
            mask.phase() * sum
        })
        .collect();
    let mut entries = Vec::with_capacity(count);
    for (flat, z) in raw.into_iter().enumerate() {
        if z.im.abs() > TOLERANCE {
            let label = CorrelationTensor { num_parties: n, entries: Vec::new() }.label(flat);
            return Err(Error::ImaginaryResidue { index: label, residue: z.im });
        }
        entries.push(z.re);
    }
    Ok(CorrelationTensor { num_parties: n, entries })
}

/// `E(u_1, ..., u_N)` from a precomputed tensor.
pub fn correlation_value(tensor: &CorrelationTensor, settings: &SettingTuple) -> Result<f64> {
    tensor.value(settings)
}

/// Length of correlations `C`.
pub fn correlation_length(tensor: &CorrelationTensor) -> f64 {
    tensor.length()
}

/// Exact random correlations `R = C / 3^N`.
pub fn random_correlations_exact(tensor: &CorrelationTensor) -> f64 {
    tensor.random_correlations()
}

/// Monte Carlo estimate of `R` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Sample standard deviation over `sqrt(M)`; absent for `M = 1`.
    pub stderr: Option<f64>,
    pub samples: u64,
}

/// Squared correlations `E^2` for setting indices `0..m` under `seed`, in
/// index order. Setting `i` is drawn from stream `(seed, i)`.
pub fn squared_correlation_samples(tensor: &CorrelationTensor, m: u64, seed: u64) -> Vec<f64> {
    let n = tensor.num_parties();
    (0..m)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let (tuple, _) = SettingTuple::for_index(n, seed, i);
            let e = tensor.contract(&tuple.components(), scratch);
            e * e
        })
        .collect()
}

/// Mean of `E^2` over `m` sphere-uniform setting tuples.
pub fn random_correlations_mc(state: &State, m: u64, seed: u64) -> Result<McEstimate> {
    if m < 1 {
        return Err(Error::Domain("Monte Carlo estimate needs M >= 1".into()));
    }
    let tensor = correlation_tensor(state)?;
    let samples = squared_correlation_samples(&tensor, m, seed);
    let (mean, std) = crate::stats::mean_std(&samples);
    Ok(McEstimate { estimate: mean, stderr: std.map(|s| s / (m as f64).sqrt()), samples: m })
}

/// Largest N for which the 2N-qubit two-copy operator is built densely.
pub const MAX_TWO_COPY_PARTIES: usize = 3;

/// Spectrum of the two-copy operator `S` and of its restriction to the
/// subspace symmetric under exchanging the two N-qubit copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCopySpectrum {
    pub num_parties: usize,
    /// Ascending, with multiplicity.
    pub all_eigenvalues: Vec<f64>,
    /// Ascending, with multiplicity.
    pub symmetric_eigenvalues: Vec<f64>,
}

impl TwoCopySpectrum {
    /// Eigenvalues merged when closer than `tol`.
    pub fn distinct(values: &[f64], tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &v in values {
            if out.last().is_none_or(|&last| (v - last).abs() > tol) {
                out.push(v);
            }
        }
        out
    }
}

fn pauli_string(flat: usize, n: usize) -> DMatrix<Complex64> {
    let mut axes = vec![0; n];
    let mut rest = flat;
    for slot in axes.iter_mut().rev() {
        *slot = rest % 3;
        rest /= 3;
    }
    axes.iter().fold(DMatrix::identity(1, 1), |acc: DMatrix<Complex64>, &a| acc.kronecker(&states::pauli(a)))
}

/// `S = sum_j sigma_j ⊗ sigma_j` over all axis tuples, acting on two N-qubit
/// registers (unprimed block most significant). All entries are real.
pub fn two_copy_operator(n: usize) -> Result<DMatrix<f64>> {
    if !(1..=MAX_TWO_COPY_PARTIES).contains(&n) {
        return Err(Error::Unsupported(format!(
            "two-copy operator for N = {n}; supported range is 1..={MAX_TWO_COPY_PARTIES}"
        )));
    }
    let dim = 1usize << (2 * n);
    let mut s = DMatrix::<f64>::zeros(dim, dim);
    for flat in 0..3usize.pow(n as u32) {
        let p = pauli_string(flat, n);
        let pp = p.kronecker(&p);
        for (dst, src) in s.iter_mut().zip(pp.iter()) {
            debug_assert!(src.im.abs() < 1e-12);
            *dst += src.re;
        }
    }
    Ok(s)
}

/// Orthonormal basis (columns) of the range of `(1 + SWAP) / 2`, where SWAP
/// exchanges the two N-qubit registers.
fn symmetric_subspace_basis(n: usize) -> DMatrix<f64> {
    let half = 1usize << n;
    let dim = half * half;
    let cols = half * (half + 1) / 2;
    let mut basis = DMatrix::<f64>::zeros(dim, cols);
    let mut col = 0;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..half {
        for b in a..half {
            if a == b {
                basis[(a * half + a, col)] = 1.0;
            } else {
                basis[(a * half + b, col)] = h;
                basis[(b * half + a, col)] = h;
            }
            col += 1;
        }
    }
    basis
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn two_copy_operator_spectrum(n: usize) -> Result<TwoCopySpectrum> {
    let s = two_copy_operator(n)?;
    let basis = symmetric_subspace_basis(n);
    let restricted = basis.transpose() * &s * &basis;
    Ok(TwoCopySpectrum {
        num_parties: n,
        all_eigenvalues: sorted_eigenvalues(s),
        symmetric_eigenvalues: sorted_eigenvalues(restricted),
    })
}

/// `<psi|<psi| S |psi>|psi>`, which equals `C(psi)`.
pub fn two_copy_expectation(psi: &PureState) -> Result<f64> {
    require_qubits(psi.local_dims())?;
    let s = two_copy_operator(psi.num_parties())?;
    let two = psi.kron(psi);
    let v = two.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..v.len() {
            row += v[j] * s[(i, j)];
        }
        acc += v[i].conj() * row;
    }
    Ok(acc.re)
}

/// Largest N accepted by [`reference_frame_correlation`].
pub const MAX_REFERENCE_PARTIES: usize = 5;

/// Singlet projector `|psi-><psi-|` in the basis `00, 01, 10, 11`.
fn singlet_projector() -> [[f64; 4]; 4] {
    [[0.0, 0.0, 0.0, 0.0], [0.0, 0.5, -0.5, 0.0], [0.0, -0.5, 0.5, 0.0], [0.0, 0.0, 0.0, 0.0]]
}

fn triplet_projector() -> [[f64; 4]; 4] {
    let s = singlet_projector();
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = if i == j { 1.0 } else { 0.0 } - s[i][j];
        }
    }
    t
}

/// Applies a real two-qubit operator to qubits `a` and `b` of an
/// `total`-qubit vector (qubit 0 most significant).
fn apply_pair(v: &mut [Complex64], total: usize, a: usize, b: usize, op: &[[f64; 4]; 4]) {
    let ba = 1usize << (total - 1 - a);
    let bb = 1usize << (total - 1 - b);
    for base in 0..v.len() {
        if base & (ba | bb) != 0 {
            continue;
        }
        let idx = [base, base | bb, base | ba, base | ba | bb];
        let old = idx.map(|k| v[k]);
        for (r, &k) in idx.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..4 {
                if op[r][c] != 0.0 {
                    acc += old[c] * op[r][c];
                }
            }
            v[k] = acc;
        }
    }
}

/// Correlation of the `+1 / -3` total-spin outcomes when party `n` measures
/// its principal qubit together with a reference qubit of Bloch vector
/// `u_n`, evaluated by the Born rule on the 2N-qubit state.
///
/// Each party projects onto the singlet (outcome -3) or the triplet
/// subspace (outcome +1); the result equals [`correlation_value`].
pub fn reference_frame_correlation(state: &State, settings: &SettingTuple) -> Result<f64> {
    require_qubits(state.local_dims())?;
    let n = state.num_parties();
    if settings.len() != n {
        return Err(Error::ArityMismatch { expected: n, found: settings.len() });
    }
    if n > MAX_REFERENCE_PARTIES {
        return Err(Error::Unsupported(format!(
            "reference-qubit model for N = {n}; supported up to {MAX_REFERENCE_PARTIES}"
        )));
    }
    let reference = states::make_product_state(&settings.components())?;
    let total = 2 * n;
    let projectors = [triplet_projector(), singlet_projector()];

    // Born probability of an outcome pattern (bit n set = party n saw a singlet).
    let probability: Box<dyn Fn(usize) -> f64> = match state {
        State::Pure(p) => {
            let joint = p.kron(&reference);
            Box::new(move |pattern| {
                let mut v = joint.amplitudes().to_vec();
                for party in 0..n {
                    let op = &projectors[(pattern >> party) & 1];
                    apply_pair(&mut v, total, party, n + party, op);
                }
                v.iter().map(|z| z.norm_sqr()).sum()
            })
        }
        State::Mixed(m) => {
            let r = reference.to_density();
            let joint = m.matrix().kronecker(r.matrix());
            Box::new(move |pattern| {
                let mut trace = 0.0;
                for col in 0..joint.ncols() {
                    let mut v: Vec<Complex64> = joint.column(col).iter().cloned().collect();
                    for party in 0..n {
                        let op = &projectors[(pattern >> party) & 1];
                        apply_pair(&mut v, total, party, n + party, op);
                    }
                    trace += v[col].re;
                }
                trace
            })
        }
    };

    let mut expectation = 0.0;
    for pattern in 0..(1usize << n) {
        let singlets = pattern.count_ones() as i32;
        let value = (-3.0f64).powi(singlets);
        expectation += value * probability(pattern);
    }
    Ok(expectation)
}
