//! N-party quantum states: construction, validation and local transformations.
//!
//! Amplitudes are stored in row-major tensor order with party 1 as the most
//! significant index, so the basis label `|j_1 j_2 ... j_N>` maps to
//! `j_1 * (d_2 ... d_N) + ... + j_N`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;
use crate::TOLERANCE;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix `sigma_x`, `sigma_y` or `sigma_z` for axis 0, 1, 2.
pub fn pauli(axis: usize) -> DMatrix<Complex64> {
    match axis {
        0 => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        1 => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        2 => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("Pauli axis {axis} out of range"),
    }
}

fn check_dims(local_dims: &[usize]) -> Result<usize> {
    if local_dims.is_empty() {
        return Err(Error::Domain("a state needs at least one party".into()));
    }
    let mut total: usize = 1;
    for (party, &d) in local_dims.iter().enumerate() {
        if d < 2 {
            return Err(Error::DimensionMismatch(format!(
                "party {} has local dimension {d}, expected at least 2",
                party + 1
            )));
        }
        total =
            total.checked_mul(d).ok_or_else(|| Error::Unsupported("total Hilbert space dimension overflows".into()))?;
    }
    Ok(total)
}

/// Pure state of N subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    local_dims: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(local_dims: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = check_dims(&local_dims)?;
        if amplitudes.len() != expected {
            return Err(Error::LengthMismatch { expected, found: amplitudes.len() });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { local_dims, amplitudes })
    }

    /// N-qubit state; N is inferred from the amplitude count.
    pub fn qubits(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!("{len} amplitudes is not a power of two >= 2")));
        }
        let n = len.trailing_zeros() as usize;
        Self::new(vec![2; n], amplitudes)
    }

    /// Normalizes `amplitudes` before validation.
    pub fn normalized(local_dims: Vec<usize>, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(local_dims, amplitudes)
    }

    pub fn num_parties(&self) -> usize {
        self.local_dims.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_qubits(&self) -> bool {
        self.local_dims.iter().all(|&d| d == 2)
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &PureState) -> PureState {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        let mut local_dims = self.local_dims.clone();
        local_dims.extend_from_slice(&other.local_dims);
        PureState { local_dims, amplitudes }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        DensityMatrix { local_dims: self.local_dims.clone(), matrix: &v * v.adjoint() }
    }

    /// Reduced density matrix of a single party (0-based).
    pub fn single_party_reduced(&self, party: usize) -> Result<DMatrix<Complex64>> {
        if party >= self.num_parties() {
            return Err(Error::ArityMismatch { expected: self.num_parties(), found: party + 1 });
        }
        let d = self.local_dims[party];
        let right: usize = self.local_dims[party + 1..].iter().product();
        let left: usize = self.local_dims[..party].iter().product();
        let mut rho = DMatrix::from_element(d, d, ZERO);
        for l in 0..left {
            for r in 0..right {
                for a in 0..d {
                    let psi_a = self.amplitudes[(l * d + a) * right + r];
                    for b in 0..d {
                        let psi_b = self.amplitudes[(l * d + b) * right + r];
                        rho[(a, b)] += psi_a * psi_b.conj();
                    }
                }
            }
        }
        Ok(rho)
    }

    /// `Tr(rho_n^2)` of the single-party reduced state.
    pub fn single_party_purity(&self, party: usize) -> Result<f64> {
        let rho = self.single_party_reduced(party)?;
        Ok((&rho * &rho).trace().re)
    }
}

/// `(1 ⊗ .. ⊗ op ⊗ .. ⊗ 1) |v>` with `op` acting on `party`.
pub(crate) fn apply_local_operator(
    amplitudes: &[Complex64],
    local_dims: &[usize],
    party: usize,
    op: &DMatrix<Complex64>,
) -> Vec<Complex64> {
    let d = local_dims[party];
    let right: usize = local_dims[party + 1..].iter().product();
    let left: usize = local_dims[..party].iter().product();
    let mut out = vec![ZERO; amplitudes.len()];
    for l in 0..left {
        for r in 0..right {
            for a in 0..d {
                let mut acc = ZERO;
                for b in 0..d {
                    acc += op[(a, b)] * amplitudes[(l * d + b) * right + r];
                }
                out[(l * d + a) * right + r] = acc;
            }
        }
    }
    out
}

/// Density operator of N subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    local_dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(local_dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = check_dims(&local_dims)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{}, local dimensions require {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = Self { local_dims, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(local_dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Self {
        Self { local_dims, matrix }
    }

    /// Checks the density-matrix invariants at [`TOLERANCE`].
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        let n = m.nrows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if !dev.is_finite() || dev > TOLERANCE {
            return Err(Error::NotHermitian(dev));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > TOLERANCE || trace.im.abs() > TOLERANCE {
            return Err(Error::TraceNotOne(trace.re));
        }
        let min = self.min_eigenvalue();
        if min < -TOLERANCE {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize so the Hermitian solver sees an exactly Hermitian input.
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn num_parties(&self) -> usize {
        self.local_dims.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_qubits(&self) -> bool {
        self.local_dims.iter().all(|&d| d == 2)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Either kind of state; operations that only need expectation values accept
/// both without densifying pure inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl State {
    pub fn num_parties(&self) -> usize {
        self.local_dims().len()
    }

    pub fn local_dims(&self) -> &[usize] {
        match self {
            State::Pure(p) => p.local_dims(),
            State::Mixed(m) => m.local_dims(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            State::Pure(p) => p.dim(),
            State::Mixed(m) => m.dim(),
        }
    }

    pub fn is_qubits(&self) -> bool {
        self.local_dims().iter().all(|&d| d == 2)
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.to_density(),
            State::Mixed(m) => m.clone(),
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityMatrix> for State {
    fn from(m: DensityMatrix) -> Self {
        State::Mixed(m)
    }
}

/// One local unitary per party.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRotationSet {
    unitaries: Vec<DMatrix<Complex64>>,
}

impl LocalRotationSet {
    pub fn new(unitaries: Vec<DMatrix<Complex64>>) -> Result<Self> {
        for (party, u) in unitaries.iter().enumerate() {
            if u.nrows() != u.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "party {}: rotation is {}x{}, not square",
                    party + 1,
                    u.nrows(),
                    u.ncols()
                )));
            }
            let id = DMatrix::<Complex64>::identity(u.nrows(), u.nrows());
            let deviation = (u.adjoint() * u - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !deviation.is_finite() || deviation > TOLERANCE {
                return Err(Error::NonUnitary { party: party + 1, deviation });
            }
        }
        Ok(Self { unitaries })
    }

    pub fn identity(local_dims: &[usize]) -> Self {
        Self { unitaries: local_dims.iter().map(|&d| DMatrix::identity(d, d)).collect() }
    }

    /// Independent Haar-random unitaries, one per party.
    pub fn haar_random(local_dims: &[usize], seed: u64) -> Self {
        let mut rng = rng::stream(seed, 0);
        let unitaries = local_dims
            .iter()
            .map(|&d| {
                let g = DMatrix::from_fn(d, d, |_, _| gaussian_complex(&mut rng));
                let qr = g.qr();
                let (q, r) = (qr.q(), qr.r());
                // Fix the column phases so that Q is Haar distributed.
                let mut q = q;
                for k in 0..d {
                    let rkk = r[(k, k)];
                    let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { ONE };
                    for row in 0..d {
                        q[(row, k)] *= phase;
                    }
                }
                q
            })
            .collect();
        Self { unitaries }
    }

    pub fn unitaries(&self) -> &[DMatrix<Complex64>] {
        &self.unitaries
    }

    fn check_against(&self, local_dims: &[usize]) -> Result<()> {
        if self.unitaries.len() != local_dims.len() {
            return Err(Error::ArityMismatch { expected: local_dims.len(), found: self.unitaries.len() });
        }
        for (party, (u, &d)) in self.unitaries.iter().zip(local_dims).enumerate() {
            if u.nrows() != d {
                return Err(Error::DimensionMismatch(format!(
                    "party {}: rotation acts on dimension {}, subsystem has {d}",
                    party + 1,
                    u.nrows()
                )));
            }
        }
        Ok(())
    }

    fn kron_all(&self) -> DMatrix<Complex64> {
        self.unitaries.iter().fold(DMatrix::identity(1, 1), |acc: DMatrix<Complex64>, u| acc.kronecker(u))
    }
}

pub(crate) fn gaussian_complex<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Pure qubit state with the given Bloch vector (assumed unit).
fn qubit_from_bloch(u: [f64; 3]) -> [Complex64; 2] {
    let [x, y, z] = u;
    if 1.0 + z < 1e-15 {
        return [ZERO, ONE];
    }
    let a = ((1.0 + z) / 2.0).sqrt();
    let b = Complex64::new(x, y) / (2.0 * (1.0 + z)).sqrt();
    [Complex64::new(a, 0.0), b]
}

/// Product state `⊗_n |u_n>` where `|u_n>` has Bloch vector `u_n`.
pub fn make_product_state(bloch_vectors: &[[f64; 3]]) -> Result<PureState> {
    if bloch_vectors.is_empty() {
        return Err(Error::Domain("a product state needs at least one party".into()));
    }
    let mut amplitudes = vec![ONE];
    for (party, &u) in bloch_vectors.iter().enumerate() {
        let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NonUnitVector { party: party + 1, norm });
        }
        let q = qubit_from_bloch(u);
        amplitudes = amplitudes.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
    }
    PureState::normalized(vec![2; bloch_vectors.len()], amplitudes)
}

/// `(|0...0> + |1...1>) / sqrt(2)` on N qubits.
pub fn make_ghz(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::Domain(format!("GHZ state needs N >= 2, got {n}")));
    }
    if n >= usize::BITS as usize - 1 {
        return Err(Error::Unsupported(format!("GHZ state with N = {n}")));
    }
    let dim = 1usize << n;
    let mut amplitudes = vec![ZERO; dim];
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amplitudes[0] = h;
    amplitudes[dim - 1] = h;
    PureState::new(vec![2; n], amplitudes)
}

/// `(|00> + |11>) / sqrt(2)`.
pub fn make_bell() -> PureState {
    make_ghz(2).expect("N = 2 is valid")
}

/// `epsilon * rho + (1 - epsilon) * I / D`.
pub fn mix_with_white_noise(state: &State, epsilon: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("noise parameter {epsilon} outside [0, 1]")));
    }
    let rho = state.to_density();
    let dim = rho.dim();
    let noise = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new((1.0 - epsilon) / dim as f64, 0.0);
    let matrix = rho.matrix * Complex64::new(epsilon, 0.0) + noise;
    Ok(DensityMatrix::from_parts_unchecked(rho.local_dims, matrix))
}

/// Haar-random N-qubit pure state, deterministic in `seed`.
pub fn haar_random_pure(n: usize, seed: u64) -> Result<PureState> {
    if n < 1 {
        return Err(Error::Domain("Haar-random state needs N >= 1".into()));
    }
    haar_random_pure_dims(&vec![2; n], seed)
}

/// Haar-random pure state with arbitrary local dimensions: a normalized
/// vector of independent standard complex Gaussians.
pub fn haar_random_pure_dims(local_dims: &[usize], seed: u64) -> Result<PureState> {
    let dim = check_dims(local_dims)?;
    let mut rng = rng::stream(seed, 0);
    let amplitudes = (0..dim).map(|_| gaussian_complex(&mut rng)).collect();
    PureState::normalized(local_dims.to_vec(), amplitudes)
}

/// Product of independent Haar-random single-subsystem pure states.
pub fn haar_random_product(local_dims: &[usize], seed: u64) -> Result<PureState> {
    check_dims(local_dims)?;
    let mut state: Option<PureState> = None;
    for (party, &d) in local_dims.iter().enumerate() {
        let factor = haar_random_pure_dims(&[d], rng::derive_seed(seed, party as u64))?;
        state = Some(match state {
            None => factor,
            Some(s) => s.kron(&factor),
        });
    }
    Ok(state.expect("at least one party"))
}

/// `(U_1 ⊗ ... ⊗ U_N) |psi>` or the corresponding conjugation of `rho`.
pub fn apply_local_rotations(state: &State, rotations: &LocalRotationSet) -> Result<State> {
    rotations.check_against(state.local_dims())?;
    match state {
        State::Pure(p) => {
            let mut amplitudes = p.amplitudes.clone();
            for (party, u) in rotations.unitaries.iter().enumerate() {
                amplitudes = apply_local_operator(&amplitudes, &p.local_dims, party, u);
            }
            Ok(State::Pure(PureState { local_dims: p.local_dims.clone(), amplitudes }))
        }
        State::Mixed(m) => {
            let u = rotations.kron_all();
            let matrix = &u * &m.matrix * u.adjoint();
            Ok(State::Mixed(DensityMatrix::from_parts_unchecked(m.local_dims.clone(), matrix)))
        }
    }
}
