//! Liouville (Pauli transfer matrix) representation of states, effects and
//! channels.
//!
//! Operators are expanded in the normalized Pauli basis
//! `sigma_j = P_j / sqrt(d)`, where `P_j` runs over the `4^n` Pauli strings in
//! lexicographic order over `{I, X, Y, Z}^n` with qubit 0 as the most
//! significant digit. Index 0 is therefore `I/sqrt(d)`. In this basis every
//! Hermiticity-preserving map has a real matrix:
//!
//! ```text
//! M[i][j] = sum_K Tr(sigma_i K sigma_j K^dag)
//! ```
//!
//! A state `rho` becomes the real vector `r_i = Tr(sigma_i rho)` and an effect
//! `Q` the vector `q_i = Tr(sigma_i Q)`, so that `Tr(Q rho) = <q, r>` and the
//! action of a channel is a matrix-vector product.
//!
//! # Quality parameter
//!
//! Twirling a channel over a unitary 2-design leaves a depolarizing channel
//! `rho -> f rho + (1 - f) I / d`. The twirl preserves the trace of the
//! transfer matrix, and the transfer matrix of that depolarizing channel is
//! `diag(1, f, ..., f)` with trace `1 + (d^2 - 1) f`. Hence
//!
//! ```text
//! f = (Tr(M) - 1) / (d^2 - 1)
//! ```
//!
//! and the average gate fidelity follows from `F_avg = f + (1 - f) / d`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::MAX_QUBITS;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Tolerance for validating Kraus sets and unitaries.
pub const CONSTRUCTION_TOL: f64 = 1e-10;
/// Tolerance for propagated quantities (trace row, unit trace).
pub const PROPAGATION_TOL: f64 = 1e-12;
/// Slack allowed on probabilities before they are reported as non-physical.
pub const PROBABILITY_SLACK: f64 = 1e-9;

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::UnsupportedQubits(n));
    }
    Ok(())
}

/// Hilbert-space dimension `2^n`.
pub fn hilbert_dim(n: usize) -> usize {
    1 << n
}

/// Liouville-space dimension `4^n`.
pub fn liouville_dim(n: usize) -> usize {
    1 << (2 * n)
}

fn single_pauli(k: usize) -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        1 => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        2 => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        3 => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => unreachable!("pauli index out of range"),
    }
}

/// Per-qubit Pauli letters (0=I, 1=X, 2=Y, 3=Z) of basis index `j`, qubit 0 first.
pub fn pauli_digits(j: usize, n: usize) -> Vec<usize> {
    (0..n).map(|q| (j >> (2 * (n - 1 - q))) & 3).collect()
}

/// Label such as `"IZ"` for basis index `j`.
pub fn pauli_label(j: usize, n: usize) -> String {
    pauli_digits(j, n)
        .into_iter()
        .map(|d| ['I', 'X', 'Y', 'Z'][d])
        .collect()
}

/// Unnormalized Pauli string matrix `P_j`.
pub fn pauli_string(j: usize, n: usize) -> CMatrix {
    pauli_digits(j, n)
        .into_iter()
        .fold(CMatrix::from_element(1, 1, C64::new(1.0, 0.0)), |acc, d| {
            acc.kronecker(&single_pauli(d))
        })
}

/// The normalized basis `sigma_j = P_j / sqrt(d)` in canonical order.
pub fn normalized_pauli_basis(n: usize) -> Vec<CMatrix> {
    let scale = 1.0 / (hilbert_dim(n) as f64).sqrt();
    (0..liouville_dim(n))
        .map(|j| pauli_string(j, n).map(|z| z * scale))
        .collect()
}

fn max_abs_dev(m: &CMatrix, reference: &CMatrix) -> f64 {
    (m - reference).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    // Tr(AB) without forming the product
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Kraus decomposition of a channel on `n` qubits.
#[derive(Debug, Clone)]
pub struct KrausSet {
    n_qubits: usize,
    operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(n_qubits: usize, operators: Vec<CMatrix>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = hilbert_dim(n_qubits);
        if operators.is_empty() {
            return Err(Error::Shape {
                expected: "at least one Kraus operator".into(),
                actual: "none".into(),
            });
        }
        for k in &operators {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::Shape {
                    expected: format!("{d}x{d}"),
                    actual: format!("{}x{}", k.nrows(), k.ncols()),
                });
            }
        }
        let sum = operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        let deviation = max_abs_dev(&sum, &CMatrix::identity(d, d));
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::Completeness { deviation });
        }
        Ok(Self {
            n_qubits,
            operators,
        })
    }

    pub fn unitary(n_qubits: usize, u: CMatrix) -> Result<Self> {
        check_unitary(&u)?;
        Self::new(n_qubits, vec![u])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// Kraus set of `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &KrausSet) -> Result<KrausSet> {
        let ops = self
            .operators
            .iter()
            .flat_map(|a| other.operators.iter().map(move |b| a.kronecker(b)))
            .collect();
        KrausSet::new(self.n_qubits + other.n_qubits, ops)
    }

    /// Kraus set of `self ∘ other` (`other` acts first).
    pub fn after(&self, other: &KrausSet) -> Result<KrausSet> {
        if self.n_qubits != other.n_qubits {
            return Err(shape_err(self.n_qubits, other.n_qubits));
        }
        let ops = self
            .operators
            .iter()
            .flat_map(|a| other.operators.iter().map(move |b| a * b))
            .collect();
        KrausSet::new(self.n_qubits, ops)
    }

    /// Apply the channel to a density matrix.
    pub fn apply_to_density(&self, rho: &CMatrix) -> CMatrix {
        let d = hilbert_dim(self.n_qubits);
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
    }
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::Shape {
            expected: "square matrix".into(),
            actual: format!("{}x{}", u.nrows(), u.ncols()),
        });
    }
    let d = u.nrows();
    let deviation = max_abs_dev(&(u.adjoint() * u), &CMatrix::identity(d, d));
    if deviation > CONSTRUCTION_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

fn shape_err(expected: usize, actual: usize) -> Error {
    Error::Shape {
        expected: format!("{expected} qubit(s)"),
        actual: format!("{actual} qubit(s)"),
    }
}

/// Real `4^n x 4^n` transfer matrix of a channel in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    n_qubits: usize,
    entries: DMatrix<f64>,
}

impl PauliTransferMatrix {
    /// Validates the trace-preservation row and the entry magnitude bound.
    pub fn from_entries(n_qubits: usize, entries: DMatrix<f64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = liouville_dim(n_qubits);
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::Shape {
                expected: format!("{dim}x{dim}"),
                actual: format!("{}x{}", entries.nrows(), entries.ncols()),
            });
        }
        for j in 0..dim {
            let target = if j == 0 { 1.0 } else { 0.0 };
            if (entries[(0, j)] - target).abs() > PROPAGATION_TOL {
                return Err(Error::InvalidTransferMatrix(format!(
                    "row 0 is not the trace row: entry (0, {j}) = {}",
                    entries[(0, j)]
                )));
            }
        }
        if let Some(v) = entries.iter().find(|v| v.abs() > 1.0 + PROBABILITY_SLACK) {
            return Err(Error::InvalidTransferMatrix(format!(
                "entry {v} outside [-1, 1]"
            )));
        }
        Ok(Self { n_qubits, entries })
    }

    pub(crate) fn from_entries_unchecked(n_qubits: usize, entries: DMatrix<f64>) -> Self {
        Self { n_qubits, entries }
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = liouville_dim(n_qubits);
        Ok(Self::from_entries_unchecked(
            n_qubits,
            DMatrix::identity(dim, dim),
        ))
    }

    pub fn from_kraus(kraus: &KrausSet) -> Result<Self> {
        let n = kraus.n_qubits;
        // unnormalized strings; the 1/d factor is applied once at the end
        let basis: Vec<CMatrix> = (0..liouville_dim(n)).map(|j| pauli_string(j, n)).collect();
        let dim = basis.len();
        let inv_d = 1.0 / hilbert_dim(n) as f64;
        let mut entries = DMatrix::zeros(dim, dim);
        let mut residue = 0.0f64;
        for j in 0..dim {
            // image of sigma_j, then project onto each sigma_i
            let image = kraus
                .operators
                .iter()
                .fold(CMatrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, k| {
                    acc + k * &basis[j] * k.adjoint()
                });
            for (i, sigma) in basis.iter().enumerate() {
                let z = trace_product(sigma, &image) * inv_d;
                residue = residue.max(z.im.abs());
                entries[(i, j)] = z.re;
            }
        }
        if residue > PROPAGATION_TOL {
            return Err(Error::ComplexResidue { residue });
        }
        Self::from_entries(n, entries)
    }

    pub fn from_unitary(n_qubits: usize, u: &CMatrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = hilbert_dim(n_qubits);
        if u.nrows() != d {
            return Err(Error::Shape {
                expected: format!("{d}x{d}"),
                actual: format!("{}x{}", u.nrows(), u.ncols()),
            });
        }
        check_unitary(u)?;
        Self::from_kraus(&KrausSet {
            n_qubits,
            operators: vec![u.clone()],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Matrix of `self ∘ other`: `other` is applied first.
    pub fn compose(&self, other: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
        if self.n_qubits != other.n_qubits {
            return Err(shape_err(self.n_qubits, other.n_qubits));
        }
        Ok(Self::from_entries_unchecked(
            self.n_qubits,
            &self.entries * &other.entries,
        ))
    }

    pub fn apply(&self, state: &StateVec) -> Result<StateVec> {
        if self.n_qubits != state.n_qubits {
            return Err(shape_err(self.n_qubits, state.n_qubits));
        }
        Ok(StateVec {
            n_qubits: self.n_qubits,
            coefficients: &self.entries * &state.coefficients,
        })
    }

    /// In-place `v <- M v` for propagation loops.
    pub(crate) fn apply_into(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        self.entries.mul_to(v, out);
    }

    /// Transfer matrix of `self ⊗ other`.
    pub fn tensor(&self, other: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
        let n = self.n_qubits + other.n_qubits;
        check_qubits(n)?;
        Ok(Self::from_entries_unchecked(
            n,
            self.entries.kronecker(&other.entries),
        ))
    }

    pub fn transpose(&self) -> PauliTransferMatrix {
        Self::from_entries_unchecked(self.n_qubits, self.entries.transpose())
    }

    /// Depolarizing parameter of the twirled channel, `(Tr M - 1) / (d^2 - 1)`.
    pub fn quality_parameter(&self) -> f64 {
        let dim = liouville_dim(self.n_qubits) as f64;
        (self.trace() - 1.0) / (dim - 1.0)
    }

    pub fn max_abs_diff(&self, other: &PauliTransferMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `M^T M` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let dim = self.entries.nrows();
        (self.entries.transpose() * &self.entries - DMatrix::<f64>::identity(dim, dim))
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// `F_avg = f + (1 - f) / d`.
pub fn avg_fidelity(f: f64, n_qubits: usize) -> f64 {
    let d = hilbert_dim(n_qubits) as f64;
    f + (1.0 - f) / d
}

/// Inverse of [`avg_fidelity`].
pub fn quality_from_fidelity(f_avg: f64, n_qubits: usize) -> f64 {
    let d = hilbert_dim(n_qubits) as f64;
    (d * f_avg - 1.0) / (d - 1.0)
}

fn zeros_coefficients(n: usize) -> DVector<f64> {
    // |0..0><0..0| = prod (I + Z)/2 has weight on I/Z strings only
    let scale = 1.0 / (hilbert_dim(n) as f64).sqrt();
    DVector::from_iterator(
        liouville_dim(n),
        (0..liouville_dim(n)).map(|j| {
            if pauli_digits(j, n).iter().all(|&d| d == 0 || d == 3) {
                scale
            } else {
                0.0
            }
        }),
    )
}

fn operator_coefficients(n: usize, op: &CMatrix) -> Result<DVector<f64>> {
    let d = hilbert_dim(n);
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::Shape {
            expected: format!("{d}x{d}"),
            actual: format!("{}x{}", op.nrows(), op.ncols()),
        });
    }
    let herm = max_abs_dev(op, &op.adjoint());
    if herm > CONSTRUCTION_TOL {
        return Err(Error::InvalidState(format!(
            "operator is not Hermitian (deviation {herm:.3e})"
        )));
    }
    let basis = normalized_pauli_basis(n);
    Ok(DVector::from_iterator(
        basis.len(),
        basis.iter().map(|s| trace_product(s, op).re),
    ))
}

/// Density operator in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVec {
    n_qubits: usize,
    coefficients: DVector<f64>,
}

impl StateVec {
    pub fn from_coefficients(n_qubits: usize, coefficients: Vec<f64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if coefficients.len() != liouville_dim(n_qubits) {
            return Err(Error::Shape {
                expected: format!("{} coefficients", liouville_dim(n_qubits)),
                actual: format!("{}", coefficients.len()),
            });
        }
        let unit = 1.0 / (hilbert_dim(n_qubits) as f64).sqrt();
        if (coefficients[0] - unit).abs() > PROPAGATION_TOL {
            return Err(Error::InvalidState(format!(
                "coefficient 0 is {} but unit trace requires {unit}",
                coefficients[0]
            )));
        }
        Ok(Self {
            n_qubits,
            coefficients: DVector::from_vec(coefficients),
        })
    }

    pub fn from_density(n_qubits: usize, rho: &CMatrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        let c = operator_coefficients(n_qubits, rho)?;
        Self::from_coefficients(n_qubits, c.iter().copied().collect())
    }

    /// `|0...0><0...0|`.
    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            coefficients: zeros_coefficients(n_qubits),
        })
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut c = vec![0.0; liouville_dim(n_qubits)];
        c[0] = 1.0 / (hilbert_dim(n_qubits) as f64).sqrt();
        Self::from_coefficients(n_qubits, c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }
}

/// POVM element in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectVec {
    n_qubits: usize,
    coefficients: DVector<f64>,
}

impl EffectVec {
    pub fn from_coefficients(n_qubits: usize, coefficients: Vec<f64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if coefficients.len() != liouville_dim(n_qubits) {
            return Err(Error::Shape {
                expected: format!("{} coefficients", liouville_dim(n_qubits)),
                actual: format!("{}", coefficients.len()),
            });
        }
        Ok(Self {
            n_qubits,
            coefficients: DVector::from_vec(coefficients),
        })
    }

    pub fn from_operator(n_qubits: usize, q: &CMatrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            coefficients: operator_coefficients(n_qubits, q)?,
        })
    }

    /// Projector onto `|0...0>`.
    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            coefficients: zeros_coefficients(n_qubits),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// `Tr(Q)`.
    pub fn trace(&self) -> f64 {
        self.coefficients[0] * (hilbert_dim(self.n_qubits) as f64).sqrt()
    }

    /// `Tr(Q rho)` without range checks.
    pub fn overlap(&self, state: &StateVec) -> Result<f64> {
        if self.n_qubits != state.n_qubits {
            return Err(shape_err(self.n_qubits, state.n_qubits));
        }
        Ok(self.coefficients.dot(&state.coefficients))
    }

    /// Outcome probability `Tr(Q rho)`, clamped to `[0, 1]` within slack.
    pub fn expectation(&self, state: &StateVec) -> Result<f64> {
        clamp_probability(self.overlap(state)?)
    }
}

pub(crate) fn clamp_probability(value: f64) -> Result<f64> {
    if value < -PROBABILITY_SLACK || value > 1.0 + PROBABILITY_SLACK || value.is_nan() {
        return Err(Error::ProbabilityOutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}
