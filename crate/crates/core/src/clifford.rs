//! Clifford group elements as stabilizer tableaux.
//!
//! A gate is stored by the images of the generators `X_0, Z_0, X_1, Z_1, ...`
//! under conjugation. Row `2q` is the image of `X_q`, row `2q + 1` the image of
//! `Z_q`. Each row is a bit vector over the interleaved coordinates
//! `(x_0, z_0, x_1, z_1, ...)` and carries a sign bit, so the image is the
//! Hermitian Pauli `(-1)^r P(x, z)` with `P(1, 1) = Y` on a qubit.
//!
//! Uniform sampling draws a uniformly random symplectic matrix through the
//! transvection construction of Koenig and Smolin together with uniform sign
//! bits. Every (symplectic matrix, sign vector) pair is a distinct Clifford
//! modulo global phase, so the draw is exactly uniform over the group.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::liouville::{check_qubits, liouville_dim, PauliTransferMatrix};

const EVEN: u32 = 0x5555_5555;

/// Pauli operator in `i^phase X^x Z^z` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct XzPauli {
    bits: u32,
    phase: u8,
}

impl XzPauli {
    fn y_count(bits: u32) -> u32 {
        (bits & (bits >> 1) & EVEN).count_ones()
    }

    /// Hermitian Pauli `(-1)^negative P(bits)` rewritten in XZ form (`Y = iXZ`).
    fn hermitian(bits: u32, negative: bool) -> Self {
        let phase = (2 * negative as u32 + Self::y_count(bits)) % 4;
        Self {
            bits,
            phase: phase as u8,
        }
    }

    fn mul(self, rhs: Self) -> Self {
        // Z^a X^b = (-1)^{a.b} X^b Z^a
        let swaps = ((self.bits >> 1) & rhs.bits & EVEN).count_ones();
        let phase = (self.phase as u32 + rhs.phase as u32 + 2 * swaps) % 4;
        Self {
            bits: self.bits ^ rhs.bits,
            phase: phase as u8,
        }
    }

    /// Sign of the Hermitian form; `None` if the operator is anti-Hermitian.
    fn hermitian_sign(self) -> Option<bool> {
        match (self.phase as u32 + 4 - Self::y_count(self.bits) % 4) % 4 {
            0 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }
}

fn swap_pairs(w: u32) -> u32 {
    ((w & EVEN) << 1) | ((w >> 1) & EVEN)
}

/// Binary symplectic form on interleaved coordinates.
fn symplectic_inner(v: u32, w: u32) -> u32 {
    (v & swap_pairs(w)).count_ones() & 1
}

fn transvection(k: u32, v: u32) -> u32 {
    if symplectic_inner(k, v) == 1 {
        v ^ k
    } else {
        v
    }
}

/// Two transvections `(h1, h2)` with `y = Z_h2 Z_h1 x`.
fn find_transvection(x: u32, y: u32, n: usize) -> (u32, u32) {
    if x == y {
        return (0, 0);
    }
    if symplectic_inner(x, y) == 1 {
        return (x ^ y, 0);
    }
    let pair = |v: u32, q: usize| (v >> (2 * q)) & 3;
    for q in 0..n {
        let (xq, yq) = (pair(x, q), pair(y, q));
        if xq != 0 && yq != 0 {
            let mut zq = xq ^ yq;
            if zq == 0 {
                zq = 2;
                if (xq & 1) != (xq >> 1) {
                    zq |= 1;
                }
            }
            let z = zq << (2 * q);
            return (x ^ z, y ^ z);
        }
    }
    let mut z = 0;
    for q in 0..n {
        let (xq, yq) = (pair(x, q), pair(y, q));
        if xq != 0 && yq == 0 {
            let zq = if (xq & 1) == (xq >> 1) {
                2
            } else {
                ((xq & 1) << 1) | (xq >> 1)
            };
            z |= zq << (2 * q);
            break;
        }
    }
    for q in 0..n {
        let (xq, yq) = (pair(x, q), pair(y, q));
        if xq == 0 && yq != 0 {
            let zq = if (yq & 1) == (yq >> 1) {
                2
            } else {
                ((yq & 1) << 1) | (yq >> 1)
            };
            z |= zq << (2 * q);
            break;
        }
    }
    (x ^ z, y ^ z)
}

/// Order of the symplectic group `Sp(2n, F_2)`.
pub fn symplectic_group_order(n: usize) -> u128 {
    (1..=n as u32)
        .map(|j| (1u128 << (2 * j - 1)) * ((1u128 << (2 * j)) - 1))
        .product()
}

/// Order of the Clifford group modulo global phase.
pub fn clifford_group_order(n: usize) -> u128 {
    symplectic_group_order(n) << (2 * n)
}

/// The `index`-th symplectic matrix, `index < symplectic_group_order(n)`.
/// Rows are images of the interleaved basis vectors.
pub fn symplectic_from_index(index: u128, n: usize) -> Vec<u32> {
    let nn = 2 * n;
    let s = (1u128 << nn) - 1;
    let k = (index % s) + 1;
    let index = index / s;

    let mut f1 = k as u32;
    let e1 = 1u32;
    let (t0, t1) = find_transvection(e1, f1, n);

    let bits = (index % (1u128 << (nn - 1))) as u32;
    let mut eprime = e1;
    for j in 2..nn {
        eprime |= ((bits >> (j - 1)) & 1) << j;
    }
    let h0 = transvection(t1, transvection(t0, eprime));
    if bits & 1 == 1 {
        f1 = 0;
    }

    let mut rows = vec![1u32, 2u32];
    if n > 1 {
        rows.extend(
            symplectic_from_index(index >> (nn - 1), n - 1)
                .into_iter()
                .map(|r| r << 2),
        );
    }
    rows.into_iter()
        .map(|r| {
            let r = transvection(t0, r);
            let r = transvection(t1, r);
            let r = transvection(h0, r);
            transvection(f1, r)
        })
        .collect()
}

/// Element of the `n`-qubit Clifford group (modulo global phase).
#[derive(Debug, Clone)]
pub struct CliffordGate {
    n_qubits: usize,
    rows: Vec<u32>,
    phases: u32,
    ptm: OnceLock<PauliTransferMatrix>,
}

impl PartialEq for CliffordGate {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits && self.rows == other.rows && self.phases == other.phases
    }
}

impl Eq for CliffordGate {}

impl std::hash::Hash for CliffordGate {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.n_qubits.hash(state);
        self.rows.hash(state);
        self.phases.hash(state);
    }
}

impl CliffordGate {
    /// Builds a gate from generator images, validating the symplectic condition.
    pub fn from_tableau(n_qubits: usize, rows: Vec<u32>, phases: u32) -> Result<Self> {
        check_qubits(n_qubits)?;
        if rows.len() != 2 * n_qubits {
            return Err(Error::Shape {
                expected: format!("{} tableau rows", 2 * n_qubits),
                actual: format!("{}", rows.len()),
            });
        }
        let mask = (1u32 << (2 * n_qubits)) - 1;
        if rows.iter().any(|r| r & !mask != 0) || phases & !mask != 0 {
            return Err(Error::InvalidConfig("tableau bits exceed qubit count".into()));
        }
        let gate = Self::from_parts(n_qubits, rows, phases);
        if !gate.is_symplectic() {
            return Err(Error::InvalidConfig("tableau is not symplectic".into()));
        }
        Ok(gate)
    }

    fn from_parts(n_qubits: usize, rows: Vec<u32>, phases: u32) -> Self {
        Self {
            n_qubits,
            rows,
            phases,
            ptm: OnceLock::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self::from_parts(
            n_qubits,
            (0..2 * n_qubits).map(|k| 1 << k).collect(),
            0,
        ))
    }

    fn check_target(n_qubits: usize, qubit: usize) -> Result<()> {
        check_qubits(n_qubits)?;
        if qubit >= n_qubits {
            return Err(Error::InvalidConfig(format!(
                "qubit {qubit} out of range for {n_qubits} qubit(s)"
            )));
        }
        Ok(())
    }

    pub fn hadamard(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::check_target(n_qubits, qubit)?;
        let mut g = Self::identity(n_qubits)?;
        g.rows[2 * qubit] = 2 << (2 * qubit);
        g.rows[2 * qubit + 1] = 1 << (2 * qubit);
        Ok(g)
    }

    /// The phase gate `S = diag(1, i)`.
    pub fn phase(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::check_target(n_qubits, qubit)?;
        let mut g = Self::identity(n_qubits)?;
        g.rows[2 * qubit] = 3 << (2 * qubit);
        Ok(g)
    }

    pub fn pauli_x(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::check_target(n_qubits, qubit)?;
        let mut g = Self::identity(n_qubits)?;
        g.phases = 1 << (2 * qubit + 1);
        Ok(g)
    }

    pub fn cnot(n_qubits: usize, control: usize, target: usize) -> Result<Self> {
        Self::check_target(n_qubits, control)?;
        Self::check_target(n_qubits, target)?;
        if control == target {
            return Err(Error::InvalidConfig("CNOT control equals target".into()));
        }
        let mut g = Self::identity(n_qubits)?;
        g.rows[2 * control] |= 1 << (2 * target);
        g.rows[2 * target + 1] |= 2 << (2 * control);
        Ok(g)
    }

    /// Group element number `index` in `0..clifford_group_order(n)`.
    pub fn from_index(n_qubits: usize, index: u128) -> Result<Self> {
        check_qubits(n_qubits)?;
        let order = clifford_group_order(n_qubits);
        if index >= order {
            return Err(Error::InvalidConfig(format!(
                "Clifford index {index} out of range (group order {order})"
            )));
        }
        let phase_count = 1u128 << (2 * n_qubits);
        let rows = symplectic_from_index(index / phase_count, n_qubits);
        Ok(Self::from_parts(
            n_qubits,
            rows,
            (index % phase_count) as u32,
        ))
    }

    /// Exactly uniform draw from the Clifford group.
    pub fn sample_uniform<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n_qubits)?;
        let index = rng.random_range(0..clifford_group_order(n_qubits));
        Self::from_index(n_qubits, index)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn tableau(&self) -> (&[u32], u32) {
        (&self.rows, self.phases)
    }

    pub fn is_identity(&self) -> bool {
        self.phases == 0 && self.rows.iter().enumerate().all(|(k, &r)| r == 1 << k)
    }

    pub fn is_symplectic(&self) -> bool {
        let n = self.rows.len();
        (0..n).all(|k| {
            (0..n).all(|l| {
                let expected = u32::from(k / 2 == l / 2 && k != l);
                symplectic_inner(self.rows[k], self.rows[l]) == expected
            })
        })
    }

    fn image(&self, k: usize) -> XzPauli {
        XzPauli::hermitian(self.rows[k], (self.phases >> k) & 1 == 1)
    }

    fn conjugate(&self, p: XzPauli) -> XzPauli {
        // X^x Z^z = (prod_q X_q^{x_q}) (prod_q Z_q^{z_q})
        let mut out = XzPauli {
            bits: 0,
            phase: p.phase,
        };
        for q in 0..self.n_qubits {
            if (p.bits >> (2 * q)) & 1 == 1 {
                out = out.mul(self.image(2 * q));
            }
        }
        for q in 0..self.n_qubits {
            if (p.bits >> (2 * q + 1)) & 1 == 1 {
                out = out.mul(self.image(2 * q + 1));
            }
        }
        out
    }

    /// Gate `self ∘ other` (`other` acts first).
    pub fn compose(&self, other: &CliffordGate) -> Result<CliffordGate> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::MixedQubits);
        }
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut phases = 0;
        for k in 0..self.rows.len() {
            let img = self.conjugate(other.image(k));
            let negative = img
                .hermitian_sign()
                .expect("Clifford conjugation preserves Hermiticity");
            rows.push(img.bits);
            phases |= u32::from(negative) << k;
        }
        Ok(Self::from_parts(self.n_qubits, rows, phases))
    }

    pub fn inverse(&self) -> CliffordGate {
        let n = self.n_qubits;
        let size = 1usize << (2 * n);
        // linear image of every bit vector, inverted by lookup
        let mut preimage = vec![0u32; size];
        for v in 0..size as u32 {
            let image = (0..2 * n)
                .filter(|k| (v >> k) & 1 == 1)
                .fold(0u32, |acc, k| acc ^ self.rows[k]);
            preimage[image as usize] = v;
        }
        let rows: Vec<u32> = (0..2 * n).map(|k| preimage[1usize << k]).collect();
        let unsigned = Self::from_parts(n, rows.clone(), 0);
        let residual = self
            .compose(&unsigned)
            .expect("same qubit count by construction");
        debug_assert_eq!(residual.rows, unsigned_identity_rows(n));
        Self::from_parts(n, rows, residual.phases)
    }

    /// Transfer matrix of the gate: a signed permutation. Cached after first use.
    pub fn to_ptm(&self) -> &PauliTransferMatrix {
        self.ptm.get_or_init(|| {
            let n = self.n_qubits;
            let dim = liouville_dim(n);
            let mut entries = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                let bits = pauli_index_to_bits(j, n);
                let img = self.conjugate(XzPauli::hermitian(bits, false));
                let negative = img
                    .hermitian_sign()
                    .expect("Clifford conjugation preserves Hermiticity");
                let i = bits_to_pauli_index(img.bits, n);
                entries[(i, j)] = if negative { -1.0 } else { 1.0 };
            }
            PauliTransferMatrix::from_entries_unchecked(n, entries)
        })
    }
}

fn unsigned_identity_rows(n: usize) -> Vec<u32> {
    (0..2 * n).map(|k| 1 << k).collect()
}

/// Basis index (letters I, X, Y, Z; qubit 0 most significant) to tableau bits.
fn pauli_index_to_bits(j: usize, n: usize) -> u32 {
    let mut bits = 0;
    for q in 0..n {
        let letter = (j >> (2 * (n - 1 - q))) & 3;
        let pair = match letter {
            0 => 0,
            1 => 1,
            2 => 3,
            _ => 2,
        };
        bits |= pair << (2 * q);
    }
    bits
}

fn bits_to_pauli_index(bits: u32, n: usize) -> usize {
    let mut j = 0;
    for q in 0..n {
        let letter = match (bits >> (2 * q)) & 3 {
            0 => 0,
            1 => 1,
            3 => 2,
            _ => 3,
        };
        j |= letter << (2 * (n - 1 - q));
    }
    j
}

/// Inverse of the ordered product: returns `(G_m ... G_1)^{-1}` for `gates = [G_1, ..., G_m]`.
pub fn sequence_inverse(gates: &[CliffordGate]) -> Result<CliffordGate> {
    let first = gates
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty gate sequence".into()))?;
    let mut product = CliffordGate::identity(first.n_qubits())?;
    for g in gates {
        product = g.compose(&product)?;
    }
    Ok(product.inverse())
}

/// Random gate sequence together with its global inverse.
#[derive(Debug, Clone)]
pub struct GateSequence {
    n_qubits: usize,
    gates: Vec<CliffordGate>,
    inverse_gate: CliffordGate,
}

impl GateSequence {
    pub fn new(n_qubits: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if gates.iter().any(|g| g.n_qubits() != n_qubits) {
            return Err(Error::MixedQubits);
        }
        let inverse_gate = if gates.is_empty() {
            CliffordGate::identity(n_qubits)?
        } else {
            sequence_inverse(&gates)?
        };
        Ok(Self {
            n_qubits,
            gates,
            inverse_gate,
        })
    }

    /// `m` independent uniform Cliffords plus their inverse.
    pub fn sample<R: Rng + ?Sized>(n_qubits: usize, m: usize, rng: &mut R) -> Result<Self> {
        let gates = (0..m)
            .map(|_| CliffordGate::sample_uniform(n_qubits, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, gates)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn inverse_gate(&self) -> &CliffordGate {
        &self.inverse_gate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{CMatrix, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::collections::HashSet;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn h_unitary() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    fn s_unitary() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
    }

    fn x_unitary() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn cnot_unitary() -> CMatrix {
        // control qubit 0 (most significant)
        let mut u = CMatrix::zeros(4, 4);
        for (a, b) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            u[(a, b)] = c(1.0, 0.0);
        }
        u
    }

    fn on_qubit(u: &CMatrix, n: usize, q: usize) -> CMatrix {
        (0..n).fold(CMatrix::identity(1, 1), |acc, k| {
            if k == q {
                acc.kronecker(u)
            } else {
                acc.kronecker(&CMatrix::identity(2, 2))
            }
        })
    }

    fn assert_ptm_matches(g: &CliffordGate, u: &CMatrix) {
        let oracle = PauliTransferMatrix::from_unitary(g.n_qubits(), u).unwrap();
        assert!(g.to_ptm().max_abs_diff(&oracle) < 1e-12, "{g:?}");
    }

    #[test]
    fn named_gates_match_unitaries() {
        for n in 1..=2 {
            for q in 0..n {
                assert_ptm_matches(&CliffordGate::hadamard(n, q).unwrap(), &on_qubit(&h_unitary(), n, q));
                assert_ptm_matches(&CliffordGate::phase(n, q).unwrap(), &on_qubit(&s_unitary(), n, q));
                assert_ptm_matches(&CliffordGate::pauli_x(n, q).unwrap(), &on_qubit(&x_unitary(), n, q));
            }
        }
        assert_ptm_matches(&CliffordGate::cnot(2, 0, 1).unwrap(), &cnot_unitary());
    }

    #[test]
    fn group_orders() {
        assert_eq!(symplectic_group_order(1), 6);
        assert_eq!(symplectic_group_order(2), 720);
        assert_eq!(clifford_group_order(1), 24);
        assert_eq!(clifford_group_order(2), 11520);
    }

    #[test]
    fn symplectic_indexing_is_a_bijection() {
        for n in 1..=2 {
            let mut seen = HashSet::new();
            for i in 0..symplectic_group_order(n) {
                let rows = symplectic_from_index(i, n);
                let g = CliffordGate::from_tableau(n, rows.clone(), 0).unwrap();
                assert!(g.is_symplectic());
                assert!(seen.insert(rows));
            }
            assert_eq!(seen.len() as u128, symplectic_group_order(n));
        }
    }

    #[test]
    fn inverse_examples() {
        let id = CliffordGate::identity(1).unwrap();
        assert_eq!(id.inverse(), id);
        let h = CliffordGate::hadamard(1, 0).unwrap();
        assert_eq!(h.inverse(), h);
        let s = CliffordGate::phase(1, 0).unwrap();
        assert_ne!(s.inverse(), s);
    }

    #[test]
    fn inverse_of_random_gates() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for n in 1..=2 {
            for _ in 0..200 {
                let g = CliffordGate::sample_uniform(n, &mut rng).unwrap();
                let inv = g.inverse();
                assert!(g.compose(&inv).unwrap().is_identity());
                assert!(inv.compose(&g).unwrap().is_identity());
                // the inverse of an orthogonal matrix is its transpose
                let prod = inv.to_ptm().compose(g.to_ptm()).unwrap();
                assert!(prod.max_abs_diff(&PauliTransferMatrix::identity(n).unwrap()) < 1e-12);
                assert!(inv.to_ptm().max_abs_diff(&g.to_ptm().transpose()) < 1e-12);
            }
        }
    }

    #[test]
    fn ptm_is_a_homomorphism() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for n in 1..=2 {
            for _ in 0..200 {
                let a = CliffordGate::sample_uniform(n, &mut rng).unwrap();
                let b = CliffordGate::sample_uniform(n, &mut rng).unwrap();
                let ab = a.compose(&b).unwrap();
                assert!(ab.is_symplectic());
                let prod = a.to_ptm().compose(b.to_ptm()).unwrap();
                assert!(ab.to_ptm().max_abs_diff(&prod) < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a = CliffordGate::sample_uniform(2, &mut ChaCha12Rng::seed_from_u64(99)).unwrap();
        let b = CliffordGate::sample_uniform(2, &mut ChaCha12Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequence_inverse_matches_reverse_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let gates: Vec<_> = (0..7)
            .map(|_| CliffordGate::sample_uniform(2, &mut rng).unwrap())
            .collect();
        // brute force: G_1^-1 G_2^-1 ... G_m^-1
        let mut expected = CliffordGate::identity(2).unwrap();
        for g in &gates {
            expected = expected.compose(&g.inverse()).unwrap();
        }
        assert_eq!(sequence_inverse(&gates).unwrap(), expected);
        assert_eq!(sequence_inverse(&gates[..1]).unwrap(), gates[0].inverse());
        assert!(sequence_inverse(&[]).is_err());
        let mixed = vec![gates[0].clone(), CliffordGate::identity(1).unwrap()];
        assert!(matches!(sequence_inverse(&mixed), Err(Error::MixedQubits)));
    }

    #[test]
    fn sequence_plus_inverse_is_identity_superoperator() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for n in 1..=2 {
            let seq = GateSequence::sample(n, 20, &mut rng).unwrap();
            let total = seq
                .gates()
                .iter()
                .fold(PauliTransferMatrix::identity(n).unwrap(), |acc, g| {
                    g.to_ptm().compose(&acc).unwrap()
                });
            let total = seq.inverse_gate().to_ptm().compose(&total).unwrap();
            assert!(total.max_abs_diff(&PauliTransferMatrix::identity(n).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn invalid_tableaux_rejected() {
        assert!(CliffordGate::from_tableau(1, vec![1, 1], 0).is_err());
        assert!(CliffordGate::from_tableau(1, vec![1], 0).is_err());
        assert!(CliffordGate::sample_uniform(0, &mut ChaCha12Rng::seed_from_u64(0)).is_err());
        assert!(CliffordGate::cnot(2, 1, 1).is_err());
    }
}
