//! Gate-independent noise channels and their textual form.
//!
//! Textual grammar (whitespace is ignored):
//!
//! ```text
//! spec  := "depolarizing(" num ")"
//!        | "amplitude_damping(" num ")"
//!        | "phase_damping(" num ")"
//!        | "z_rotation(" num ")"
//!        | "swap_correlation(" beta ("," beta)* ")"
//!        | "compose(" spec ("," spec)* ")"
//! beta  := "beta_" I J "=" num        // 1-based qubit labels, I < J
//! ```
//!
//! `compose(a, b)` is the composition `a ∘ b`: `b` acts first. It maps onto a
//! [`NoiseSpec::Composite`] whose list is in application order, so
//! `compose(phase_damping(0.99), amplitude_damping(0.999))` is
//! `Composite([LocalAmplitudeDamping(0.999), LocalPhaseDamping(0.99)])`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::liouville::{
    avg_fidelity, check_qubits, hilbert_dim, liouville_dim, CMatrix, KrausSet,
    PauliTransferMatrix, C64,
};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// `rho -> p rho + (1 - p) I/d` on the whole register.
    GlobalDepolarizing { p: f64 },
    /// Amplitude damping on every qubit; `p = 1` is noiseless.
    LocalAmplitudeDamping { p: f64 },
    /// Phase damping on every qubit; `p = 1` is noiseless.
    LocalPhaseDamping { p: f64 },
    /// `exp(i theta Z)` on every qubit.
    LocalZRotation { theta: f64 },
    /// Product of `exp(i beta_ij SWAP_ij)` over the listed pairs (0-based, `i < j`).
    /// Factors act in lexicographic `(i, j)` order.
    SwapCorrelation { betas: Vec<(usize, usize, f64)> },
    /// Channels in application order: the first element acts first.
    Composite(Vec<NoiseSpec>),
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::ParameterOutOfRange { name, value, range });
    }
    Ok(())
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn amplitude_damping_kraus(p: f64) -> KrausSet {
    let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(p.sqrt(), 0.0)]);
    let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c((1.0 - p).sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    KrausSet::new(1, vec![k0, k1]).expect("amplitude damping is trace preserving")
}

fn phase_damping_kraus(p: f64) -> KrausSet {
    let e0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(p.sqrt(), 0.0)]);
    let e1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - p).sqrt(), 0.0)]);
    KrausSet::new(1, vec![e0, e1]).expect("phase damping is trace preserving")
}

fn z_rotation_kraus(theta: f64) -> KrausSet {
    let u = CMatrix::from_row_slice(
        2,
        2,
        &[c(theta.cos(), theta.sin()), c(0.0, 0.0), c(0.0, 0.0), c(theta.cos(), -theta.sin())],
    );
    KrausSet::new(1, vec![u]).expect("rotation is unitary")
}

fn local_power(single: &KrausSet, n: usize) -> Result<KrausSet> {
    let mut acc = single.clone();
    for _ in 1..n {
        acc = acc.tensor(single)?;
    }
    Ok(acc)
}

/// Permutation matrix exchanging qubits `i` and `j` (qubit 0 most significant).
pub fn swap_matrix(n: usize, i: usize, j: usize) -> CMatrix {
    let d = hilbert_dim(n);
    let (bi, bj) = (n - 1 - i, n - 1 - j);
    let mut m = CMatrix::zeros(d, d);
    for s in 0..d {
        let (vi, vj) = ((s >> bi) & 1, (s >> bj) & 1);
        let t = (s & !(1 << bi) & !(1 << bj)) | (vj << bi) | (vi << bj);
        m[(t, s)] = c(1.0, 0.0);
    }
    m
}

/// `exp(i beta SWAP_ij) = cos(beta) I + i sin(beta) SWAP_ij`, valid since `SWAP^2 = I`.
pub fn swap_exponential(n: usize, i: usize, j: usize, beta: f64) -> CMatrix {
    let d = hilbert_dim(n);
    CMatrix::identity(d, d).map(|z| z * beta.cos()) + swap_matrix(n, i, j).map(|z| z * c(0.0, beta.sin()))
}

impl NoiseSpec {
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        check_qubits(n_qubits)?;
        match self {
            NoiseSpec::GlobalDepolarizing { p } => check_range("p", *p, 0.0, 1.0, "[0, 1]"),
            NoiseSpec::LocalAmplitudeDamping { p } | NoiseSpec::LocalPhaseDamping { p } => {
                check_range("p", *p, 0.0, 1.0, "[0, 1]")
            }
            NoiseSpec::LocalZRotation { theta } => check_range("theta", *theta, 0.0, PI, "[0, pi]"),
            NoiseSpec::SwapCorrelation { betas } => {
                for &(i, j, beta) in betas {
                    if i >= j || j >= n_qubits {
                        return Err(Error::InvalidPair(i, j));
                    }
                    check_range("beta", beta, 0.0, PI, "[0, pi]")?;
                }
                Ok(())
            }
            NoiseSpec::Composite(parts) => {
                if parts.is_empty() {
                    return Err(Error::EmptyComposite);
                }
                parts.iter().try_for_each(|s| s.validate(n_qubits))
            }
        }
    }

    /// Transfer matrix of the channel on `n_qubits` qubits.
    pub fn build(&self, n_qubits: usize) -> Result<PauliTransferMatrix> {
        self.validate(n_qubits)?;
        match self {
            NoiseSpec::GlobalDepolarizing { p } => {
                let dim = liouville_dim(n_qubits);
                let mut e = DMatrix::identity(dim, dim) * *p;
                e[(0, 0)] = 1.0;
                PauliTransferMatrix::from_entries(n_qubits, e)
            }
            NoiseSpec::LocalAmplitudeDamping { p } => {
                PauliTransferMatrix::from_kraus(&local_power(&amplitude_damping_kraus(*p), n_qubits)?)
            }
            NoiseSpec::LocalPhaseDamping { p } => {
                PauliTransferMatrix::from_kraus(&local_power(&phase_damping_kraus(*p), n_qubits)?)
            }
            NoiseSpec::LocalZRotation { theta } => {
                PauliTransferMatrix::from_kraus(&local_power(&z_rotation_kraus(*theta), n_qubits)?)
            }
            NoiseSpec::SwapCorrelation { betas } => {
                let mut ordered = betas.clone();
                ordered.sort_by_key(|&(i, j, _)| (i, j));
                let d = hilbert_dim(n_qubits);
                let u = ordered.iter().fold(CMatrix::identity(d, d), |acc, &(i, j, beta)| {
                    swap_exponential(n_qubits, i, j, beta) * acc
                });
                PauliTransferMatrix::from_unitary(n_qubits, &u)
            }
            NoiseSpec::Composite(parts) => {
                let mut acc = PauliTransferMatrix::identity(n_qubits)?;
                for part in parts {
                    acc = part.build(n_qubits)?.compose(&acc)?;
                }
                Ok(acc)
            }
        }
    }

    /// `(f, F_avg)` of the channel.
    pub fn fidelity_of(&self, n_qubits: usize) -> Result<(f64, f64)> {
        let f = self.build(n_qubits)?.quality_parameter();
        Ok((f, avg_fidelity(f, n_qubits)))
    }

    /// `Λ_lp(p2) ∘ Λ_la(p1)`: amplitude damping followed by phase damping.
    pub fn damping_composite(p_amplitude: f64, p_phase: f64) -> Self {
        NoiseSpec::Composite(vec![
            NoiseSpec::LocalAmplitudeDamping { p: p_amplitude },
            NoiseSpec::LocalPhaseDamping { p: p_phase },
        ])
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::GlobalDepolarizing { p } => write!(f, "depolarizing({p:?})"),
            NoiseSpec::LocalAmplitudeDamping { p } => write!(f, "amplitude_damping({p:?})"),
            NoiseSpec::LocalPhaseDamping { p } => write!(f, "phase_damping({p:?})"),
            NoiseSpec::LocalZRotation { theta } => write!(f, "z_rotation({theta:?})"),
            NoiseSpec::SwapCorrelation { betas } => {
                write!(f, "swap_correlation(")?;
                for (k, (i, j, beta)) in betas.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "beta_{}{}={beta:?}", i + 1, j + 1)?;
                }
                write!(f, ")")
            }
            NoiseSpec::Composite(parts) => {
                write!(f, "compose(")?;
                for (k, part) in parts.iter().rev().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{part}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(spec)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::NoiseParse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, ch: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", ch as char)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || b".eE+-".contains(&self.src[self.pos]))
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map_err(|_| Error::NoiseParse {
            pos: start,
            msg: format!("invalid number '{text}'"),
        })
    }

    fn spec(&mut self) -> Result<NoiseSpec> {
        let name = self.ident()?;
        self.expect(b'(')?;
        let spec = match name.as_str() {
            "depolarizing" => NoiseSpec::GlobalDepolarizing { p: self.number()? },
            "amplitude_damping" => NoiseSpec::LocalAmplitudeDamping { p: self.number()? },
            "phase_damping" => NoiseSpec::LocalPhaseDamping { p: self.number()? },
            "z_rotation" => NoiseSpec::LocalZRotation { theta: self.number()? },
            "swap_correlation" => {
                let mut betas = Vec::new();
                loop {
                    let key = self.ident()?;
                    let pair = key
                        .strip_prefix("beta_")
                        .filter(|rest| rest.len() == 2)
                        .and_then(|rest| {
                            let mut it = rest.chars().map(|ch| ch.to_digit(10));
                            match (it.next().flatten(), it.next().flatten()) {
                                (Some(i), Some(j)) if i >= 1 && j >= 1 => {
                                    Some((i as usize - 1, j as usize - 1))
                                }
                                _ => None,
                            }
                        })
                        .ok_or_else(|| self.err(&format!("expected beta_IJ, found '{key}'")))?;
                    self.expect(b'=')?;
                    betas.push((pair.0, pair.1, self.number()?));
                    if !self.eat(b',') {
                        break;
                    }
                }
                NoiseSpec::SwapCorrelation { betas }
            }
            "compose" => {
                let mut parts = vec![self.spec()?];
                while self.eat(b',') {
                    parts.push(self.spec()?);
                }
                parts.reverse();
                NoiseSpec::Composite(parts)
            }
            other => return Err(self.err(&format!("unknown channel '{other}'"))),
        };
        self.expect(b')')?;
        Ok(spec)
    }
}
