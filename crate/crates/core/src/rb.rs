//! Standard randomized benchmarking with circuit reuse.
//!
//! A sequence of `m` uniformly random Cliffords, each followed by the noise
//! channel, is closed by the noiseless global inverse. Its survival
//! probability `p` is measured `R` times (a binomial draw), and `N` sequences
//! are averaged per length.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::clifford::GateSequence;
use crate::error::{Error, Result};
use crate::liouville::{
    clamp_probability, hilbert_dim, EffectVec, PauliTransferMatrix, StateVec, PROPAGATION_TOL,
};
use crate::noise::NoiseSpec;
use crate::rng::{Domain, Substreams};
use crate::stats::{compensated_sum, sample_variance};

#[derive(Debug, Clone)]
pub struct RBConfig {
    pub n_qubits: usize,
    pub noise: NoiseSpec,
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    pub reuse_count: u64,
    pub rho: StateVec,
    pub effect: EffectVec,
    pub seed: u64,
}

impl RBConfig {
    pub fn validate(&self) -> Result<()> {
        crate::liouville::check_qubits(self.n_qubits)?;
        self.noise.validate(self.n_qubits)?;
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(Error::InvalidConfig("lengths must be a non-empty list of positive integers".into()));
        }
        if self.lengths.len() > Substreams::MAX_OUTER as usize {
            return Err(Error::InvalidConfig("too many lengths".into()));
        }
        if self.sequences_per_length == 0 || self.sequences_per_length > u32::MAX as usize {
            return Err(Error::InvalidConfig("sequences per length must be in 1..=2^32-1".into()));
        }
        if self.reuse_count == 0 {
            return Err(Error::InvalidConfig("reuse count must be at least 1".into()));
        }
        if self.rho.n_qubits() != self.n_qubits || self.effect.n_qubits() != self.n_qubits {
            return Err(Error::MixedQubits);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceResult {
    pub m: usize,
    pub sequence_id: usize,
    /// Exact survival probability of the sampled sequence.
    pub survival: f64,
    /// Number of successful shots out of `R`.
    pub shots: u64,
}

/// Monte Carlo estimates of `A = E p`, `B = E p²` and the derived variance
/// coefficients `Y = A - B`, `Z = B - A²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatPair {
    pub a: f64,
    pub b: f64,
    pub y: f64,
    pub z: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub n_mc: usize,
}

impl StatPair {
    /// Builds the estimates from sampled survival probabilities.
    ///
    /// `Y` is accumulated as the mean of `p(1 - p)` and `Z` as the mean of
    /// `(p - Â)²`, which avoid cancellation. Values indistinguishable from
    /// zero at propagation precision (`Y ≤ 1e-12`, `√Z ≤ 1e-12`) are set to 0.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let a = compensated_sum(samples.iter().copied()) / nf;
        let squares: Vec<f64> = samples.iter().map(|p| p * p).collect();
        let b = compensated_sum(squares.iter().copied()) / nf;
        let mut y = compensated_sum(samples.iter().map(|p| p * (1.0 - p))) / nf;
        let mut z = compensated_sum(samples.iter().map(|p| (p - a) * (p - a))) / nf;
        if y <= PROPAGATION_TOL {
            y = 0.0;
        }
        if z.sqrt() <= PROPAGATION_TOL {
            z = 0.0;
        }
        StatPair {
            a,
            b,
            y,
            z,
            stderr_a: (sample_variance(samples) / nf).sqrt(),
            stderr_b: (sample_variance(&squares) / nf).sqrt(),
            n_mc: n,
        }
    }
}

/// `⟨Q| G_inv (Λ G_m) ⋯ (Λ G_1) |ρ⟩` with a noiseless inverse.
pub fn survival_probability(
    noise: &PauliTransferMatrix,
    sequence: &GateSequence,
    rho: &StateVec,
    effect: &EffectVec,
) -> Result<f64> {
    let n = sequence.n_qubits();
    if noise.n_qubits() != n || rho.n_qubits() != n || effect.n_qubits() != n {
        return Err(Error::MixedQubits);
    }
    let mut v = rho.coefficients().clone();
    let mut tmp = v.clone();
    for gate in sequence.gates() {
        gate.to_ptm().apply_into(&v, &mut tmp);
        noise.apply_into(&tmp, &mut v);
    }
    sequence.inverse_gate().to_ptm().apply_into(&v, &mut tmp);
    clamp_probability(effect.coefficients().dot(&tmp))
}

/// Number of successes in `r` Bernoulli(`p`) shots.
pub fn simulate_shots<R: Rng + ?Sized>(p: f64, r: u64, rng: &mut R) -> Result<u64> {
    let p = clamp_probability(p)?;
    let dist = Binomial::new(r, p).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Closed-form `A(m) = ((d Tr(Qρ) - Tr Q)/d) f^m + Tr(Q)/d`.
pub fn analytic_a(noise: &PauliTransferMatrix, m: usize, rho: &StateVec, effect: &EffectVec) -> Result<f64> {
    let d = hilbert_dim(noise.n_qubits()) as f64;
    let tr_q = effect.trace();
    let tr_q_rho = effect.overlap(rho)?;
    let f = noise.quality_parameter();
    Ok((d * tr_q_rho - tr_q) / d * f.powi(m as i32) + tr_q / d)
}

fn sample_survival(
    noise: &PauliTransferMatrix,
    streams: &Substreams,
    domain: Domain,
    outer: u32,
    index: u32,
    m: usize,
    rho: &StateVec,
    effect: &EffectVec,
) -> Result<f64> {
    let mut rng = streams.stream(domain, outer, index);
    let seq = GateSequence::sample(noise.n_qubits(), m, &mut rng)?;
    survival_probability(noise, &seq, rho, effect)
}

/// Survival probabilities of `n_mc` independent sequences of length `m`.
///
/// Sequence `k` uses substream `(Estimate, outer, k)`; choosing different
/// `outer` values gives disjoint sample sets.
pub fn sample_survivals(
    noise: &PauliTransferMatrix,
    m: usize,
    rho: &StateVec,
    effect: &EffectVec,
    n_mc: usize,
    streams: &Substreams,
    outer: u32,
) -> Result<Vec<f64>> {
    (0..n_mc as u32)
        .into_par_iter()
        .map(|k| sample_survival(noise, streams, Domain::Estimate, outer, k, m, rho, effect))
        .collect()
}

/// Monte Carlo estimate of `A`, `B`, `Y`, `Z` at length `m`.
pub fn estimate_ab(
    noise: &PauliTransferMatrix,
    m: usize,
    rho: &StateVec,
    effect: &EffectVec,
    n_mc: usize,
    streams: &Substreams,
) -> Result<StatPair> {
    if n_mc < 2 {
        return Err(Error::InvalidConfig("n_mc must be at least 2".into()));
    }
    let samples = sample_survivals(noise, m, rho, effect, n_mc, streams, 0)?;
    Ok(StatPair::from_samples(&samples))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub m: usize,
    /// `X̄_N = (1/N) Σ k_i / R`.
    pub mean: f64,
    /// Sample variance of the per-sequence `k_i / R`.
    pub variance: f64,
    pub n: usize,
    pub r: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub rows: Vec<DecayRow>,
    pub records: Vec<SequenceResult>,
}

/// Runs the protocol for every configured length.
///
/// Sequence `i` at length index `j` draws its gates from substream
/// `(Sequence, j, i)` and its shots from `(Shots, j, i)`.
pub fn run_rb(config: &RBConfig) -> Result<RunResult> {
    config.validate()?;
    let noise = config.noise.build(config.n_qubits)?;
    let streams = Substreams::new(config.seed);
    let mut rows = Vec::with_capacity(config.lengths.len());
    let mut records = Vec::with_capacity(config.lengths.len() * config.sequences_per_length);
    for (j, &m) in config.lengths.iter().enumerate() {
        let batch: Vec<SequenceResult> = (0..config.sequences_per_length as u32)
            .into_par_iter()
            .map(|i| {
                let survival = sample_survival(
                    &noise,
                    &streams,
                    Domain::Sequence,
                    j as u32,
                    i,
                    m,
                    &config.rho,
                    &config.effect,
                )?;
                let mut shot_rng = streams.stream(Domain::Shots, j as u32, i);
                let shots = simulate_shots(survival, config.reuse_count, &mut shot_rng)?;
                Ok(SequenceResult {
                    m,
                    sequence_id: i as usize,
                    survival,
                    shots,
                })
            })
            .collect::<Result<_>>()?;
        let means: Vec<f64> = batch
            .iter()
            .map(|s| s.shots as f64 / config.reuse_count as f64)
            .collect();
        rows.push(DecayRow {
            m,
            mean: compensated_sum(means.iter().copied()) / means.len() as f64,
            variance: sample_variance(&means),
            n: config.sequences_per_length,
            r: config.reuse_count,
        });
        records.extend(batch);
    }
    Ok(RunResult { rows, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn zeros(n: usize) -> (StateVec, EffectVec) {
        (StateVec::zeros(n).unwrap(), EffectVec::zeros(n).unwrap())
    }

    #[test]
    fn depolarizing_survival_is_sequence_independent() {
        let (rho, q) = zeros(1);
        let noise = NoiseSpec::GlobalDepolarizing { p: 0.9 }.build(1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for m in [1usize, 5, 13] {
            for _ in 0..20 {
                let seq = GateSequence::sample(1, m, &mut rng).unwrap();
                let p = survival_probability(&noise, &seq, &rho, &q).unwrap();
                assert!((p - (0.9f64.powi(m as i32) + 1.0) / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_two_qubit_sequences_survive() {
        let (rho, q) = zeros(2);
        let noise = PauliTransferMatrix::identity(2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let seq = GateSequence::sample(2, 20, &mut rng).unwrap();
        assert!((survival_probability(&noise, &seq, &rho, &q).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shots_edge_cases() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        assert_eq!(simulate_shots(0.0, 50, &mut rng).unwrap(), 0);
        assert_eq!(simulate_shots(1.0, 50, &mut rng).unwrap(), 50);
        let k = simulate_shots(0.5, 10_000, &mut rng).unwrap();
        assert!((4800..=5200).contains(&k));
    }

    #[test]
    fn analytic_a_values() {
        let (rho, q) = zeros(1);
        let dep = NoiseSpec::GlobalDepolarizing { p: 0.9 }.build(1).unwrap();
        assert!((analytic_a(&dep, 2, &rho, &q).unwrap() - 0.905).abs() < 1e-15);
        assert!((analytic_a(&dep, 0, &rho, &q).unwrap() - 1.0).abs() < 1e-15);
        let id = PauliTransferMatrix::identity(1).unwrap();
        assert!((analytic_a(&id, 7, &rho, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z_rotation_gives_deterministic_outcomes() {
        let (rho, q) = zeros(1);
        let noise = NoiseSpec::LocalZRotation { theta: std::f64::consts::FRAC_PI_2 }
            .build(1)
            .unwrap();
        let stats = estimate_ab(&noise, 6, &rho, &q, 500, &Substreams::new(5)).unwrap();
        assert_eq!(stats.y, 0.0);
        assert!(stats.z > 0.0);
    }

    #[test]
    fn depolarizing_statistics_have_zero_spread() {
        let (rho, q) = zeros(1);
        let noise = NoiseSpec::GlobalDepolarizing { p: 0.8 }.build(1).unwrap();
        let stats = estimate_ab(&noise, 20, &rho, &q, 200, &Substreams::new(6)).unwrap();
        assert_eq!(stats.z, 0.0);
        assert!(stats.y > 0.0);
    }

    #[test]
    fn run_is_deterministic_and_thread_independent() {
        let (rho, effect) = zeros(1);
        let config = RBConfig {
            n_qubits: 1,
            noise: NoiseSpec::damping_composite(0.99, 0.98),
            lengths: vec![1, 4, 9],
            sequences_per_length: 64,
            reuse_count: 10,
            rho,
            effect,
            seed: 77,
        };
        let a = run_rb(&config).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_rb(&config).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 3 * 64);
    }
}
