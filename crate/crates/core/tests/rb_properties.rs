use rbreuse::liouville::{EffectVec, StateVec};
use rbreuse::noise::NoiseSpec;
use rbreuse::rb::{analytic_a, estimate_ab, run_rb, sample_survivals, RBConfig};
use rbreuse::rng::Substreams;

fn zeros(n: usize) -> (StateVec, EffectVec) {
    (StateVec::zeros(n).unwrap(), EffectVec::zeros(n).unwrap())
}

fn config(noise: NoiseSpec, lengths: Vec<usize>, n: usize, r: u64, seed: u64) -> RBConfig {
    let (rho, effect) = zeros(1);
    RBConfig {
        n_qubits: 1,
        noise,
        lengths,
        sequences_per_length: n,
        reuse_count: r,
        rho,
        effect,
        seed,
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn disjoint_substreams_give_identically_distributed_sequences() {
    let (rho, q) = zeros(1);
    let noise = NoiseSpec::damping_composite(0.99, 0.95).build(1).unwrap();
    let streams = Substreams::new(31);
    let a = sample_survivals(&noise, 8, &rho, &q, 3000, &streams, 1).unwrap();
    let b = sample_survivals(&noise, 8, &rho, &q, 3000, &streams, 2).unwrap();
    let d = ks_statistic(&a, &b);
    let n = a.len() as f64;
    let critical = (-(1e-3f64 / 2.0).ln() / 2.0).sqrt() * (2.0 / n).sqrt();
    assert!(d < critical, "D = {d}, critical = {critical}");
    assert_ne!(a, b);
}

#[test]
fn monte_carlo_a_agrees_with_closed_form() {
    let (rho, q) = zeros(1);
    let noise = NoiseSpec::damping_composite(0.999, 0.99).build(1).unwrap();
    let stats = estimate_ab(&noise, 10, &rho, &q, 50_000, &Substreams::new(32)).unwrap();
    let exact = analytic_a(&noise, 10, &rho, &q).unwrap();
    assert!((stats.a - exact).abs() <= 3.0 * stats.stderr_a, "{} vs {exact} ± {}", stats.a, stats.stderr_a);
}

#[test]
fn depolarizing_a_matches_sequence_average() {
    let (rho, q) = zeros(1);
    let noise = NoiseSpec::GlobalDepolarizing { p: 0.9 }.build(1).unwrap();
    let stats = estimate_ab(&noise, 2, &rho, &q, 100, &Substreams::new(33)).unwrap();
    assert!((stats.a - 0.905).abs() < 1e-12);
}

#[test]
fn analytic_a_decays_monotonically_to_asymptote() {
    let (rho, q) = zeros(2);
    let noise = NoiseSpec::damping_composite(0.97, 0.9).build(2).unwrap();
    let values: Vec<f64> = (0..200).map(|m| analytic_a(&noise, m, &rho, &q).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    assert!((values[199] - 0.25).abs() < 1e-3);
    assert!(values.iter().all(|&v| v > 0.25));
}

#[test]
fn noiseless_run_always_survives() {
    let result = run_rb(&config(NoiseSpec::GlobalDepolarizing { p: 1.0 }, vec![1, 7, 30], 50, 20, 34)).unwrap();
    assert!(result.rows.iter().all(|r| r.mean == 1.0 && r.variance == 0.0));
}

#[test]
fn depolarizing_run_tracks_closed_form() {
    let (n, r) = (2000usize, 100u64);
    let lengths = vec![1, 5, 10, 20, 40];
    let result = run_rb(&config(NoiseSpec::GlobalDepolarizing { p: 0.95 }, lengths, n, r, 35)).unwrap();
    for row in &result.rows {
        let p = (0.95f64.powi(row.m as i32) + 1.0) / 2.0;
        let se = (p * (1.0 - p) / (n as f64 * r as f64)).sqrt();
        assert!((row.mean - p).abs() <= 3.0 * se, "m = {}: {} vs {p}", row.m, row.mean);
    }
}

#[test]
fn same_seed_gives_identical_tables() {
    let c = config(NoiseSpec::damping_composite(0.99, 0.97), vec![2, 4], 100, 7, 36);
    assert_eq!(run_rb(&c).unwrap(), run_rb(&c).unwrap());
    let mut other = c.clone();
    other.seed = 37;
    assert_ne!(run_rb(&c).unwrap(), run_rb(&other).unwrap());
}

#[test]
fn shot_counts_are_within_range() {
    let result = run_rb(&config(NoiseSpec::damping_composite(0.9, 0.8), vec![3, 12], 300, 13, 38)).unwrap();
    for rec in &result.records {
        assert!(rec.shots <= 13);
        assert!((0.0..=1.0).contains(&rec.survival));
    }
}

#[test]
fn statistics_are_consistent_across_channel_grid() {
    let specs = [
        (1, "depolarizing(0.9)"),
        (2, "depolarizing(0.8)"),
        (1, "z_rotation(1.5707963267948966)"),
        (2, "z_rotation(0.3)"),
        (1, "z_rotation(1.0)"),
        (2, "swap_correlation(beta_12=0.7853981633974483)"),
        (2, "swap_correlation(beta_12=1.5707963267948966)"),
        (2, "compose(swap_correlation(beta_12=0.4), amplitude_damping(0.95))"),
        (2, "compose(depolarizing(0.95), swap_correlation(beta_12=0.2))"),
        (1, "amplitude_damping(0.8)"),
        (1, "phase_damping(0.6)"),
        (2, "compose(phase_damping(0.99), amplitude_damping(0.999))"),
    ];
    let streams = Substreams::new(39);
    for (n, text) in specs {
        let spec: NoiseSpec = text.parse().unwrap();
        let (rho, q) = zeros(n);
        let noise = spec.build(n).unwrap();
        for m in [1usize, 10] {
            let s = estimate_ab(&noise, m, &rho, &q, 2000, &streams).unwrap();
            assert!(0.0 <= s.b && s.b <= s.a + 1e-12 && s.a <= 1.0 + 1e-12, "{text}: {s:?}");
            assert!(s.y >= 0.0 && s.z >= 0.0, "{text}: {s:?}");
            assert!((s.y - (s.a - s.b)).abs() < 1e-9, "{text}: {s:?}");
            assert!((s.z - (s.b - s.a * s.a)).abs() < 1e-9, "{text}: {s:?}");
        }
    }
}
