//! Weighted least-squares fit of the decay model `a f^m + b`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const REL_STEP_TOL: f64 = 1e-10;
const F_MIN: f64 = 1e-9;
const SINGULAR_RCOND: f64 = 1e-12;
const VALUE_SLACK: f64 = 1e-9;

/// One observation: mean survival `value` at length `m` with weight `weight`
/// (typically the inverse variance of the mean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub m: f64,
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub a: f64,
    pub f: f64,
    pub b: f64,
    pub stderr_a: f64,
    pub stderr_f: f64,
    pub stderr_b: f64,
    /// Covariance of `(a, f, b)`, scaled by the reduced chi-square.
    pub covariance: [[f64; 3]; 3],
    /// Weighted residual sum of squares.
    pub rss: f64,
    /// `f` sits at 1, where `a` and `b` are not separately identifiable.
    pub at_upper_bound: bool,
    pub iterations: usize,
}

fn model(theta: &Vector3<f64>, m: f64) -> f64 {
    theta[0] * theta[1].powf(m) + theta[2]
}

fn weighted_rss(points: &[DecayPoint], theta: &Vector3<f64>) -> f64 {
    points
        .iter()
        .map(|p| p.weight * (p.value - model(theta, p.m)).powi(2))
        .sum()
}

/// `(JᵀWJ, JᵀWr)` at `theta`.
fn normal_equations(points: &[DecayPoint], theta: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for p in points {
        let fm = theta[1].powf(p.m);
        let dfm = if p.m == 0.0 {
            0.0
        } else {
            p.m * theta[1].powf(p.m - 1.0)
        };
        let j = Vector3::new(fm, theta[0] * dfm, 1.0);
        let r = p.value - model(theta, p.m);
        jtj += p.weight * j * j.transpose();
        jtr += p.weight * r * j;
    }
    (jtj, jtr)
}

fn validate(points: &[DecayPoint]) -> Result<()> {
    for p in points {
        if !(p.m.is_finite() && p.m >= 0.0) {
            return Err(Error::FitInput(format!("length {} is not a non-negative number", p.m)));
        }
        if !(p.value.is_finite() && (-VALUE_SLACK..=1.0 + VALUE_SLACK).contains(&p.value)) {
            return Err(Error::FitInput(format!("value {} at m = {} outside [0, 1]", p.value, p.m)));
        }
        if !(p.weight.is_finite() && p.weight > 0.0) {
            return Err(Error::FitInput(format!("weight {} at m = {} must be positive", p.weight, p.m)));
        }
    }
    let mut ms: Vec<f64> = points.iter().map(|p| p.m).collect();
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    if ms.len() < 3 {
        return Err(Error::FitInput(format!(
            "need at least 3 distinct lengths, got {}",
            ms.len()
        )));
    }
    Ok(())
}

/// Log-linear starting point using the asymptote guess `b0`.
fn initial_guess(points: &[DecayPoint], b0: f64) -> Vector3<f64> {
    let above: Vec<&DecayPoint> = points.iter().filter(|p| p.value - b0 > 1e-12).collect();
    let distinct = {
        let mut ms: Vec<f64> = above.iter().map(|p| p.m).collect();
        ms.sort_by(f64::total_cmp);
        ms.dedup();
        ms.len()
    };
    if distinct >= 2 {
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &above {
            let y = (p.value - b0).ln();
            sw += p.weight;
            sx += p.weight * p.m;
            sy += p.weight * y;
            sxx += p.weight * p.m * p.m;
            sxy += p.weight * p.m * y;
        }
        let den = sw * sxx - sx * sx;
        if den.abs() > 0.0 {
            let slope = (sw * sxy - sx * sy) / den;
            let intercept = (sy - slope * sx) / sw;
            let f = slope.exp().clamp(F_MIN, 1.0);
            return Vector3::new(intercept.exp(), f, b0);
        }
    }
    let hi = points.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let lo = points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    Vector3::new(hi - lo, 0.9, lo)
}

fn finish(points: &[DecayPoint], theta: Vector3<f64>, iterations: usize) -> DecayFit {
    let rss = weighted_rss(points, &theta);
    let (jtj, _) = normal_equations(points, &theta);
    let dof = points.len().saturating_sub(3).max(1) as f64;
    let scale = rss / dof;
    let svd = jtj.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let covariance = if smax > 0.0 && smin / smax > SINGULAR_RCOND {
        jtj.try_inverse().map(|inv| inv * scale)
    } else {
        None
    };
    let (covariance, stderr) = match covariance {
        Some(c) => {
            let mut arr = [[0.0; 3]; 3];
            for (i, row) in arr.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = c[(i, j)];
                }
            }
            (arr, [c[(0, 0)].max(0.0).sqrt(), c[(1, 1)].max(0.0).sqrt(), c[(2, 2)].max(0.0).sqrt()])
        }
        None => ([[f64::INFINITY; 3]; 3], [f64::INFINITY; 3]),
    };
    DecayFit {
        a: theta[0],
        f: theta[1],
        b: theta[2],
        stderr_a: stderr[0],
        stderr_f: stderr[1],
        stderr_b: stderr[2],
        covariance,
        rss,
        at_upper_bound: theta[1] >= 1.0,
        iterations,
    }
}

/// Fits `value ≈ a f^m + b` with `f` restricted to `(0, 1]`.
///
/// `b0_hint` seeds the asymptote; `Tr(Q)/d` is the natural choice for
/// unital noise.
pub fn fit_decay(points: &[DecayPoint], b0_hint: f64) -> Result<DecayFit> {
    validate(points)?;
    let mut theta = initial_guess(points, b0_hint);
    let mut cost = weighted_rss(points, &theta);
    let mut lambda = 1e-3;
    for iteration in 1..=MAX_ITERATIONS {
        if cost == 0.0 {
            return Ok(finish(points, theta, iteration - 1));
        }
        let (jtj, jtr) = normal_equations(points, &theta);
        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = theta + step;
            trial[1] = trial[1].clamp(F_MIN, 1.0);
            let trial_cost = weighted_rss(points, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let change = (trial - theta).norm();
                let size = theta.norm().max(1e-300);
                theta = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if change <= REL_STEP_TOL * size {
                    return Ok(finish(points, theta, iteration));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No damped step reduces the cost: a local minimum within rounding.
            return Ok(finish(points, theta, iteration));
        }
    }
    Err(Error::FitNonConvergence {
        iterations: MAX_ITERATIONS,
        best: Box::new(finish(points, theta, MAX_ITERATIONS)),
    })
}
