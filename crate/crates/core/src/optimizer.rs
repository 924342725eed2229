//! Choosing the reuse count `R` under a fixed total budget `T₀ = N t(R)`.
//!
//! With `N` sequences of `R` shots each the estimator variance is
//! `(t(R)/T₀)(Y/R + Z)`. Every variance in this module is reported per unit
//! budget, i.e. multiplied by `T₀`, unless a budget is passed explicitly.
//!
//! Under bounded cost `α_l + β_l R ≤ t(R) ≤ α_u + β_u R`, any `R` that can be
//! optimal for some admissible `t` satisfies
//! `(α_l + β_l R)(Y/R + Z) ≤ (√(α_u Z) + √(β_u Y))²`, which rearranges to
//! `β_l Z R² − b R + α_l Y ≤ 0` with
//! `b = (√(α_u Z) + √(β_u Y))² − (α_l Z + β_l Y)`. The interval endpoints are
//! the roots `(b ∓ √(b² − 4 β_l Z α_l Y)) / (2 β_l Z)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// `t(R) = α + β R`.
    Constant { alpha: f64, beta: f64 },
    /// `t(R) = C₁ ⌈R/R_c⌉ + C₂`.
    Ladder { c1: f64, c2: f64, rc: u64 },
    /// Only `α_l + β_l R ≤ t(R) ≤ α_u + β_u R` is known.
    Bounded {
        alpha_l: f64,
        beta_l: f64,
        alpha_u: f64,
        beta_u: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidCost(format!("{name} must be positive and finite, got {v}")))
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostModel::Constant { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            CostModel::Ladder { c1, c2, rc } => {
                positive("c1", c1)?;
                positive("c2", c2)?;
                if rc == 0 {
                    return Err(Error::InvalidCost("rc must be at least 1".into()));
                }
                Ok(())
            }
            CostModel::Bounded {
                alpha_l,
                beta_l,
                alpha_u,
                beta_u,
            } => {
                positive("alpha_l", alpha_l)?;
                positive("beta_l", beta_l)?;
                positive("alpha_u", alpha_u)?;
                positive("beta_u", beta_u)?;
                if alpha_l > alpha_u || beta_l > beta_u {
                    return Err(Error::InvalidCost(
                        "lower bounds must not exceed upper bounds".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Per-circuit cost at `r` shots.
    pub fn t(&self, r: f64) -> Result<f64> {
        match *self {
            CostModel::Constant { alpha, beta } => Ok(alpha + beta * r),
            CostModel::Ladder { c1, c2, rc } => Ok(c1 * (r / rc as f64).ceil() + c2),
            CostModel::Bounded { .. } => Err(Error::NoConcreteCost),
        }
    }
}

fn check_stats(y: f64, z: f64) -> Result<()> {
    if !(y.is_finite() && z.is_finite() && y >= 0.0 && z >= 0.0) {
        return Err(Error::InvalidStatistics(format!(
            "Y and Z must be finite and non-negative, got Y = {y}, Z = {z}"
        )));
    }
    if y == 0.0 && z == 0.0 {
        return Err(Error::DegenerateStatistics);
    }
    Ok(())
}

/// `(t(R)/T₀)(Y/R + Z)`.
pub fn variance_at(y: f64, z: f64, cost: &CostModel, t0: f64, r: f64) -> Result<f64> {
    if r < 1.0 {
        return Err(Error::InvalidConfig(format!("R must be at least 1, got {r}")));
    }
    Ok(cost.t(r)? / t0 * (y / r + z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RStar {
    Finite(u64),
    /// Variance keeps decreasing as `R` grows (`Z = 0`).
    Unbounded,
}

impl std::fmt::Display for RStar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RStar::Finite(r) => write!(f, "{r}"),
            RStar::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptReport {
    /// Minimiser of the continuous relaxation, before rounding or clamping
    /// (`0` when `Y = 0`, infinite when `Z = 0`). `None` for bounded cost.
    pub r_star_real: Option<f64>,
    pub r_star: Option<RStar>,
    /// Integer candidates compared to obtain `r_star`.
    pub candidates: Vec<u64>,
    /// `T₀ 𝕍` at `r_star` (the limit when unbounded).
    pub variance_at_optimum: Option<f64>,
    pub r0: u64,
    pub guarantee_factor: f64,
    pub interval: Option<(f64, f64)>,
    /// `𝕍(1) / 𝕍(r_star)`.
    pub speedup_vs_one: Option<f64>,
}

fn pick(cost: &CostModel, y: f64, z: f64, candidates: &[u64]) -> (u64, f64) {
    let mut best = (candidates[0], f64::INFINITY);
    for &r in candidates {
        let v = cost.t(r as f64).expect("concrete cost") * (y / r as f64 + z);
        if v < best.1 {
            best = (r, v);
        }
    }
    best
}

/// Exact optimum for `t(R) = α + β R`.
pub fn optimal_r_constant(y: f64, z: f64, alpha: f64, beta: f64) -> Result<OptReport> {
    let cost = CostModel::Constant { alpha, beta };
    cost.validate()?;
    check_stats(y, z)?;
    let (r0, guarantee_factor) = near_optimal_unchecked(alpha, beta, alpha, beta);
    let v1 = (alpha + beta) * (y + z);
    if z == 0.0 {
        let limit = beta * y;
        return Ok(OptReport {
            r_star_real: Some(f64::INFINITY),
            r_star: Some(RStar::Unbounded),
            candidates: vec![],
            variance_at_optimum: Some(limit),
            r0,
            guarantee_factor,
            interval: None,
            speedup_vs_one: Some(v1 / limit),
        });
    }
    let x = (alpha * y / (beta * z)).sqrt();
    let mut candidates = vec![(x.floor() as u64).max(1), (x.ceil() as u64).max(1)];
    candidates.dedup();
    let (r, v) = pick(&cost, y, z, &candidates);
    Ok(OptReport {
        r_star_real: Some(x),
        r_star: Some(RStar::Finite(r)),
        candidates,
        variance_at_optimum: Some(v),
        r0,
        guarantee_factor,
        interval: None,
        speedup_vs_one: Some(v1 / v),
    })
}

/// `x = √(C₂ Y / (C₁ Z R_c))`, the optimal number of ladder steps.
pub fn ladder_ratio(y: f64, z: f64, c1: f64, c2: f64, rc: u64) -> f64 {
    (c2 * y / (c1 * z * rc as f64)).sqrt()
}

/// Exact optimum for `t(R) = C₁ ⌈R/R_c⌉ + C₂`.
pub fn optimal_r_ladder(y: f64, z: f64, c1: f64, c2: f64, rc: u64) -> Result<OptReport> {
    let cost = CostModel::Ladder { c1, c2, rc };
    cost.validate()?;
    check_stats(y, z)?;
    let bounds = ladder_bounds(c1, c2, rc);
    let (r0, guarantee_factor) = near_optimal(&bounds)?;
    let interval = if y > 0.0 && z > 0.0 {
        Some(optimal_interval_bounded(y, z, &bounds)?)
    } else {
        None
    };
    let v1 = (c1 + c2) * (y + z);
    if z == 0.0 {
        let limit = c1 * y / rc as f64;
        return Ok(OptReport {
            r_star_real: Some(f64::INFINITY),
            r_star: Some(RStar::Unbounded),
            candidates: vec![],
            variance_at_optimum: Some(limit),
            r0,
            guarantee_factor,
            interval,
            speedup_vs_one: Some(v1 / limit),
        });
    }
    let x = ladder_ratio(y, z, c1, c2, rc);
    let mut candidates = vec![
        (x.floor() as u64).max(1) * rc,
        (x.ceil() as u64).max(1) * rc,
    ];
    candidates.dedup();
    let (r, v) = pick(&cost, y, z, &candidates);
    Ok(OptReport {
        r_star_real: Some(x * rc as f64),
        r_star: Some(RStar::Finite(r)),
        candidates,
        variance_at_optimum: Some(v),
        r0,
        guarantee_factor,
        interval,
        speedup_vs_one: Some(v1 / v),
    })
}

/// Linear bounds sandwiching the ladder cost:
/// `C₂ + (C₁/R_c) R ≤ t(R) ≤ C₂ + C₁(1 − 1/R_c) + (C₁/R_c) R`.
pub fn ladder_bounds(c1: f64, c2: f64, rc: u64) -> CostModel {
    let slope = c1 / rc as f64;
    CostModel::Bounded {
        alpha_l: c2,
        beta_l: slope,
        alpha_u: c2 + c1 * (1.0 - 1.0 / rc as f64),
        beta_u: slope,
    }
}

fn near_optimal_unchecked(alpha_l: f64, beta_l: f64, alpha_u: f64, beta_u: f64) -> (u64, f64) {
    let r0 = ((alpha_l / beta_l).round() as u64).max(1);
    (r0, alpha_u / alpha_l + beta_u / beta_l)
}

/// `R₀ = round(α_l/β_l)` (at least 1) and its guarantee factor
/// `α_u/α_l + β_u/β_l`, which holds exactly at the real point `α_l/β_l`.
pub fn near_optimal(cost: &CostModel) -> Result<(u64, f64)> {
    cost.validate()?;
    match *cost {
        CostModel::Bounded {
            alpha_l,
            beta_l,
            alpha_u,
            beta_u,
        } => Ok(near_optimal_unchecked(alpha_l, beta_l, alpha_u, beta_u)),
        CostModel::Constant { alpha, beta } => Ok(near_optimal_unchecked(alpha, beta, alpha, beta)),
        CostModel::Ladder { c1, c2, rc } => near_optimal(&ladder_bounds(c1, c2, rc)),
    }
}

/// Guarantee factor at an integer `R` under bounded cost:
/// `max(α_u/(R β_l) + β_u/β_l, α_u/α_l + β_u R/α_l)`.
pub fn integer_guarantee_factor(cost: &CostModel, r: u64) -> Result<f64> {
    cost.validate()?;
    let CostModel::Bounded {
        alpha_l,
        beta_l,
        alpha_u,
        beta_u,
    } = *cost
    else {
        return Err(Error::InvalidCost("expected a bounded cost model".into()));
    };
    let r = r.max(1) as f64;
    Ok((alpha_u / (r * beta_l) + beta_u / beta_l).max(alpha_u / alpha_l + beta_u * r / alpha_l))
}

/// Interval of reuse counts that can be optimal for some admissible `t`.
///
/// `Z = 0` gives `[α_l Y / b, ∞)` and `Y = 0` gives `[0, b / (β_l Z)]`.
pub fn optimal_interval_bounded(y: f64, z: f64, cost: &CostModel) -> Result<(f64, f64)> {
    cost.validate()?;
    check_stats(y, z)?;
    let CostModel::Bounded {
        alpha_l,
        beta_l,
        alpha_u,
        beta_u,
    } = *cost
    else {
        return Err(Error::InvalidCost("expected a bounded cost model".into()));
    };
    let a = beta_l * z;
    let c = alpha_l * y;
    let cross = (y * z).sqrt();
    let b = (alpha_u - alpha_l) * z + (beta_u - beta_l) * y + 2.0 * (alpha_u * beta_u).sqrt() * cross;
    if z == 0.0 {
        return Ok(if b > 0.0 { (c / b, f64::INFINITY) } else { (f64::INFINITY, f64::INFINITY) });
    }
    if y == 0.0 {
        return Ok((0.0, b.max(0.0) / a));
    }
    // b² − 4ac = (b − 2√(ac))(b + 2√(ac)), with the first factor formed
    // without cancellation.
    let root_ac = (alpha_l * beta_l).sqrt() * cross;
    let gap = (alpha_u - alpha_l) * z
        + (beta_u - beta_l) * y
        + 2.0 * (alpha_u * beta_u - alpha_l * beta_l) / ((alpha_u * beta_u).sqrt() + (alpha_l * beta_l).sqrt()) * cross;
    let disc = gap * (b + 2.0 * root_ac);
    if disc < -1e-12 * (b * b).max(f64::MIN_POSITIVE) {
        return Err(Error::InconsistentBounds { discriminant: disc });
    }
    let q = b + disc.max(0.0).sqrt();
    Ok((2.0 * c / q, q / (2.0 * a)))
}

/// `𝕍(1)/𝕍(R*) = (α + β)(Y + Z) / (√(βY) + √(αZ))²` for constant cost.
pub fn speedup_vs_one(y: f64, z: f64, alpha: f64, beta: f64) -> f64 {
    (alpha + beta) * (y + z) / ((beta * y).sqrt() + (alpha * z).sqrt()).powi(2)
}

/// Exhaustive argmin of `(t(R)/T₀)(Y/R + Z)` over `1..=r_max`, ties to the smaller `R`.
pub fn grid_search_r<F: Fn(u64) -> f64>(y: f64, z: f64, t: F, t0: f64, r_max: u64) -> u64 {
    let mut best = (1, f64::INFINITY);
    for r in 1..=r_max.max(1) {
        let v = t(r) / t0 * (y / r as f64 + z);
        if v < best.1 {
            best = (r, v);
        }
    }
    best.0
}

/// Dispatches on the cost model; bounded models yield `R₀`, its factor and
/// the interval only.
pub fn optimize(y: f64, z: f64, cost: &CostModel) -> Result<OptReport> {
    match *cost {
        CostModel::Constant { alpha, beta } => optimal_r_constant(y, z, alpha, beta),
        CostModel::Ladder { c1, c2, rc } => optimal_r_ladder(y, z, c1, c2, rc),
        CostModel::Bounded { .. } => {
            let (r0, guarantee_factor) = near_optimal(cost)?;
            let interval = optimal_interval_bounded(y, z, cost)?;
            Ok(OptReport {
                r_star_real: None,
                r_star: None,
                candidates: vec![],
                variance_at_optimum: None,
                r0,
                guarantee_factor,
                interval: Some(interval),
                speedup_vs_one: None,
            })
        }
    }
}
