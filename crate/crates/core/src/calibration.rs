//! Ladder cost model `T₀(N, R) = C₁ N ⌈R/R_c⌉ + C₂ N` fitted to measured runtimes.

use crate::error::{Error, Result};
use crate::optimizer::{ladder_bounds, CostModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeRecord {
    pub r: u64,
    pub n: u64,
    pub t_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderFit {
    /// Seconds per batch of `rc` shots.
    pub c1: f64,
    /// Seconds per circuit.
    pub c2: f64,
    pub rc: u64,
    /// Root-mean-square of `T₀/T − 1` over the fitted records.
    pub residual: f64,
    /// `T₀` for each fitted record, in input order.
    pub predicted: Vec<f64>,
}

/// Outcome of one batch-size candidate, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOutcome {
    pub rc: u64,
    pub c1: f64,
    pub c2: f64,
    pub residual: f64,
    pub accepted: bool,
    pub note: Option<String>,
}

fn steps(r: u64, rc: u64) -> u64 {
    r.div_ceil(rc)
}

impl LadderFit {
    /// A fit with known coefficients and no associated records.
    pub fn from_coefficients(c1: f64, c2: f64, rc: u64) -> Result<Self> {
        CostModel::Ladder { c1, c2, rc }.validate()?;
        Ok(Self {
            c1,
            c2,
            rc,
            residual: 0.0,
            predicted: Vec::new(),
        })
    }

    /// Per-circuit cost `t(R)`.
    pub fn per_circuit(&self, r: u64) -> f64 {
        self.c1 * steps(r, self.rc) as f64 + self.c2
    }

    pub fn predict_t0(&self, n: u64, r: u64) -> f64 {
        n as f64 * self.per_circuit(r)
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel::Ladder {
            c1: self.c1,
            c2: self.c2,
            rc: self.rc,
        }
    }

    pub fn ladder_bounds(&self) -> CostModel {
        ladder_bounds(self.c1, self.c2, self.rc)
    }

    /// Number of sequences affordable within `budget` seconds, rounded down.
    pub fn allocate_sequences(&self, budget: f64, r: u64) -> Result<Allocation> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::InvalidConfig(format!("budget must be positive, got {budget}")));
        }
        let per = self.per_circuit(r);
        // Allow for representation error when the budget is an exact multiple.
        let n = (budget / per * (1.0 + 1e-12)).floor() as u64;
        let warning = (n == 0).then(|| {
            format!("budget {budget} s is below the cost of one circuit ({per} s) at R = {r}")
        });
        Ok(Allocation { n_prime: n, warning })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub n_prime: u64,
    pub warning: Option<String>,
}

fn ols(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn residual_of(records: &[RuntimeRecord], c1: f64, c2: f64, rc: u64) -> (f64, Vec<f64>) {
    let predicted: Vec<f64> = records
        .iter()
        .map(|rec| rec.n as f64 * (c1 * steps(rec.r, rc) as f64 + c2))
        .collect();
    let ms = records
        .iter()
        .zip(&predicted)
        .map(|(rec, p)| (p / rec.t_seconds - 1.0).powi(2))
        .sum::<f64>()
        / records.len() as f64;
    (ms.sqrt(), predicted)
}

/// Evaluates every candidate batch size without selecting one.
pub fn evaluate_candidates(records: &[RuntimeRecord], rc_candidates: &[u64]) -> Vec<CandidateOutcome> {
    let y: Vec<f64> = records.iter().map(|r| r.t_seconds / r.n as f64).collect();
    rc_candidates
        .iter()
        .map(|&rc| {
            if rc == 0 {
                return CandidateOutcome {
                    rc,
                    c1: f64::NAN,
                    c2: f64::NAN,
                    residual: f64::INFINITY,
                    accepted: false,
                    note: Some("batch size must be at least 1".into()),
                };
            }
            let x: Vec<f64> = records.iter().map(|r| steps(r.r, rc) as f64).collect();
            match ols(&x, &y) {
                None => CandidateOutcome {
                    rc,
                    c1: f64::NAN,
                    c2: f64::NAN,
                    residual: f64::INFINITY,
                    accepted: false,
                    note: Some("all records fall in one ladder step".into()),
                },
                Some((c1, c2)) => {
                    let (residual, _) = residual_of(records, c1, c2, rc);
                    let accepted = c1 > 0.0 && c2 > 0.0;
                    CandidateOutcome {
                        rc,
                        c1,
                        c2,
                        residual,
                        accepted,
                        note: (!accepted).then(|| "non-positive coefficient".to_string()),
                    }
                }
            }
        })
        .collect()
}

/// Least-squares fit of `T/N = C₁ ⌈R/R_c⌉ + C₂` for each candidate `R_c`,
/// keeping the candidate with the smallest relative residual.
pub fn fit_ladder(records: &[RuntimeRecord], rc_candidates: &[u64]) -> Result<LadderFit> {
    if records.len() < 3 {
        return Err(Error::Calibration(format!(
            "need at least 3 runtime records, got {}",
            records.len()
        )));
    }
    if let Some(bad) = records
        .iter()
        .find(|r| r.r == 0 || r.n == 0 || !(r.t_seconds.is_finite() && r.t_seconds > 0.0))
    {
        return Err(Error::Calibration(format!("invalid record {bad:?}")));
    }
    let outcomes = evaluate_candidates(records, rc_candidates);
    let best = outcomes
        .iter()
        .filter(|o| o.accepted)
        .min_by(|a, b| a.residual.total_cmp(&b.residual));
    match best {
        Some(o) => {
            let (residual, predicted) = residual_of(records, o.c1, o.c2, o.rc);
            Ok(LadderFit {
                c1: o.c1,
                c2: o.c2,
                rc: o.rc,
                residual,
                predicted,
            })
        }
        None => {
            let diag: Vec<String> = outcomes
                .iter()
                .map(|o| format!("rc={}: {}", o.rc, o.note.as_deref().unwrap_or("rejected")))
                .collect();
            Err(Error::Calibration(format!(
                "no candidate batch size gives positive coefficients ({})",
                diag.join("; ")
            )))
        }
    }
}
