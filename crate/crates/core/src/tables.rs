//! CSV schemas and the bundled reference tables.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::RuntimeRecord;
use crate::error::{Error, Result};
use crate::optimizer::{optimize, variance_at, CostModel, OptReport, RStar};
use crate::rb::{DecayRow, StatPair};

/// `m,mean,variance,N,R`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCsvRow {
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: u64,
}

impl From<&DecayRow> for DecayCsvRow {
    fn from(row: &DecayRow) -> Self {
        Self {
            m: row.m,
            mean: row.mean,
            variance: row.variance,
            n: row.n,
            r: row.r,
        }
    }
}

/// `param,value,m,A,B,Y,Z,stderr_A,stderr_B,R_star,V_at_1,V_at_R0,V_at_Rstar`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "stderr_A")]
    pub stderr_a: f64,
    #[serde(rename = "stderr_B")]
    pub stderr_b: f64,
    /// Integer, `unbounded`, or `1*` when the continuous optimum is 0.
    #[serde(rename = "R_star")]
    pub r_star: String,
    #[serde(rename = "V_at_1")]
    pub v_at_1: f64,
    #[serde(rename = "V_at_R0")]
    pub v_at_r0: f64,
    #[serde(rename = "V_at_Rstar")]
    pub v_at_rstar: f64,
}

/// `R,N,T_seconds`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCsvRow {
    #[serde(rename = "R")]
    pub r: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
}

impl From<RuntimeCsvRow> for RuntimeRecord {
    fn from(row: RuntimeCsvRow) -> Self {
        RuntimeRecord {
            r: row.r,
            n: row.n,
            t_seconds: row.t_seconds,
        }
    }
}

/// `R,N,T,T0_pred,ratio`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    #[serde(rename = "R")]
    pub r: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "T0_pred")]
    pub t0_pred: f64,
    pub ratio: f64,
}

/// Reference model column of the runtime table: `R,N,T0_seconds,ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    #[serde(rename = "R")]
    pub r: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "T0_seconds")]
    pub t0_seconds: f64,
    pub ratio: f64,
}

/// Equal-budget allocation table: `R,N_prime,V,T0_printed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    #[serde(rename = "R")]
    pub r: u64,
    #[serde(rename = "N_prime")]
    pub n_prime: u64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "T0_printed")]
    pub t0_printed: f64,
}

pub fn read_csv<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_csv<T: Serialize, W: Write>(writer: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Token used in the `R_star` column.
pub fn r_star_token(report: &OptReport) -> String {
    match report.r_star {
        Some(RStar::Unbounded) => "unbounded".into(),
        Some(RStar::Finite(1)) if report.r_star_real == Some(0.0) => "1*".into(),
        Some(RStar::Finite(r)) => r.to_string(),
        None => String::new(),
    }
}

/// Builds a sweep row from estimated statistics, evaluating `T₀ 𝕍` at
/// `R = 1`, at `R₀` and at the optimum (its limit when unbounded).
pub fn sweep_row(param: &str, value: f64, m: usize, stats: &StatPair, cost: &CostModel) -> Result<SweepRow> {
    let report = optimize(stats.y, stats.z, cost)?;
    let per_unit = |r: u64| variance_at(stats.y, stats.z, cost, 1.0, r as f64);
    Ok(SweepRow {
        param: param.to_string(),
        value,
        m,
        a: stats.a,
        b: stats.b,
        y: stats.y,
        z: stats.z,
        stderr_a: stats.stderr_a,
        stderr_b: stats.stderr_b,
        r_star: r_star_token(&report),
        v_at_1: per_unit(1)?,
        v_at_r0: per_unit(report.r0)?,
        v_at_rstar: report.variance_at_optimum.ok_or(Error::NoConcreteCost)?,
    })
}

pub mod fixtures {
    use super::*;

    pub const TABLE1_RUNTIME: &str = include_str!("../fixtures/table1_runtime.csv");
    pub const TABLE1_MODEL: &str = include_str!("../fixtures/table1_model.csv");
    pub const TABLE2_ALLOCATION: &str = include_str!("../fixtures/table2_allocation.csv");

    /// Reported ladder coefficients `(C₁, C₂, R_c)`.
    pub const LADDER_COEFFICIENTS: (f64, f64, u64) = (0.0410, 0.1365, 100);
    /// Reported mean survival statistics `(A, B)` of the experiment.
    pub const EXPERIMENT_AB: (f64, f64) = (0.1482, 0.0248);
    /// Reported `(Y, Z)` as printed, to four decimals.
    pub const EXPERIMENT_YZ: (f64, f64) = (0.1234, 0.0028);
    pub const RC_CANDIDATES: [u64; 6] = [1, 10, 50, 100, 200, 500];

    pub fn runtime_records() -> Vec<RuntimeRecord> {
        read_csv::<RuntimeCsvRow, _>(TABLE1_RUNTIME.as_bytes())
            .expect("bundled runtime table parses")
            .into_iter()
            .map(Into::into)
            .collect()
    }

    pub fn model_rows() -> Vec<ModelRow> {
        read_csv(TABLE1_MODEL.as_bytes()).expect("bundled model table parses")
    }

    pub fn allocation_rows() -> Vec<AllocationRow> {
        read_csv(TABLE2_ALLOCATION.as_bytes()).expect("bundled allocation table parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        assert_eq!(fixtures::runtime_records().len(), 13);
        assert_eq!(fixtures::model_rows().len(), 13);
        assert_eq!(fixtures::allocation_rows().len(), 13);
    }

    #[test]
    fn sweep_rows_round_trip() {
        let rows = vec![SweepRow {
            param: "p2".into(),
            value: 0.985,
            m: 10,
            a: 0.1 + 0.2,
            b: 1.0 / 3.0,
            y: 1e-17,
            z: 0.0,
            stderr_a: 2.5e-5,
            stderr_b: f64::MIN_POSITIVE,
            r_star: "unbounded".into(),
            v_at_1: 1.0,
            v_at_r0: 0.5,
            v_at_rstar: 0.25,
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let back: Vec<SweepRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let mut again = Vec::new();
        write_csv(&mut again, &back).unwrap();
        assert_eq!(buf, again);
        assert!(String::from_utf8(buf).unwrap().starts_with(
            "param,value,m,A,B,Y,Z,stderr_A,stderr_B,R_star,V_at_1,V_at_R0,V_at_Rstar\n"
        ));
    }
}
