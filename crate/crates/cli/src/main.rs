mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rbreuse::calibration::{evaluate_candidates, fit_ladder};
use rbreuse::error::Error;
use rbreuse::fit::{fit_decay, DecayPoint};
use rbreuse::liouville::{avg_fidelity, hilbert_dim};
use rbreuse::optimizer::{near_optimal, optimize, variance_at, CostModel, OptReport};
use rbreuse::rb::{estimate_ab, run_rb, RBConfig};
use rbreuse::rng::Substreams;
use rbreuse::tables::{
    read_csv, r_star_token, sweep_row, write_csv, CalibrationRow, DecayCsvRow, RuntimeCsvRow, SweepRow,
};
use rbreuse::verify::{run_all, VerifyOptions};

use config::RunConfig;

/// Randomized benchmarking with circuit reuse: simulation, cost calibration
/// and optimal reuse counts.
#[derive(Debug, Parser)]
#[command(name = "rbreuse", version, about)]
struct Cli {
    /// Seed for every random stream (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    /// Directory for output files (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal reuse count for given variance coefficients and cost model.
    Optimize(OptimizeArgs),
    /// Monte Carlo estimates of A, B, Y, Z (and optional decay tables) from a config file.
    Simulate {
        /// JSON configuration file.
        config: PathBuf,
    },
    /// Fit the ladder cost model to a runtime table (`R,N,T_seconds`).
    Calibrate {
        csv: PathBuf,
        /// Candidate batch sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 10, 50, 100, 200, 500])]
        rc_candidates: Vec<u64>,
    },
    /// Fit `a f^m + b` to a decay table (`m,mean,variance,N,R`).
    RbFit {
        csv: PathBuf,
        /// Number of qubits, used for the average fidelity and the default asymptote.
        #[arg(long, default_value_t = 1)]
        n_qubits: usize,
        /// Starting value for the asymptote `b` (defaults to 1/d).
        #[arg(long)]
        b0: Option<f64>,
    },
    /// Run the bundled reproduction checks.
    Verify {
        /// Sequences per point for the Monte Carlo trend check.
        #[arg(long, default_value_t = 50_000)]
        n_mc: usize,
    },
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("cost").required(true).args(["constant", "ladder", "bounded"])))]
struct OptimizeArgs {
    /// Within-circuit coefficient Y = A - B.
    #[arg(long = "Y", allow_negative_numbers = true)]
    y: f64,
    /// Between-circuit coefficient Z = B - A^2.
    #[arg(long = "Z", allow_negative_numbers = true)]
    z: f64,
    /// Constant cost t(R) = ALPHA + BETA R.
    #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"])]
    constant: Option<Vec<f64>>,
    /// Ladder cost t(R) = C1 ceil(R/RC) + C2.
    #[arg(long, num_args = 3, value_names = ["C1", "C2", "RC"])]
    ladder: Option<Vec<f64>>,
    /// Bounded cost ALPHA_L + BETA_L R <= t(R) <= ALPHA_U + BETA_U R.
    #[arg(long, num_args = 4, value_names = ["ALPHA_L", "BETA_L", "ALPHA_U", "BETA_U"])]
    bounded: Option<Vec<f64>>,
    /// Total budget; when given, variances are also reported for this T0.
    #[arg(long)]
    t0: Option<f64>,
}

enum Failure {
    Usage(String),
    Library(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Library(Error::Io(e))
    }
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::DegenerateStatistics => 3,
        Error::ProbabilityOutOfRange { .. }
        | Error::Completeness { .. }
        | Error::NotUnitary { .. }
        | Error::ComplexResidue { .. }
        | Error::InconsistentBounds { .. }
        | Error::FitNonConvergence { .. } => 4,
        _ => 2,
    }
}

struct Sink {
    format: Format,
    dir: Option<PathBuf>,
}

impl Sink {
    /// Writes `content` to `<dir>/<name>` or to stdout.
    fn emit(&self, name: &str, content: &str) -> Result<(), Failure> {
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), content)?;
            }
            None => print!("{content}"),
        }
        Ok(())
    }

    fn ext(&self) -> &'static str {
        match self.format {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, Failure> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn read_table<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(read_csv(file)?)
}

#[derive(Serialize)]
struct OptimizeOutput {
    r_star_real: Option<f64>,
    r_star: String,
    candidates: Vec<u64>,
    variance_at_optimum: Option<f64>,
    r0: u64,
    guarantee_factor: f64,
    interval: Option<(f64, f64)>,
    speedup_vs_one: Option<f64>,
    t0: Option<f64>,
    variance_at_optimum_for_t0: Option<f64>,
}

fn cost_from_args(args: &OptimizeArgs) -> Result<CostModel, Failure> {
    let cost = if let Some(v) = &args.constant {
        CostModel::Constant { alpha: v[0], beta: v[1] }
    } else if let Some(v) = &args.ladder {
        if v[2] < 1.0 || v[2].fract() != 0.0 {
            return Err(Failure::Usage(format!("RC must be a positive integer, got {}", v[2])));
        }
        CostModel::Ladder { c1: v[0], c2: v[1], rc: v[2] as u64 }
    } else if let Some(v) = &args.bounded {
        CostModel::Bounded { alpha_l: v[0], beta_l: v[1], alpha_u: v[2], beta_u: v[3] }
    } else {
        return Err(Failure::Usage("one of --constant, --ladder, --bounded is required".into()));
    };
    cost.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cost)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "n/a".into())
}

fn cmd_optimize(args: &OptimizeArgs, sink: &Sink) -> Result<(), Failure> {
    let cost = cost_from_args(args)?;
    let report: OptReport = match optimize(args.y, args.z, &cost) {
        Err(Error::DegenerateStatistics) => {
            let marker = "degenerate: Y = Z = 0, the variance vanishes for every R\n";
            let text = match sink.format {
                Format::Json => json_string(&serde_json::json!({ "status": "degenerate" })),
                Format::Csv => "status\ndegenerate\n".to_string(),
                Format::Text => marker.to_string(),
            };
            sink.emit(&format!("optimize.{}", sink.ext()), &text)?;
            return Err(Error::DegenerateStatistics.into());
        }
        other => other?,
    };
    let t0_variance = match (args.t0, &report.r_star) {
        (Some(t0), Some(rbreuse::optimizer::RStar::Finite(r))) => Some(variance_at(args.y, args.z, &cost, t0, *r as f64)?),
        (Some(t0), _) => report.variance_at_optimum.map(|v| v / t0),
        _ => None,
    };
    let out = OptimizeOutput {
        r_star_real: report.r_star_real,
        r_star: r_star_token(&report),
        candidates: report.candidates.clone(),
        variance_at_optimum: report.variance_at_optimum,
        r0: report.r0,
        guarantee_factor: report.guarantee_factor,
        interval: report.interval,
        speedup_vs_one: report.speedup_vs_one,
        t0: args.t0,
        variance_at_optimum_for_t0: t0_variance,
    };
    let text = match sink.format {
        Format::Json => json_string(&out),
        Format::Csv => {
            let (lo, hi) = out.interval.map(|(a, b)| (Some(a), Some(b))).unwrap_or((None, None));
            let cands: Vec<String> = out.candidates.iter().map(u64::to_string).collect();
            format!(
                "r_star_real,r_star,candidates,variance_at_optimum,r0,guarantee_factor,interval_lo,interval_hi,speedup_vs_one\n{},{},{},{},{},{},{},{},{}\n",
                opt_csv(out.r_star_real),
                out.r_star,
                cands.join(";"),
                opt_csv(out.variance_at_optimum),
                out.r0,
                out.guarantee_factor,
                opt_csv(lo),
                opt_csv(hi),
                opt_csv(out.speedup_vs_one)
            )
        }
        Format::Text => {
            let mut s = String::new();
            s += &format!("r_star_real         {}\n", fmt_opt(out.r_star_real));
            s += &format!("r_star              {}\n", if out.r_star.is_empty() { "n/a" } else { &out.r_star });
            if out.r_star == "1*" {
                s += "                    (continuous optimum is 0; R = 1 is the smallest feasible count)\n";
            }
            if !out.candidates.is_empty() {
                let c: Vec<String> = out.candidates.iter().map(u64::to_string).collect();
                s += &format!("candidates          {{{}}}\n", c.join(", "));
            }
            if let CostModel::Ladder { c1, c2, rc } = cost {
                if args.z > 0.0 {
                    s += &format!("ladder steps x      {:.4}\n", rbreuse::optimizer::ladder_ratio(args.y, args.z, c1, c2, rc));
                }
            }
            s += &format!("T0 * variance       {}\n", fmt_opt(out.variance_at_optimum));
            if let Some(v) = out.variance_at_optimum_for_t0 {
                s += &format!("variance at T0      {v}\n");
            }
            s += &format!("R0                  {}\n", out.r0);
            s += &format!("guarantee factor    {:.4}\n", out.guarantee_factor);
            if let Some((lo, hi)) = out.interval {
                s += &format!("optimal interval    [{lo:.4}, {hi:.4}]\n");
            }
            s += &format!("speedup vs R=1      {}\n", fmt_opt(out.speedup_vs_one));
            s
        }
    };
    sink.emit(&format!("optimize.{}", sink.ext()), &text)
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_simulate(path: &Path, seed_flag: Option<u64>, sink: &Sink) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let seed = seed_flag
        .or(cfg.protocol.seed)
        .ok_or_else(|| Failure::Usage("a seed is required (protocol.seed or --seed)".into()))?;
    let sink = Sink {
        format: sink.format,
        dir: sink.dir.clone().or_else(|| cfg.output.directory.clone()),
    };
    let n = cfg.protocol.n_qubits;
    let rho = cfg.rho()?;
    let effect = cfg.effect()?;
    let cost = cfg.cost.model();
    let streams = Substreams::new(seed);
    let points = cfg.points()?;
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut degenerate = false;
    for (k, (param, value, spec)) in points.iter().enumerate() {
        let noise = spec.build(n)?;
        for &m in &cfg.protocol.lengths {
            let stats = estimate_ab(&noise, m, &rho, &effect, cfg.protocol.n_mc, &streams)?;
            match sweep_row(param, *value, m, &stats, &cost) {
                Ok(row) => rows.push(row),
                Err(Error::DegenerateStatistics) => {
                    degenerate = true;
                    let (r0, _) = near_optimal(&cost)?;
                    rows.push(SweepRow {
                        param: param.clone(),
                        value: *value,
                        m,
                        a: stats.a,
                        b: stats.b,
                        y: stats.y,
                        z: stats.z,
                        stderr_a: stats.stderr_a,
                        stderr_b: stats.stderr_b,
                        r_star: "degenerate".into(),
                        v_at_1: 0.0,
                        v_at_r0: variance_at(0.0, 0.0, &cost, 1.0, r0 as f64)?,
                        v_at_rstar: 0.0,
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        if let (Some(sequences), Some(reuse)) = (cfg.protocol.sequences, cfg.protocol.reuse) {
            let run = run_rb(&RBConfig {
                n_qubits: n,
                noise: spec.clone(),
                lengths: cfg.protocol.lengths.clone(),
                sequences_per_length: sequences,
                reuse_count: reuse,
                rho: rho.clone(),
                effect: effect.clone(),
                seed: streams.child_seed(k as u32),
            })?;
            let decay: Vec<DecayCsvRow> = run.rows.iter().map(DecayCsvRow::from).collect();
            let name = if cfg.sweep.is_some() { format!("decay_{k:03}") } else { "decay".into() };
            match sink.format {
                Format::Json => sink.emit(&format!("{name}.json"), &json_string(&decay))?,
                _ => sink.emit(&format!("{name}.csv"), &csv_string(&decay)?)?,
            }
        }
    }
    match sink.format {
        Format::Json => sink.emit("sweep.json", &json_string(&rows))?,
        _ => sink.emit("sweep.csv", &csv_string(&rows)?)?,
    }
    if cfg.output.svg {
        let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let chart = svg::line_chart(
            &format!("T0 x variance, m = {:?}", cfg.protocol.lengths),
            &rows.first().map(|r| r.param.clone()).unwrap_or_default(),
            "T0 x variance",
            &xs,
            &[
                svg::Series { label: "R = 1", values: rows.iter().map(|r| r.v_at_1).collect() },
                svg::Series { label: "R = R0", values: rows.iter().map(|r| r.v_at_r0).collect() },
                svg::Series { label: "R = R*", values: rows.iter().map(|r| r.v_at_rstar).collect() },
            ],
        );
        match &sink.dir {
            Some(_) => sink.emit("sweep.svg", &chart)?,
            None => eprintln!("note: SVG output needs an output directory (--out or output.directory)"),
        }
    }
    if degenerate {
        eprintln!("degenerate statistics (Y = Z = 0) at one or more sweep points");
        return Err(Error::DegenerateStatistics.into());
    }
    Ok(())
}

#[derive(Serialize)]
struct CalibrationOutput {
    c1: f64,
    c2: f64,
    rc: u64,
    residual: f64,
    r0: u64,
    guarantee_factor: f64,
    rows: Vec<CalibrationRow>,
}

fn cmd_calibrate(path: &Path, candidates: &[u64], sink: &Sink) -> Result<(), Failure> {
    let records: Vec<_> = read_table::<RuntimeCsvRow>(path)?.into_iter().map(Into::into).collect::<Vec<_>>();
    let fit = match fit_ladder(&records, candidates) {
        Ok(fit) => fit,
        Err(e) => {
            for o in evaluate_candidates(&records, candidates) {
                eprintln!("rc={:<6} c1={:<12.6} c2={:<12.6} residual={:.4} {}", o.rc, o.c1, o.c2, o.residual, o.note.unwrap_or_default());
            }
            return Err(e.into());
        }
    };
    let (r0, factor) = near_optimal(&fit.ladder_bounds())?;
    let rows: Vec<CalibrationRow> = records
        .iter()
        .zip(&fit.predicted)
        .map(|(r, &t0)| CalibrationRow { r: r.r, n: r.n, t: r.t_seconds, t0_pred: t0, ratio: t0 / r.t_seconds })
        .collect();
    let summary = format!(
        "C1 = {:.6} s\nC2 = {:.6} s\nRc = {}\nresidual (rms of T0/T - 1) = {:.6}\nR0 = {r0} ({:.4}-optimal)\n",
        fit.c1, fit.c2, fit.rc, fit.residual, factor
    );
    match sink.format {
        Format::Json => sink.emit(
            "calibration.json",
            &json_string(&CalibrationOutput {
                c1: fit.c1,
                c2: fit.c2,
                rc: fit.rc,
                residual: fit.residual,
                r0,
                guarantee_factor: factor,
                rows,
            }),
        ),
        Format::Csv => {
            eprint!("{summary}");
            sink.emit("calibration.csv", &csv_string(&rows)?)
        }
        Format::Text => {
            let mut s = summary;
            s += "\n";
            s += &csv_string(&rows)?;
            sink.emit("calibration.txt", &s)
        }
    }
}

#[derive(Serialize)]
struct FitOutput {
    a: f64,
    f: f64,
    b: f64,
    stderr_a: f64,
    stderr_f: f64,
    stderr_b: f64,
    f_avg: f64,
    at_upper_bound: bool,
    iterations: usize,
}

fn cmd_rb_fit(path: &Path, n_qubits: usize, b0: Option<f64>, sink: &Sink) -> Result<(), Failure> {
    let rows: Vec<DecayCsvRow> = read_table(path)?;
    let use_variance = rows.iter().all(|r| r.variance > 0.0);
    let points: Vec<DecayPoint> = rows
        .iter()
        .map(|r| DecayPoint {
            m: r.m as f64,
            value: r.mean,
            weight: if use_variance { r.n as f64 / r.variance } else { 1.0 },
        })
        .collect();
    rbreuse::liouville::PauliTransferMatrix::identity(n_qubits)?;
    let b0 = b0.unwrap_or(1.0 / hilbert_dim(n_qubits) as f64);
    let fit = match fit_decay(&points, b0) {
        Ok(fit) => fit,
        Err(Error::FitNonConvergence { iterations, best }) => {
            eprintln!("fit did not converge after {iterations} iterations; best iterate a={} f={} b={}", best.a, best.f, best.b);
            return Err(Error::FitNonConvergence { iterations, best }.into());
        }
        Err(e) => return Err(e.into()),
    };
    if fit.at_upper_bound {
        eprintln!("warning: f is at its upper bound 1; a and b are not separately identifiable");
    }
    let out = FitOutput {
        a: fit.a,
        f: fit.f,
        b: fit.b,
        stderr_a: fit.stderr_a,
        stderr_f: fit.stderr_f,
        stderr_b: fit.stderr_b,
        f_avg: avg_fidelity(fit.f, n_qubits),
        at_upper_bound: fit.at_upper_bound,
        iterations: fit.iterations,
    };
    let text = match sink.format {
        Format::Json => json_string(&out),
        Format::Csv => csv_string(&[&out])?,
        Format::Text => format!(
            "a      {} ± {}\nf      {} ± {}\nb      {} ± {}\nF_avg  {}\n",
            out.a, out.stderr_a, out.f, out.stderr_f, out.b, out.stderr_b, out.f_avg
        ),
    };
    sink.emit(&format!("rb_fit.{}", sink.ext()), &text)
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    passed: bool,
    detail: String,
}

fn cmd_verify(seed: Option<u64>, n_mc: usize, sink: &Sink) -> Result<(), Failure> {
    let mut options = VerifyOptions { n_mc, ..VerifyOptions::default() };
    if let Some(seed) = seed {
        options.seed = seed;
    }
    let outcomes = run_all(&options);
    let rows: Vec<CheckRow> = outcomes
        .iter()
        .map(|o| CheckRow { check: o.name, passed: o.passed, detail: o.detail.clone() })
        .collect();
    let text = match sink.format {
        Format::Json => json_string(&rows),
        Format::Csv => csv_string(&rows)?,
        Format::Text => {
            let width = rows.iter().map(|r| r.check.len()).max().unwrap_or(0);
            rows.iter()
                .map(|r| format!("{}  {:<width$}  {}\n", if r.passed { "PASS" } else { "FAIL" }, r.check, r.detail))
                .collect()
        }
    };
    sink.emit(&format!("verify.{}", sink.ext()), &text)?;
    if outcomes.iter().all(|o| o.passed) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let sink = Sink { format: cli.format, dir: cli.out.clone() };
    match &cli.command {
        Command::Optimize(args) => cmd_optimize(args, &sink),
        Command::Simulate { config } => cmd_simulate(config, cli.seed, &sink),
        Command::Calibrate { csv, rc_candidates } => cmd_calibrate(csv, rc_candidates, &sink),
        Command::RbFit { csv, n_qubits, b0 } => cmd_rb_fit(csv, *n_qubits, *b0, &sink),
        Command::Verify { n_mc } => cmd_verify(cli.seed, *n_mc, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(5)
        }
    }
}
