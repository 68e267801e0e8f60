//! The `run`, `sweep`, `validate` and `fit` subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use tcm_core::diagnostics::{
    check_energy_envelope, check_x_monotone, decay_fit, CsvSink, DecayFit, DiagnosticsRecord,
    EnvelopeReport, FanOut, FieldId, JsonlSink, MonotonicityReport,
};
use tcm_core::inequality_lab::{InequalityReport, Lab, LabConfig};
use tcm_core::integrator::run;
use tcm_core::model::ModelParams;
use tcm_core::TcmError;

use crate::config::{Cell, RunConfig, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::initial::make_initial_data;

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub lambda: f64,
    pub delta1: u8,
    pub eta: f64,
    pub kappa: f64,
    pub mu0: f64,
}

impl Derived {
    pub fn of(p: &ModelParams) -> Self {
        Self {
            lambda: p.lambda,
            delta1: p.delta1,
            eta: p.eta,
            kappa: p.kappa,
            mu0: p.mu0(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub derived: Derived,
    pub code_version: &'static str,
    pub started_at: f64,
    pub finished_at: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdict {
    pub verdict: &'static str,
    pub sup_norm_sum: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandVerdict {
    pub verdict: &'static str,
    pub samples: usize,
    /// Times at which either band failed.
    pub violations: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FitEntry {
    Ok(DecayFitRow),
    Failed { field: FieldId, gamma: f64, error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFitRow {
    #[serde(flatten)]
    pub fit: DecayFit,
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub samples: usize,
    pub steps: usize,
    pub final_time: f64,
    pub stability: StabilityVerdict,
    pub x_monotonicity: MonotonicityReport,
    pub x_verdict: &'static str,
    pub energy_envelope: EnvelopeReport,
    pub bands: BandVerdict,
    pub fits: Vec<FitEntry>,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Checks `(3/4)A² ≤ Σ ≤ (5/4)A²` and `½X² ≤ Σ' ≤ 2X²` on every record.
pub fn band_verdict(records: &[DiagnosticsRecord]) -> BandVerdict {
    let slack = 1.0 + 1e-12;
    let violations: Vec<f64> = records
        .iter()
        .filter(|r| {
            r.functionals.iter().any(|f| {
                let (a2, x2) = (f.a * f.a, f.x * f.x);
                !(0.75 * a2 <= f.sigma_a * slack
                    && f.sigma_a <= 1.25 * a2 * slack
                    && 0.5 * x2 <= f.sigma_x * slack
                    && f.sigma_x <= 2.0 * x2 * slack)
            })
        })
        .map(|r| r.time)
        .collect();
    BandVerdict {
        verdict: verdict(violations.is_empty()),
        samples: records.len(),
        violations,
    }
}

/// Post-processes the records of one run.
pub fn summarize(config: &RunConfig, params: &ModelParams, records: &[DiagnosticsRecord], steps: usize) -> RunSummary {
    let threshold = 2.0 * config.epsilon;
    let sup = records.iter().map(|r| r.stability_sum).fold(0.0, f64::max);
    let s = params.s;
    let x = check_x_monotone(records, s);
    let x_verdict = verdict(x.passed());
    let window = config.window();
    let fits = config
        .diagnostics()
        .norms
        .iter()
        .map(|n| {
            let series: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| r.norm(n.field, n.gamma).map(|v| (r.time, v)))
                .collect();
            match decay_fit(&series, window, n.field, n.gamma, params.is_damped()) {
                Ok(fit) => FitEntry::Ok(DecayFitRow {
                    difference: fit.difference(),
                    fit,
                }),
                Err(e) => FitEntry::Failed {
                    field: n.field,
                    gamma: n.gamma,
                    error: e.to_string(),
                },
            }
        })
        .collect();
    RunSummary {
        samples: records.len(),
        steps,
        final_time: records.last().map_or(0.0, |r| r.time),
        stability: StabilityVerdict {
            verdict: verdict(sup < threshold),
            sup_norm_sum: sup,
            threshold,
        },
        x_monotonicity: x,
        x_verdict,
        energy_envelope: check_energy_envelope(records, s, s),
        bands: band_verdict(records),
        fits,
    }
}

/// Result of a completed run, kept in memory for callers that post-process.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
    pub summary: RunSummary,
}

/// Runs one configuration into `out_dir`.
pub fn execute_run(config: &RunConfig, out_dir: &Path, quiet: bool) -> CliResult<RunArtifacts> {
    config.validate()?;
    let params = config.model_params()?;
    let diagnostics = config.diagnostics();
    std::fs::create_dir_all(out_dir)?;

    let mut manifest = RunManifest {
        config: config.clone(),
        derived: Derived::of(&params),
        code_version: env!("CARGO_PKG_VERSION"),
        started_at: unix_seconds(),
        finished_at: None,
        status: "running".into(),
    };
    let manifest_path = out_dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;

    let initial = make_initial_data(config)?;
    let mut csv = CsvSink::new(BufWriter::new(File::create(out_dir.join("diagnostics.csv"))?));
    let mut jsonl = JsonlSink::new(BufWriter::new(File::create(out_dir.join("diagnostics.jsonl"))?));
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let outcome = {
        let mut sink = FanOut(vec![&mut csv, &mut jsonl, &mut records]);
        run(&initial, &params, &config.stepper, &diagnostics, &mut sink)
    };

    manifest.finished_at = Some(unix_seconds());
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            manifest.status = match &e {
                TcmError::BlowUp { time, field } => format!("blow-up in {field} at t = {time}"),
                other => format!("error: {other}"),
            };
            write_json(&manifest_path, &manifest)?;
            return Err(e.into());
        }
    };
    manifest.status = "completed".into();
    write_json(&manifest_path, &manifest)?;

    let summary = summarize(config, &params, &records, outcome.steps);
    write_json(&out_dir.join("summary.json"), &summary)?;
    if !quiet {
        eprintln!(
            "run: {} samples, {} steps, stability {}, X² {}, bands {}",
            summary.samples, summary.steps, summary.stability.verdict, summary.x_verdict, summary.bands.verdict
        );
    }
    Ok(RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        records,
        summary,
    })
}

pub fn cmd_run(config_path: &Path, out: Option<&Path>, seed: Option<u64>, quiet: bool) -> CliResult<RunArtifacts> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let dir = config.resolve_out_dir(out);
    execute_run(&config, &dir, quiet)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub cell: Cell,
    pub status: String,
    pub exit_code: i32,
    pub fits: Vec<FitEntry>,
}

fn exponent_columns(config: &RunConfig) -> Vec<String> {
    config
        .diagnostics()
        .norms
        .iter()
        .flat_map(|n| {
            let c = tcm_core::diagnostics::norm_column(n.field, n.gamma);
            [format!("{c}_exponent"), format!("{c}_theory"), format!("{c}_r2")]
        })
        .collect()
}

fn write_aggregate(path: &Path, base: &RunConfig, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["cell", "alpha", "beta", "epsilon", "s", "n", "status"]
        .map(String::from)
        .to_vec();
    header.extend(exponent_columns(base));
    w.write_record(&header)?;
    for row in rows {
        let c = &row.cell;
        let mut rec = vec![
            c.index.to_string(),
            c.alpha.to_string(),
            c.beta.to_string(),
            c.epsilon.to_string(),
            c.s.to_string(),
            c.n.to_string(),
            row.status.clone(),
        ];
        for f in &row.fits {
            match f {
                FitEntry::Ok(r) => rec.extend([
                    format!("{:e}", r.fit.exponent),
                    format!("{:e}", r.fit.theory_exponent),
                    format!("{:e}", r.fit.r_squared),
                ]),
                FitEntry::Failed { .. } => rec.extend(["".into(), "".into(), "".into()]),
            }
        }
        rec.resize(header.len(), String::new());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub aggregate: PathBuf,
}

impl SweepOutcome {
    /// Exit code of the first failed cell, or 0.
    pub fn exit_code(&self) -> i32 {
        self.rows.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0)
    }
}

/// Runs every cell of the product on a bounded pool and writes `aggregate.csv`.
pub fn execute_sweep(sweep: &SweepConfig, out_dir: &Path, threads: Option<usize>, quiet: bool) -> CliResult<SweepOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let cells = sweep.cells();
    let workers = threads.or(sweep.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let cfg = sweep.cell_config(cell);
                let dir = out_dir.join(cell.dir_name());
                match execute_run(&cfg, &dir, true) {
                    Ok(art) => SweepRow {
                        cell: *cell,
                        status: "ok".into(),
                        exit_code: 0,
                        fits: art.summary.fits,
                    },
                    Err(e) => SweepRow {
                        cell: *cell,
                        status: e.to_string(),
                        exit_code: e.exit_code(),
                        fits: Vec::new(),
                    },
                }
            })
            .collect()
    });
    let aggregate = out_dir.join("aggregate.csv");
    write_aggregate(&aggregate, &sweep.base, &rows)?;
    if !quiet {
        let failed = rows.iter().filter(|r| r.exit_code != 0).count();
        eprintln!("sweep: {} cells, {} failed", rows.len(), failed);
    }
    Ok(SweepOutcome { rows, aggregate })
}

pub fn cmd_sweep(path: &Path, out: Option<&Path>, seed: Option<u64>, threads: Option<usize>, quiet: bool) -> CliResult<SweepOutcome> {
    let mut sweep = SweepConfig::load(path)?;
    if let Some(seed) = seed {
        sweep.base.seed = seed;
    }
    let dir = sweep.base.resolve_out_dir(out);
    execute_sweep(&sweep, &dir, threads, quiet)
}

/// Fixed-width table of the inequality reports.
pub fn format_reports(reports: &[InequalityReport]) -> String {
    let mut s = format!(
        "{:<22} {:>7} {:>12} {:>12} {:>8} {:>6}\n",
        "inequality", "trials", "worst", "median", "stable", "exact"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<22} {:>7} {:>12.6e} {:>12.6e} {:>8} {:>6}\n",
            r.name,
            r.trials,
            r.worst_ratio,
            r.median_ratio,
            r.stable,
            if r.exact_bound.is_some() { verdict(r.exact_ok()) } else { "-" },
        ));
    }
    s
}

pub fn execute_validate(config: LabConfig, out: Option<&Path>, quiet: bool) -> CliResult<Vec<InequalityReport>> {
    let lab = Lab::new(config)?;
    let reports = lab.check_all();
    if !quiet {
        print!("{}", format_reports(&reports));
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("validate.json"), &reports)?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Unstable(failed.join(", ")))
    }
}

/// Reads `(t, value)` for one column of a CSV trajectory.
pub fn read_series(path: &Path, column: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("column `{name}` not found in {}", path.display())))
    };
    let (it, iv) = (find("t")?, find(column)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Io(format!("bad number `{}`: {e}", &rec[i])))
        };
        out.push((parse(it)?, parse(iv)?));
    }
    Ok(out)
}

pub fn cmd_fit(
    trajectory: &Path,
    field: FieldId,
    gamma: f64,
    window: Option<(f64, f64)>,
    damped: bool,
) -> CliResult<DecayFit> {
    let column = tcm_core::diagnostics::norm_column(field, gamma);
    let series = read_series(trajectory, &column)?;
    let window = match window {
        Some(w) => w,
        None => {
            let t_end = series.last().map_or(0.0, |p| p.0);
            tcm_core::diagnostics::default_window(t_end)
        }
    };
    Ok(decay_fit(&series, window, field, gamma, damped)?)
}
