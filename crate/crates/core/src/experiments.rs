//! Threshold sweeps over `(n, ℓ)` grids.
//!
//! Every `(n, ℓ, trial)` job samples its own lift from a seed derived from
//! the sweep seed and the job coordinates, so rows do not depend on worker
//! count or scheduling. Rows go through one writer in job order and are
//! flushed as they arrive.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{builders_for, run_builder, target_order, BuildConfig, BuildOutcome, BuilderChoice, BuilderKind};
use crate::lift::{complete_base, LiftGraph};
use crate::par::{self, Execution};
use crate::rng::{derive_seed, tag};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllSpec {
    /// `ℓ = round(r · n)`, at least 1.
    Ratios(Vec<f64>),
    Absolute(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub ell: EllSpec,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub builder: BuilderChoice,
    pub paper_constants: bool,
    /// 0 means the global rayon pool.
    pub workers: usize,
    /// Jobs not started before this much time has passed are skipped.
    pub time_budget: Option<Duration>,
    /// When set, every success writes its lift and certificate here.
    pub certificate_dir: Option<PathBuf>,
    pub exec: Execution,
}

impl SweepConfig {
    pub fn new(n_values: Vec<usize>, ell: EllSpec, trials: usize) -> Self {
        SweepConfig {
            n_values,
            ell,
            trials,
            epsilon: 0.1,
            seed: 0,
            builder: BuilderChoice::Auto,
            paper_constants: false,
            workers: 0,
            time_budget: None,
            certificate_dir: None,
            exec: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let empty = match &self.ell {
            EllSpec::Ratios(r) => r.is_empty() || r.iter().any(|&x| !(x > 0.0 && x.is_finite())),
            EllSpec::Absolute(a) => a.is_empty() || a.contains(&0),
        };
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(SweepError::Config("n list must be non-empty and positive".into()));
        }
        if empty {
            return Err(SweepError::Config("ell list must be non-empty and positive".into()));
        }
        if self.trials == 0 {
            return Err(SweepError::Config("trials must be at least 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(SweepError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// `(n, ℓ)` cells in grid order, duplicates removed.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            let ells: Vec<usize> = match &self.ell {
                EllSpec::Ratios(r) => r.iter().map(|&x| ((x * n as f64).round() as usize).max(1)).collect(),
                EllSpec::Absolute(a) => a.clone(),
            };
            for ell in ells {
                if !out.contains(&(n, ell)) {
                    out.push((n, ell));
                }
            }
        }
        out
    }

    fn build_config(&self, seed: u64) -> BuildConfig {
        let mut cfg = if self.paper_constants {
            BuildConfig::paper(self.epsilon)
        } else {
            BuildConfig::with_epsilon(self.epsilon)
        };
        cfg.seed = seed;
        cfg
    }
}

/// One CSV row; columns in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub ell: usize,
    pub trial: usize,
    pub seed: u64,
    pub builder: String,
    pub success: bool,
    pub achieved_order: usize,
    pub target_order: f64,
    pub runtime_ms: f64,
    pub vertices_used: usize,
}

impl SweepRow {
    fn from_outcome(n: usize, ell: usize, trial: usize, seed: u64, out: &BuildOutcome, runtime: Duration) -> Self {
        let target = match out.builder {
            BuilderKind::Large => n as f64,
            BuilderKind::Small => target_order(n, ell).unwrap_or(0.0),
        };
        SweepRow {
            n,
            ell,
            trial,
            seed,
            builder: out.builder.to_string(),
            success: out.is_success(),
            achieved_order: out.achieved_order(),
            target_order: target,
            runtime_ms: (runtime.as_secs_f64() * 1e6).round() / 1e3,
            vertices_used: out.stats.total_vertices,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub ell: usize,
    pub builder: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_order: f64,
    /// Median of achieved / target over all trials, failures counting as 0.
    pub median_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub config: SweepConfig,
    pub rows: usize,
    pub skipped_jobs: usize,
    pub cells: Vec<CellSummary>,
    /// Per `n`: is the large builder's success rate non-decreasing in ℓ?
    pub large_success_monotone: BTreeMap<usize, bool>,
}

impl SweepSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialization cannot fail");
        s.push('\n');
        s
    }
}

pub fn job_seed(seed: u64, n: usize, ell: usize, trial: usize) -> u64 {
    derive_seed(seed, &[tag::SWEEP, n as u64, ell as u64, trial as u64])
}

fn run_job(
    cfg: &SweepConfig,
    n: usize,
    ell: usize,
    trial: usize,
) -> Vec<(SweepRow, Option<(LiftGraph, BuildOutcome)>)> {
    let seed = job_seed(cfg.seed, n, ell, trial);
    let base = complete_base(n).expect("n validated positive");
    let g = LiftGraph::sample_uniform_with(&base, ell, seed, Execution::Sequential).expect("ell validated positive");
    let build_cfg = cfg.build_config(seed);
    builders_for(cfg.builder, n, ell, cfg.epsilon)
        .into_iter()
        .map(|kind| {
            let start = Instant::now();
            let out = run_builder(kind, &g, &build_cfg);
            let row = SweepRow::from_outcome(n, ell, trial, seed, &out, start.elapsed());
            let keep = out.is_success() && cfg.certificate_dir.is_some();
            (row, keep.then(|| (g.clone(), out)))
        })
        .collect()
}

/// File stem for the artifacts of one successful row.
pub fn artifact_stem(row: &SweepRow) -> String {
    format!("n{}_ell{}_t{}_{}", row.n, row.ell, row.trial, row.builder)
}

/// Runs the grid, streaming CSV rows to `out` in job order.
pub fn run_sweep<W: Write + Send>(cfg: &SweepConfig, out: W) -> Result<SweepSummary, SweepError> {
    cfg.validate()?;
    if let Some(dir) = &cfg.certificate_dir {
        std::fs::create_dir_all(dir)?;
    }
    let jobs: Vec<(usize, usize, usize)> =
        cfg.cells().into_iter().flat_map(|(n, ell)| (0..cfg.trials).map(move |t| (n, ell, t))).collect();
    let start = Instant::now();
    let (tx, rx) = mpsc::channel::<(usize, Option<Vec<(SweepRow, Option<(LiftGraph, BuildOutcome)>)>>)>();

    let written = std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<(Vec<SweepRow>, usize), SweepError> {
            let mut csv = csv::Writer::from_writer(out);
            let mut pending = BTreeMap::new();
            let mut next = 0usize;
            let mut rows = Vec::new();
            let mut skipped = 0usize;
            for (k, result) in rx {
                pending.insert(k, result);
                while let Some(result) = pending.remove(&next) {
                    next += 1;
                    let Some(result) = result else {
                        skipped += 1;
                        continue;
                    };
                    for (row, artifact) in result {
                        if let (Some(dir), Some((g, outcome))) = (&cfg.certificate_dir, artifact) {
                            let stem = artifact_stem(&row);
                            std::fs::write(dir.join(format!("{stem}_lift.json")), g.to_json())?;
                            let cert = outcome.certificate.as_ref().expect("success rows carry a certificate");
                            std::fs::write(dir.join(format!("{stem}_cert.json")), cert.to_json())?;
                        }
                        csv.serialize(&row)?;
                        csv.flush()?;
                        rows.push(row);
                    }
                }
            }
            csv.flush()?;
            Ok((rows, skipped))
        });

        let worker = |k: usize| {
            let (n, ell, trial) = jobs[k];
            let over = cfg.time_budget.is_some_and(|b| start.elapsed() > b);
            let result = (!over).then(|| run_job(cfg, n, ell, trial));
            if over {
                log::warn!("time budget spent, skipping n = {n}, ell = {ell}, trial = {trial}");
            }
            // the writer only stops after every sender is gone
            let _ = tx.send((k, result));
        };
        par::with_workers(cfg.workers, || {
            par::map_indexed(cfg.exec, jobs.len(), worker);
        });
        drop(tx);
        writer.join().expect("writer thread panicked")
    })?;

    let (rows, skipped_jobs) = written;
    Ok(summarize(cfg, rows, skipped_jobs))
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

fn summarize(cfg: &SweepConfig, rows: Vec<SweepRow>, skipped_jobs: usize) -> SweepSummary {
    let mut groups: BTreeMap<(usize, usize, String), Vec<&SweepRow>> = BTreeMap::new();
    for r in &rows {
        groups.entry((r.n, r.ell, r.builder.clone())).or_default().push(r);
    }
    let cells: Vec<CellSummary> = groups
        .into_iter()
        .map(|((n, ell, builder), rs)| {
            let successes = rs.iter().filter(|r| r.success).count();
            let mut orders: Vec<f64> = rs.iter().map(|r| r.achieved_order as f64).collect();
            let mut ratios: Vec<f64> = rs
                .iter()
                .map(|r| if r.target_order > 0.0 { r.achieved_order as f64 / r.target_order } else { 0.0 })
                .collect();
            CellSummary {
                n,
                ell,
                builder,
                trials: rs.len(),
                successes,
                success_rate: successes as f64 / rs.len() as f64,
                median_order: median(&mut orders),
                median_ratio: median(&mut ratios),
            }
        })
        .collect();
    let mut large_success_monotone = BTreeMap::new();
    for &n in &cfg.n_values {
        let rates: Vec<f64> =
            cells.iter().filter(|c| c.n == n && c.builder == "large").map(|c| c.success_rate).collect();
        if !rates.is_empty() {
            let monotone = rates.windows(2).all(|w| w[0] <= w[1]);
            if !monotone {
                log::info!("large-builder success rate is not monotone in ell for n = {n}: {rates:?}");
            }
            large_success_monotone.insert(n, monotone);
        }
    }
    SweepSummary { config: cfg.clone(), rows: rows.len(), skipped_jobs, cells, large_success_monotone }
}

/// Reads rows back from CSV text.
pub fn read_rows(text: &str) -> Result<Vec<SweepRow>, SweepError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader.deserialize().map(|r| r.map_err(SweepError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::{verify_certificate, SubdivisionCertificate};

    fn small_grid() -> SweepConfig {
        let mut cfg = SweepConfig::new(vec![8, 10], EllSpec::Ratios(vec![1.5, 2.0]), 3);
        cfg.epsilon = 0.3;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn cells_from_ratios_and_absolute() {
        let cfg = small_grid();
        assert_eq!(cfg.cells(), vec![(8, 12), (8, 16), (10, 15), (10, 20)]);
        let abs = SweepConfig::new(vec![5], EllSpec::Absolute(vec![2, 3, 2]), 1);
        assert_eq!(abs.cells(), vec![(5, 2), (5, 3)]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small_grid();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig::new(vec![], EllSpec::Absolute(vec![2]), 1);
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig::new(vec![4], EllSpec::Ratios(vec![]), 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rows_are_ordered_and_reproducible() {
        let cfg = small_grid();
        let mut first = Vec::new();
        let summary = run_sweep(&cfg, &mut first).unwrap();
        assert_eq!(summary.rows, 12);
        let rows = read_rows(std::str::from_utf8(&first).unwrap()).unwrap();
        let coords: Vec<_> = rows.iter().map(|r| (r.n, r.ell, r.trial)).collect();
        let mut sorted = coords.clone();
        sorted.sort();
        assert_eq!(coords, sorted);
        for r in &rows {
            assert!(r.achieved_order <= r.n);
            assert_eq!(r.success, r.achieved_order > 0);
        }
        let mut seq = cfg.clone();
        seq.exec = Execution::Sequential;
        let mut second = Vec::new();
        run_sweep(&seq, &mut second).unwrap();
        let strip = |rs: Vec<SweepRow>| rs.into_iter().map(|r| SweepRow { runtime_ms: 0.0, ..r }).collect::<Vec<_>>();
        assert_eq!(strip(rows), strip(read_rows(std::str::from_utf8(&second).unwrap()).unwrap()));
        for c in &summary.cells {
            assert!((0.0..=1.0).contains(&c.success_rate));
        }
    }

    #[test]
    fn certificates_on_disk_reverify() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_grid();
        cfg.certificate_dir = Some(dir.path().to_path_buf());
        let mut csv = Vec::new();
        run_sweep(&cfg, &mut csv).unwrap();
        let rows = read_rows(std::str::from_utf8(&csv).unwrap()).unwrap();
        assert!(rows.iter().any(|r| r.success));
        for r in rows.iter().filter(|r| r.success) {
            let stem = artifact_stem(r);
            let g = LiftGraph::read_file(&dir.path().join(format!("{stem}_lift.json"))).unwrap();
            let cert = SubdivisionCertificate::read_file(&dir.path().join(format!("{stem}_cert.json"))).unwrap();
            assert!(verify_certificate(&g, &cert).pass);
            assert_eq!(cert.order(), r.achieved_order);
        }
    }

    #[test]
    fn zero_time_budget_skips_everything() {
        let mut cfg = small_grid();
        cfg.time_budget = Some(Duration::ZERO);
        let mut csv = Vec::new();
        let s = run_sweep(&cfg, &mut csv).unwrap();
        assert_eq!((s.rows, s.skipped_jobs), (0, 12));
    }
}
