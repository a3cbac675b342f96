//! Sequential-`K` timing harness for the three eigensolvers.
//!
//! For every trial and method the smallest eigenpairs are computed for
//! `K = 2..=K_max` in order: incremental grows one basis, Lanczos-IO grows one
//! factorization, batch starts from scratch at each `K`. Everything runs on the
//! calling thread.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use specinc_core::eigen::batch_smallest_with_stats;
use specinc_core::linalg::mix_seed;
use specinc_core::{
    dense_oracle, init_basis, next_eigenpair, LanczosConfig, LanczosIoSolver, LaplacianOperator, SolverConfig, SymmetricOperator,
    Variant, WeightedGraph,
};
use thiserror::Error;

/// Graphs up to this size are validated against the dense oracle during a sweep.
pub const VALIDATION_LIMIT: usize = 200;
/// Largest eigenvalue deviation tolerated before a series is aborted.
pub const AGREEMENT_TOLERANCE: f64 = 1e-6;
/// Slack in the incremental matvec growth check.
pub const GROWTH_SLACK: usize = 20;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("K_max = {k_max} exceeds n = {n}")]
    KTooLarge { k_max: usize, n: usize },
    #[error("benchmarks run single-threaded; got threads = {0}")]
    Parallelism(usize),
    #[error("no z_aug values given")]
    EmptyZaug,
    #[error("no methods given")]
    NoMethods,
    #[error(transparent)]
    Graph(#[from] specinc_core::GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Incremental,
    LanczosIo,
    Batch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Incremental, Method::LanczosIo, Method::Batch];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Incremental => "incremental",
            Method::LanczosIo => "lanczos-io",
            Method::Batch => "batch",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incremental" => Ok(Method::Incremental),
            "lanczos-io" => Ok(Method::LanczosIo),
            "batch" => Ok(Method::Batch),
            other => Err(format!("unknown method `{other}` (incremental, lanczos-io, batch)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    /// Eigenvalues drifted from the dense oracle; the rest of the series was skipped.
    Aborted,
    Error,
}

/// One timed cell: a method at one `K` in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: Method,
    pub tag: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub step_seconds: f64,
    pub cumulative_seconds: f64,
    pub matvecs: usize,
    /// Matvecs since the start of the series (for batch, the same as `matvecs`:
    /// nothing carries over between `K`).
    pub cumulative_matvecs: usize,
    pub stored_vectors: usize,
    pub z_aug: Option<usize>,
    /// Largest `|λ_i − reference_i|` over the `K` values; the reference is the
    /// dense oracle for small graphs, the first listed method otherwise.
    pub deviation: Option<f64>,
    pub relative_to_batch: Option<f64>,
    pub status: CellStatus,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub variant: Variant,
    pub solver: SolverConfig,
    pub lanczos: LanczosConfig,
    pub seed: u64,
    /// Must be 1.
    pub threads: usize,
    pub warmup: bool,
    pub tag: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Unnormalized,
            solver: SolverConfig::default(),
            lanczos: LanczosConfig::default(),
            seed: 0,
            threads: 1,
            warmup: true,
            tag: String::from("graph"),
        }
    }
}

struct Cell {
    k: usize,
    seconds: f64,
    matvecs: usize,
    stored: usize,
    values: Vec<f64>,
}

enum SeriesEnd {
    Done,
    Aborted(usize, f64),
    Failed(usize, String),
}

/// Runs one method through `K = 2..=k_max`, stopping early on error or oracle drift.
fn run_series(
    op: &LaplacianOperator,
    method: Method,
    k_max: usize,
    seed: u64,
    cfg: &SweepConfig,
    oracle: Option<&[f64]>,
) -> (Vec<Cell>, SeriesEnd) {
    let solver = SolverConfig { seed, ..cfg.solver };
    let mut cells = Vec::new();
    let check = |values: &[f64]| oracle.map(|o| max_deviation(values, o));
    match method {
        Method::Incremental => {
            let mut basis = init_basis(op);
            let workspace = solver.workspace(1, op.dim()) + 1;
            for k in 2..=k_max {
                let clock = Instant::now();
                let before = basis.steps().len();
                while basis.len() < k {
                    if let Err(e) = next_eigenpair(&mut basis, &solver) {
                        return (cells, SeriesEnd::Failed(k, e.to_string()));
                    }
                }
                let seconds = clock.elapsed().as_secs_f64();
                let matvecs = basis.steps()[before..].iter().map(|s| s.matvecs).sum();
                let values = basis.values()[..k].to_vec();
                let dev = check(&values);
                cells.push(Cell { k, seconds, matvecs, stored: k + workspace, values });
                if let Some(d) = dev.filter(|&d| d > AGREEMENT_TOLERANCE) {
                    return (cells, SeriesEnd::Aborted(k, d));
                }
            }
        }
        Method::LanczosIo => {
            let lcfg = LanczosConfig { seed, ..cfg.lanczos };
            let clock = Instant::now();
            let mut solver = LanczosIoSolver::new(op, &lcfg);
            let mut setup = clock.elapsed().as_secs_f64();
            for k in 2..=k_max {
                let clock = Instant::now();
                let before = solver.state().matvecs();
                let pairs = match solver.smallest(k) {
                    Ok(p) => p,
                    Err(e) => return (cells, SeriesEnd::Failed(k, e.to_string())),
                };
                let seconds = clock.elapsed().as_secs_f64() + std::mem::take(&mut setup);
                let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
                let dev = check(&values);
                cells.push(Cell {
                    k,
                    seconds,
                    matvecs: solver.state().matvecs() - before,
                    stored: solver.state().stored_vectors(),
                    values,
                });
                if let Some(d) = dev.filter(|&d| d > AGREEMENT_TOLERANCE) {
                    return (cells, SeriesEnd::Aborted(k, d));
                }
            }
        }
        Method::Batch => {
            for k in 2..=k_max {
                let clock = Instant::now();
                let (pairs, stats) = match batch_smallest_with_stats(op, k, &solver) {
                    Ok(r) => r,
                    Err(e) => return (cells, SeriesEnd::Failed(k, e.to_string())),
                };
                let seconds = clock.elapsed().as_secs_f64();
                let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
                let dev = check(&values);
                cells.push(Cell {
                    k,
                    seconds,
                    matvecs: stats.matvecs,
                    stored: stats.stored_vectors,
                    values,
                });
                if let Some(d) = dev.filter(|&d| d > AGREEMENT_TOLERANCE) {
                    return (cells, SeriesEnd::Aborted(k, d));
                }
            }
        }
    }
    (cells, SeriesEnd::Done)
}

fn max_deviation(values: &[f64], reference: &[f64]) -> f64 {
    values
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn check_preconditions(graph: &WeightedGraph, k_max: usize, cfg: &SweepConfig) -> Result<(), BenchError> {
    if cfg.threads != 1 {
        return Err(BenchError::Parallelism(cfg.threads));
    }
    if k_max > graph.n() {
        return Err(BenchError::KTooLarge { k_max, n: graph.n() });
    }
    Ok(())
}

struct Series {
    method: Method,
    cells: Vec<Cell>,
    end: SeriesEnd,
}

fn trial_records(op: &LaplacianOperator, series: Vec<Series>, trial: usize, seed: u64, cfg: &SweepConfig, z_aug: Option<usize>, oracle: Option<&[f64]>) -> Vec<BenchRecord> {
    let reference: Option<Vec<f64>> = oracle
        .map(<[f64]>::to_vec)
        .or_else(|| series.first().and_then(|s| s.cells.last()).map(|c| c.values.clone()));
    let mut out = Vec::new();
    for s in series {
        let mut cumulative = 0.0;
        let mut total_matvecs = 0;
        for c in &s.cells {
            cumulative += c.seconds;
            total_matvecs = if s.method == Method::Batch { c.matvecs } else { total_matvecs + c.matvecs };
            out.push(BenchRecord {
                method: s.method,
                tag: cfg.tag.clone(),
                n: op.dim(),
                k: c.k,
                trial,
                seed,
                step_seconds: c.seconds,
                cumulative_seconds: cumulative,
                matvecs: c.matvecs,
                cumulative_matvecs: total_matvecs,
                stored_vectors: c.stored,
                z_aug,
                deviation: reference.as_ref().map(|r| max_deviation(&c.values, r)),
                relative_to_batch: None,
                status: CellStatus::Ok,
                message: String::new(),
            });
        }
        let (k, status, message) = match s.end {
            SeriesEnd::Done => continue,
            SeriesEnd::Aborted(k, d) => (k, CellStatus::Aborted, format!("deviation {d:.3e} from dense oracle")),
            SeriesEnd::Failed(k, m) => (k, CellStatus::Error, m),
        };
        if let Some(last) = out.last_mut().filter(|r| r.method == s.method && r.k == k) {
            last.status = status;
            last.message = message;
        } else {
            out.push(BenchRecord {
                method: s.method,
                tag: cfg.tag.clone(),
                n: op.dim(),
                k,
                trial,
                seed,
                step_seconds: 0.0,
                cumulative_seconds: cumulative,
                matvecs: 0,
                cumulative_matvecs: total_matvecs,
                stored_vectors: 0,
                z_aug,
                deviation: None,
                relative_to_batch: None,
                status,
                message,
            });
        }
    }
    out
}

fn prepare(graph: &WeightedGraph, cfg: &SweepConfig) -> Result<(LaplacianOperator, Option<Vec<f64>>), BenchError> {
    let op = LaplacianOperator::new(graph.clone(), cfg.variant)?;
    let oracle = (graph.n() <= VALIDATION_LIMIT)
        .then(|| dense_oracle(&op).ok())
        .flatten()
        .map(|pairs| pairs.into_iter().map(|p| p.value).collect());
    Ok((op, oracle))
}

/// Times every method over `K = 2..=k_max` for `trials` seeded trials.
pub fn run_sweep(
    graph: &WeightedGraph,
    methods: &[Method],
    k_max: usize,
    trials: usize,
    cfg: &SweepConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    check_preconditions(graph, k_max, cfg)?;
    if methods.is_empty() {
        return Err(BenchError::NoMethods);
    }
    let (op, oracle) = prepare(graph, cfg)?;
    let oracle = oracle.as_deref();
    if cfg.warmup {
        for &m in methods {
            let _ = run_series(&op, m, k_max, mix_seed(cfg.seed, u64::MAX), cfg, None);
        }
    }
    let mut records = Vec::new();
    for trial in 0..trials {
        let seed = mix_seed(cfg.seed, trial as u64);
        let series = methods
            .iter()
            .map(|&method| {
                let (cells, end) = run_series(&op, method, k_max, seed, cfg, oracle);
                Series { method, cells, end }
            })
            .collect();
        records.extend(trial_records(&op, series, trial, seed, cfg, None, oracle.map(|o| &o[..k_max])));
    }
    Ok(records)
}

/// Lanczos-IO timings for each `Z_aug`, with cumulative time relative to a batch run of the same trial.
pub fn zaug_sensitivity(
    graph: &WeightedGraph,
    k_max: usize,
    zaug_values: &[usize],
    trials: usize,
    cfg: &SweepConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    check_preconditions(graph, k_max, cfg)?;
    if zaug_values.is_empty() {
        return Err(BenchError::EmptyZaug);
    }
    let (op, oracle) = prepare(graph, cfg)?;
    let oracle = oracle.as_deref().map(|o| &o[..k_max]);
    if cfg.warmup {
        let _ = run_series(&op, Method::Batch, k_max, mix_seed(cfg.seed, u64::MAX), cfg, None);
    }
    let mut records = Vec::new();
    for trial in 0..trials {
        let seed = mix_seed(cfg.seed, trial as u64);
        let (batch, _) = run_series(&op, Method::Batch, k_max, seed, cfg, None);
        let mut batch_cumulative = Vec::new();
        let mut acc = 0.0;
        for c in &batch {
            acc += c.seconds;
            batch_cumulative.push((c.k, acc));
        }
        for &z in zaug_values {
            let zcfg = SweepConfig {
                lanczos: LanczosConfig { z_aug: z, ..cfg.lanczos },
                ..cfg.clone()
            };
            let (cells, end) = run_series(&op, Method::LanczosIo, k_max, seed, &zcfg, oracle);
            let series = vec![Series { method: Method::LanczosIo, cells, end }];
            let mut recs = trial_records(&op, series, trial, seed, &zcfg, Some(z), oracle);
            for r in &mut recs {
                r.relative_to_batch = batch_cumulative
                    .iter()
                    .find(|(k, _)| *k == r.k)
                    .filter(|(_, t)| *t > 0.0)
                    .map(|(_, t)| r.cumulative_seconds / t);
            }
            records.extend(recs);
        }
    }
    Ok(records)
}

/// Cumulative time at `k` for one method in one trial.
pub fn cumulative_at(records: &[BenchRecord], method: Method, trial: usize, k: usize) -> Option<f64> {
    records
        .iter()
        .find(|r| r.method == method && r.trial == trial && r.k == k && r.status == CellStatus::Ok)
        .map(|r| r.cumulative_seconds)
}

/// Incremental step matvecs never exceed `GROWTH_SLACK` times the `K = 2` step.
pub fn matvec_growth_ok(records: &[BenchRecord]) -> bool {
    let trials: std::collections::BTreeSet<usize> = records.iter().map(|r| r.trial).collect();
    trials.into_iter().all(|t| {
        let inc: Vec<&BenchRecord> = records
            .iter()
            .filter(|r| r.method == Method::Incremental && r.trial == t)
            .collect();
        let Some(base) = inc.iter().find(|r| r.k == 2).map(|r| r.matvecs) else {
            return true;
        };
        inc.iter().all(|r| r.matvecs <= GROWTH_SLACK * base.max(1))
    })
}

/// True when every recorded deviation is within [`AGREEMENT_TOLERANCE`] and no cell failed.
pub fn methods_agree(records: &[BenchRecord]) -> bool {
    records
        .iter()
        .all(|r| r.status == CellStatus::Ok && r.deviation.map_or(true, |d| d <= AGREEMENT_TOLERANCE))
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
