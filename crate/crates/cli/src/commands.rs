//! Work behind each subcommand, shared with the HTTP API and the tests.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use specinc_core::eigen::batch_smallest;
use specinc_core::ingest::{load_graph, Format, Kernel, KnnSpec};
use specinc_core::{
    sweep, ClusterMetrics, EigenPair, LanczosConfig, LanczosIoSolver, LaplacianOperator, Session, SessionConfig,
    SolverConfig, Variant, WeightedGraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EigMethod {
    Incremental,
    LanczosIo,
    Batch,
}

/// Where a graph comes from and how to read it.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub format: Option<Format>,
    pub knn: Option<usize>,
    pub kernel: Kernel,
}

impl GraphInput {
    pub fn load(&self, path: &Path) -> Result<WeightedGraph> {
        let format = self.format.unwrap_or_else(|| Format::from_path(path));
        let knn = self.knn.map(|k| KnnSpec { k, kernel: self.kernel });
        load_graph(path, format, knn).with_context(|| format!("reading {}", path.display()))
    }
}

/// Resolves `--kernel` and `--sigma` into one kernel.
pub fn kernel_from_flags(kernel: &str, sigma: Option<f64>) -> Result<Kernel> {
    let parsed: Kernel = kernel.parse().map_err(anyhow::Error::msg)?;
    match (parsed, sigma) {
        (k, None) => Ok(k),
        (Kernel::Gaussian { .. }, Some(s)) if s > 0.0 && s.is_finite() => Ok(Kernel::Gaussian { sigma: s }),
        (Kernel::Gaussian { .. }, Some(s)) => bail!("invalid sigma {s}"),
        (Kernel::Unit, Some(_)) => bail!("--sigma only applies to the gaussian kernel"),
    }
}

/// Runs `steps` iterations of the clustering loop (K = 2, 3, …).
pub fn run_cluster(graph: WeightedGraph, variant: Variant, steps: usize, config: SessionConfig) -> Result<Session> {
    let mut session = Session::create(graph, variant, config)?;
    for _ in 0..steps {
        session.step()?;
    }
    Ok(session)
}

pub fn metrics_csv(rows: &[ClusterMetrics]) -> Result<String> {
    let mut buf = Vec::new();
    specinc_core::clustering::write_metrics_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf)?)
}

pub fn labels_csv(labels: &[usize]) -> Result<String> {
    let mut buf = Vec::new();
    specinc_core::clustering::write_labels_csv(&mut buf, labels)?;
    Ok(String::from_utf8(buf)?)
}

/// The `k` smallest eigenpairs of the graph's Laplacian, ascending.
pub fn eig_pairs(
    graph: WeightedGraph,
    variant: Variant,
    k: usize,
    method: EigMethod,
    solver: &SolverConfig,
    lanczos: &LanczosConfig,
) -> Result<(LaplacianOperator, Vec<EigenPair>)> {
    let op = LaplacianOperator::new(graph, variant)?;
    let pairs = match method {
        EigMethod::Incremental => sweep(&op, k, solver)?.pairs().into_iter().take(k).collect(),
        EigMethod::Batch => batch_smallest(&op, k, solver)?,
        EigMethod::LanczosIo => LanczosIoSolver::new(&op, lanczos).smallest(k)?,
    };
    Ok((op, pairs))
}

/// `k,eigenvalue,residual,x0,…,x{n-1}` with `k` counted from 1.
pub fn write_pairs_csv<W: Write>(out: W, op: &LaplacianOperator, pairs: &[EigenPair]) -> Result<()> {
    let n = pairs.first().map_or(0, |p| p.vector.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "eigenvalue".into(), "residual".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (i, p) in pairs.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), p.value.to_string(), p.residual(op).to_string()];
        row.extend(p.vector.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
