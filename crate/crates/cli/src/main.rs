use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use specinc_bench::{run_sweep, write_csv, zaug_sensitivity, Method, SweepConfig};
use specinc_cli::api;
use specinc_cli::commands::{
    eig_pairs, kernel_from_flags, labels_csv, metrics_csv, run_cluster, write_pairs_csv, EigMethod, GraphInput,
};
use specinc_core::ingest::{erdos_renyi, Format};
use specinc_core::{LanczosConfig, SessionConfig, SolverConfig, Variant};

#[derive(Parser)]
#[command(name = "specinc", version, about = "Incremental spectral clustering with a human in the loop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the clustering loop for a number of steps and write the metrics table.
    Cluster(ClusterArgs),
    /// Compute the K smallest Laplacian eigenpairs.
    Eig(EigArgs),
    /// Time incremental, Lanczos-IO and batch solvers on an Erdős–Rényi graph.
    Bench(BenchArgs),
    /// Serve the JSON session API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// edgelist, mtx or points (default: from the file extension)
    #[arg(long)]
    format: Option<Format>,
    /// Build a k-nearest-neighbor graph from a point file.
    #[arg(long)]
    knn: Option<usize>,
    /// unit or gaussian
    #[arg(long, default_value = "unit")]
    kernel: String,
    #[arg(long)]
    sigma: Option<f64>,
}

impl InputArgs {
    fn load(&self) -> Result<specinc_core::WeightedGraph> {
        let kernel = kernel_from_flags(&self.kernel, self.sigma)?;
        GraphInput {
            format: self.format,
            knn: self.knn,
            kernel,
        }
        .load(&self.input)
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    /// Krylov workspace size (default max(2K+10, 20) capped at n).
    #[arg(long)]
    subspace: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            seed: self.seed,
            subspace_dim: self.subspace,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "unnormalized")]
    variant: Variant,
    /// Number of steps; reports K = 2..=steps+1.
    #[arg(long, default_value_t = 9)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    kmeans_seed: u64,
    /// Cluster graphs with several connected components.
    #[arg(long)]
    allow_disconnected: bool,
    /// Accept this K and write its labels to --labels-out.
    #[arg(long)]
    accept: Option<usize>,
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Save the session state file here.
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Args)]
struct EigArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "incremental")]
    method: EigMethod,
    #[arg(long, default_value = "unnormalized")]
    variant: Variant,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 20)]
    z_ini: usize,
    #[arg(long, default_value_t = 10)]
    z_aug: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 10)]
    kmax: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Comma-separated: incremental,lanczos-io,batch
    #[arg(long, value_delimiter = ',', default_value = "incremental,lanczos-io,batch")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 1)]
    graph_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    z_ini: usize,
    #[arg(long, default_value_t = 10)]
    z_aug: usize,
    /// Also run the Z_aug sensitivity sweep with these values.
    #[arg(long, value_delimiter = ',')]
    zaug_values: Vec<usize>,
    #[arg(long)]
    zaug_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    no_warmup: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Persist sessions as JSON files in this directory.
    #[arg(long)]
    state_dir: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let graph = a.input.load()?;
    let config = SessionConfig {
        solver: a.solver.config(),
        kmeans_seed: a.kmeans_seed,
        allow_disconnected: a.allow_disconnected,
    };
    let mut session = run_cluster(graph, a.variant, a.steps, config)?;
    emit(a.out.as_ref(), &metrics_csv(&session.metrics_history())?)?;
    if let Some(k) = a.accept {
        let report = session.accept(k)?;
        emit(a.labels_out.as_ref(), &labels_csv(&report.labels)?)?;
    } else if a.labels_out.is_some() {
        bail!("--labels-out needs --accept K");
    }
    if let Some(path) = &a.state {
        session.save(path)?;
    }
    Ok(())
}

fn eig(a: EigArgs) -> Result<()> {
    let graph = a.input.load()?;
    let lanczos = LanczosConfig {
        z_ini: a.z_ini,
        z_aug: a.z_aug,
        tolerance: None,
        seed: a.solver.seed,
    };
    let (op, pairs) = eig_pairs(graph, a.variant, a.k, a.method, &a.solver.config(), &lanczos)?;
    let mut buf = Vec::new();
    write_pairs_csv(&mut buf, &op, &pairs)?;
    emit(a.out.as_ref(), &String::from_utf8(buf)?)
}

fn bench(a: BenchArgs) -> Result<()> {
    let graph = erdos_renyi(a.n, a.p, a.graph_seed)?;
    let cfg = SweepConfig {
        seed: a.seed,
        threads: a.threads,
        warmup: !a.no_warmup,
        tag: format!("er-n{}-p{}", a.n, a.p),
        lanczos: LanczosConfig {
            z_ini: a.z_ini,
            z_aug: a.z_aug,
            ..LanczosConfig::default()
        },
        ..SweepConfig::default()
    };
    let records = run_sweep(&graph, &a.methods, a.kmax, a.trials, &cfg)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &records)?;
    emit(a.out.as_ref(), &String::from_utf8(buf)?)?;
    if !a.zaug_values.is_empty() {
        let records = zaug_sensitivity(&graph, a.kmax, &a.zaug_values, a.trials, &cfg)?;
        let mut buf = Vec::new();
        write_csv(&mut buf, &records)?;
        emit(a.zaug_out.as_ref(), &String::from_utf8(buf)?)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Cluster(a) => cluster(a),
        Command::Eig(a) => eig(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(api::serve(&format!("{}:{}", a.host, a.port), a.state_dir.as_deref()))
        }
    }
}
