//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Run with `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use specinc_bench::{cumulative_at, matvec_growth_ok, run_sweep, write_csv, zaug_sensitivity, Method, SweepConfig};
use specinc_cli::commands::{metrics_csv, run_cluster};
use specinc_core::clustering::cluster_sizes;
use specinc_core::graph::Edge;
use specinc_core::ingest::{complete_graph, cycle_graph, disjoint_union, erdos_renyi, knn_graph, path_graph, two_moons, Kernel};
use specinc_core::linalg::{dot, mix_seed};
use specinc_core::operator::materialize;
use specinc_core::{
    batch_smallest, connected_components, dense_oracle, init_basis, modularity, next_eigenpair, scaled_normalized_cut,
    scaled_spectrum_energy, strengths, sweep, LanczosConfig, LanczosIoSolver, LaplacianOperator, SessionConfig,
    SolverConfig, Variant, WeightedGraph,
};

const EIG_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;
const CONSISTENCY_NORM_TOL: f64 = 1e-9;
const CORRELATION_TOL: f64 = 1e-8;
const GAP_FLOOR: f64 = 1e-6;
const LANCZOS_TOL: f64 = 1e-6;
const METRIC_TOL: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-9;
const MOONS_AGREEMENT: f64 = 0.95;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Named {
    name: String,
    graph: WeightedGraph,
}

/// ER graphs with n in [20, 200] and p in {0.1, 0.3}, paths, cycles, complete
/// graphs and unions of 2–4 components.
fn suite() -> Vec<Named> {
    let mut out = Vec::new();
    let mut push = |name: String, graph: WeightedGraph| out.push(Named { name, graph });
    for i in 0..26u64 {
        let n = 20 + (mix_seed(7, i) % 181) as usize;
        let p = if i % 2 == 0 { 0.1 } else { 0.3 };
        push(format!("er({n},{p},seed={i})"), erdos_renyi(n, p, i).unwrap());
    }
    for n in [20, 37, 64, 101, 150] {
        push(format!("path({n})"), path_graph(n).unwrap());
    }
    for n in [20, 33, 64, 99, 200] {
        push(format!("cycle({n})"), cycle_graph(n).unwrap());
    }
    for n in [5, 12, 20, 30] {
        push(format!("complete({n})"), complete_graph(n).unwrap());
    }
    for i in 0..10u64 {
        let parts = 2 + (i % 3) as usize;
        let pieces: Vec<WeightedGraph> = (0..parts)
            .map(|j| {
                let seed = mix_seed(i, j as u64);
                match (i + j as u64) % 4 {
                    0 => path_graph(8 + j * 3).unwrap(),
                    1 => cycle_graph(6 + j * 5).unwrap(),
                    2 => complete_graph(4 + j).unwrap(),
                    _ => connected_er(15 + j * 4, 0.3, seed),
                }
            })
            .collect();
        push(format!("union({parts} parts,#{i})"), disjoint_union(&pieces).unwrap());
    }
    out
}

fn connected_er(n: usize, p: f64, seed: u64) -> WeightedGraph {
    (0..)
        .map(|t| erdos_renyi(n, p, mix_seed(seed, t)).unwrap())
        .find(|g| connected_components(g).count == 1)
        .unwrap()
}

fn has_isolated(g: &WeightedGraph) -> bool {
    strengths(g).strengths.iter().any(|&s| s == 0.0)
}

/// The variants a graph supports: the normalized one needs every strength positive.
fn variants(g: &WeightedGraph) -> Vec<Variant> {
    if has_isolated(g) {
        vec![Variant::Unnormalized]
    } else {
        vec![Variant::Unnormalized, Variant::Normalized]
    }
}

fn oracle_values(op: &LaplacianOperator) -> Vec<f64> {
    dense_oracle(op).unwrap().into_iter().map(|p| p.value).collect()
}

fn oracle_equivalence(graphs: &[Named]) -> Outcome {
    let (mut cases, mut worst_value, mut worst_res) = (0, 0.0_f64, 0.0_f64);
    let mut failures = Vec::new();
    for g in graphs {
        for variant in variants(&g.graph) {
            let op = LaplacianOperator::new(g.graph.clone(), variant).unwrap();
            let oracle = oracle_values(&op);
            let k = g.graph.n().min(12);
            let basis = match sweep(&op, k, &SolverConfig::default()) {
                Ok(b) => b,
                Err(e) => {
                    failures.push(format!("{} {variant}: {e}", g.name));
                    continue;
                }
            };
            cases += 1;
            let dv = basis
                .values()
                .iter()
                .zip(&oracle)
                .take(k)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let dr = basis.computed_pairs().iter().map(|p| p.residual(&op)).fold(0.0, f64::max);
            worst_value = worst_value.max(dv);
            worst_res = worst_res.max(dr);
            if dv > EIG_TOL || dr > RESIDUAL_TOL {
                failures.push(format!("{} {variant}: |Δλ| {dv:.2e}, residual {dr:.2e}", g.name));
            }
        }
    }
    let detail = format!(
        "{} graphs, {cases} graph×variant cases, max |Δλ| {worst_value:.2e}, max residual {worst_res:.2e}{}",
        graphs.len(),
        fmt_failures(&failures)
    );
    outcome(failures.is_empty() && graphs.len() >= 50, detail)
}

fn fmt_failures(f: &[String]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", f.iter().take(5).cloned().collect::<Vec<_>>().join(" | "))
    }
}

fn consistency() -> Outcome {
    let g = connected_er(2000, 0.01, 20);
    let op = LaplacianOperator::new(g, Variant::Unnormalized).unwrap();
    let cfg = SolverConfig::default();
    let inc = sweep(&op, 20, &cfg).unwrap().pairs();
    let batch = batch_smallest(&op, 20, &cfg).unwrap();
    let diff = inc
        .iter()
        .zip(&batch)
        .map(|(a, b)| (a.value - b.value).powi(2))
        .sum::<f64>()
        .sqrt();
    let values: Vec<f64> = batch.iter().map(|p| p.value).collect();
    let mut worst_corr = 0.0_f64;
    let mut checked = 0;
    for i in 0..20 {
        let below = if i == 0 { f64::INFINITY } else { values[i] - values[i - 1] };
        let above = if i + 1 < 20 { values[i + 1] - values[i] } else { f64::INFINITY };
        if below.min(above) <= GAP_FLOOR {
            continue;
        }
        checked += 1;
        let c = dot(&inc[i].vector, &batch[i].vector).abs();
        worst_corr = worst_corr.max(1.0 - c);
    }
    outcome(
        diff <= CONSISTENCY_NORM_TOL && worst_corr <= CORRELATION_TOL,
        format!("‖Δλ‖ {diff:.2e}, min |corr| 1 − {worst_corr:.2e} over {checked} well-separated pairs"),
    )
}

fn spectrum_structure(graphs: &[Named]) -> Outcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut at_shift = 0;
    for g in graphs.iter().filter(|g| g.graph.n() <= 50) {
        for variant in variants(&g.graph) {
            let op = LaplacianOperator::new(g.graph.clone(), variant).unwrap();
            let oracle = oracle_values(&op);
            let c = op.inflation_shift();
            let mut basis = init_basis(&op);
            loop {
                let k = basis.len();
                cases += 1;
                let eigs = specinc_core::eigen::dense_spectrum(materialize(&basis.inflated()));
                let mut expect: Vec<f64> = oracle[k..].iter().map(|l| l - c).collect();
                // λ_i = c (e.g. bipartite graphs, normalized) also lands on zero.
                let hidden = expect.iter().filter(|v| v.abs() <= EIG_TOL).count();
                at_shift += hidden;
                expect.retain(|v| v.abs() > EIG_TOL);
                let zeros = eigs.iter().filter(|v| v.abs() <= EIG_TOL).count();
                let rest: Vec<f64> = eigs.iter().copied().filter(|v| v.abs() > EIG_TOL).collect();
                let err = rest.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if zeros != k + hidden || rest.len() != expect.len() || err > EIG_TOL {
                    failures.push(format!("{} {variant} K={k}: zeros {zeros}, err {err:.2e}", g.name));
                }
                if k >= 8.min(g.graph.n()) {
                    break;
                }
                next_eigenpair(&mut basis, &SolverConfig::default()).unwrap();
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{cases} (graph, variant, K) cases; {at_shift} eigenvalues equal to the shift{}", fmt_failures(&failures)),
    )
}

fn null_space_lift(graphs: &[Named]) -> Outcome {
    let mut cases = 0;
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for g in graphs {
        for variant in variants(&g.graph) {
            let op = LaplacianOperator::new(g.graph.clone(), variant).unwrap();
            let n = g.graph.n();
            let s = op.total_strength();
            // Unit null vector lifted by the rank-one term, and the value it is lifted to.
            let (u, top): (Vec<f64>, f64) = match variant {
                Variant::Unnormalized => (vec![1.0 / (n as f64).sqrt(); n], s),
                Variant::Normalized => (
                    strengths(&g.graph).strengths.iter().map(|x| (x / s).sqrt()).collect(),
                    2.0,
                ),
            };
            let mut m = materialize(&op);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += top * u[i] * u[j];
                }
            }
            let got = specinc_core::eigen::dense_spectrum(m);
            let mut predicted = oracle_values(&op);
            predicted[0] = top;
            predicted.sort_by(f64::total_cmp);
            let err = got.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            cases += 1;
            worst = worst.max(err);
            let has_top = got.iter().any(|v| (v - top).abs() <= EIG_TOL);
            if err > EIG_TOL || !has_top {
                failures.push(format!("{} {variant}: err {err:.2e}", g.name));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{cases} spectra, max error {worst:.2e}{}", fmt_failures(&failures)),
    )
}

fn timing_trend() -> Outcome {
    let g = erdos_renyi(2000, 0.1, 1).unwrap();
    let cfg = SweepConfig {
        tag: "acceptance".into(),
        ..SweepConfig::default()
    };
    let records = match run_sweep(&g, &[Method::Incremental, Method::Batch], 10, 5, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    save("timing.csv", &records);
    let mut lines = Vec::new();
    let mut all_faster = true;
    for trial in 0..5 {
        let inc = cumulative_at(&records, Method::Incremental, trial, 10);
        let batch = cumulative_at(&records, Method::Batch, trial, 10);
        match (inc, batch) {
            (Some(i), Some(b)) => {
                all_faster &= i < b;
                lines.push(format!("{i:.3}s vs {b:.3}s"));
            }
            _ => {
                all_faster = false;
                lines.push("missing".into());
            }
        }
    }
    let growth = matvec_growth_ok(&records);
    outcome(
        all_faster && growth,
        format!("incremental vs batch cumulative at K=10: [{}]; matvec growth ok: {growth}", lines.join(", ")),
    )
}

/// Sequential `K = 1..=min(n, 12)` Lanczos-IO runs for each `Z_aug`; returns
/// (runs, worst |Δλ|, failures).
fn lanczos_runs<'a>(graphs: impl Iterator<Item = &'a Named> + Clone) -> (usize, f64, Vec<String>) {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    let mut failures = Vec::new();
    for z_aug in [2, 10, 50] {
        let cfg = LanczosConfig { z_aug, ..LanczosConfig::default() };
        for g in graphs.clone() {
            for variant in variants(&g.graph) {
                let op = LaplacianOperator::new(g.graph.clone(), variant).unwrap();
                let oracle = oracle_values(&op);
                let mut solver = LanczosIoSolver::new(&op, &cfg);
                cases += 1;
                for k in 1..=g.graph.n().min(12) {
                    let err = match solver.smallest(k) {
                        Ok(pairs) => pairs.iter().zip(&oracle).map(|(p, o)| (p.value - o).abs()).fold(0.0, f64::max),
                        Err(e) => {
                            failures.push(format!("{} {variant} Z_aug={z_aug} K={k}: {e}", g.name));
                            break;
                        }
                    };
                    worst = worst.max(err);
                    if err > LANCZOS_TOL {
                        failures.push(format!("{} {variant} Z_aug={z_aug} K={k}: {err:.2e}", g.name));
                        break;
                    }
                }
            }
        }
    }
    (cases, worst, failures)
}

/// Asserted on the random graphs, whose spectra are simple. Cycles and unions
/// of parts with shared eigenvalues have repeated eigenvalues, and a single
/// Krylov sequence only sees one copy of each; those runs are reported only.
fn lanczos_agreement(graphs: &[Named]) -> Outcome {
    let random = graphs.iter().filter(|g| g.name.starts_with("er("));
    let (cases, worst, failures) = lanczos_runs(random);
    let (structured, _, missed) = lanczos_runs(graphs.iter().filter(|g| !g.name.starts_with("er(")));

    // Timing series per Z_aug; reported, not ranked.
    let big = erdos_renyi(2000, 0.1, 1).unwrap();
    let series = zaug_sensitivity(&big, 10, &[2, 10, 50], 1, &SweepConfig::default());
    let summary = match &series {
        Ok(records) => {
            save("zaug.csv", records);
            [2, 10, 50]
                .iter()
                .map(|&z| {
                    let last = records.iter().filter(|r| r.z_aug == Some(z)).max_by_key(|r| r.k);
                    match last {
                        Some(r) => format!("Z_aug={z}: {:.3}s, {} stored", r.cumulative_seconds, r.stored_vectors),
                        None => format!("Z_aug={z}: no data"),
                    }
                })
                .collect::<Vec<_>>()
                .join(", ")
        }
        Err(e) => format!("timing failed: {e}"),
    };
    outcome(
        failures.is_empty() && series.is_ok(),
        format!(
            "{cases} runs on random graphs, max |Δλ| {worst:.2e}; structured graphs (not asserted): {} of {structured} runs miss a repeated eigenvalue; {summary}{}",
            missed.len(),
            fmt_failures(&failures)
        ),
    )
}

fn brute_force(g: &WeightedGraph, labels: &[usize], k: usize) -> (f64, f64) {
    let n = g.n();
    let mut w = vec![vec![0.0; n]; n];
    for &Edge { i, j, w: x } in g.edges() {
        w[i][j] = x;
        w[j][i] = x;
    }
    let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let s: f64 = deg.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += w[i][j] - deg[i] * deg[j] / s;
            }
        }
    }
    let mut nc = 0.0;
    for c in 0..k {
        let (mut cut, mut vol) = (0.0, 0.0);
        for i in (0..n).filter(|&i| labels[i] == c) {
            vol += deg[i];
            cut += (0..n).filter(|&j| labels[j] != c).map(|j| w[i][j]).sum::<f64>();
        }
        nc += cut / vol;
    }
    (q / s, nc / k as f64)
}

fn metric_identities(graphs: &[Named]) -> Outcome {
    let mut failures = Vec::new();
    let mut brute_cases = 0;
    let mut extra: Vec<WeightedGraph> = (0..40u64)
        .map(|i| connected_er(5 + (i as usize % 26), 0.3, mix_seed(99, i)))
        .collect();
    extra.extend(graphs.iter().filter(|g| g.graph.n() <= 30).map(|g| g.graph.clone()));

    for g in graphs.iter().map(|g| &g.graph).chain(&extra) {
        let n = g.n();
        if let Ok(q) = modularity(g, &vec![0; n]) {
            if q != 0.0 {
                failures.push(format!("modularity(K=1) = {q:e} on n={n}"));
            }
        }
        let comps = connected_components(g);
        if comps.count > 1 && !has_isolated(g) {
            let nc = scaled_normalized_cut(g, &comps.labels, comps.count).unwrap();
            if nc != 0.0 {
                failures.push(format!("NC on components = {nc:e}"));
            }
        }
        let op = LaplacianOperator::new(g.clone(), Variant::Unnormalized).unwrap();
        let values = oracle_values(&op);
        let energies: Vec<f64> = (1..=n).map(|k| scaled_spectrum_energy(&values[..k], &op)).collect();
        if (energies[n - 1] - 1.0).abs() > ENERGY_TOL || energies.windows(2).any(|w| w[1] < w[0]) {
            failures.push(format!("energy on n={n}: final {:.3e}", energies[n - 1] - 1.0));
        }

        if n <= 30 && !has_isolated(g) {
            for (t, k) in (1..=4.min(n)).enumerate() {
                let labels: Vec<usize> = (0..n)
                    .map(|i| if i < k { i } else { (mix_seed(t as u64, i as u64) % k as u64) as usize })
                    .collect();
                debug_assert!(cluster_sizes(&labels).iter().all(|&c| c > 0));
                let (bq, bnc) = brute_force(g, &labels, k);
                let q = modularity(g, &labels).unwrap();
                let nc = scaled_normalized_cut(g, &labels, k).unwrap();
                brute_cases += 1;
                if (q - bq).abs() > METRIC_TOL || (nc - bnc).abs() > METRIC_TOL {
                    failures.push(format!("n={n} K={k}: Δq {:.1e}, ΔNC {:.1e}", q - bq, nc - bnc));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{brute_cases} labelings checked against brute force{}", fmt_failures(&failures)),
    )
}

fn moons_graph() -> (WeightedGraph, Vec<usize>) {
    // Enough noise that the moons touch (one component); the Gaussian weights
    // keep the few bridging edges light.
    let (points, truth) = two_moons(400, 0.1, 0);
    (knn_graph(&points, 8, Kernel::Gaussian { sigma: 0.1 }).unwrap(), truth)
}

fn end_to_end() -> Outcome {
    let (g, truth) = moons_graph();
    if connected_components(&g).count != 1 {
        return outcome(false, "kNN graph is disconnected");
    }
    let config = SessionConfig { kmeans_seed: 11, ..SessionConfig::default() };
    let run = || -> anyhow::Result<(String, Vec<usize>)> {
        let session = run_cluster(g.clone(), Variant::Normalized, 7, config)?;
        let csv = metrics_csv(&session.metrics_history())?;
        let labels = session.report(2).map(|r| r.labels.clone()).unwrap_or_default();
        Ok((csv, labels))
    };
    let (a, b) = match (run(), run()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
    };
    let deterministic = a.0 == b.0;
    let rows = a.0.lines().count() - 1;
    let same = a.1.iter().zip(&truth).filter(|(x, y)| x == y).count();
    let agreement = same.max(truth.len() - same) as f64 / truth.len() as f64;
    outcome(
        deterministic && rows == 7 && agreement >= MOONS_AGREEMENT,
        format!("metrics rows K=2..8: {rows}, identical across runs: {deterministic}, K=2 agreement {:.1}%", 100.0 * agreement),
    )
}

fn save(name: &str, records: &[specinc_bench::BenchRecord]) {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    if std::fs::create_dir_all(&dir).is_ok() {
        if let Ok(f) = std::fs::File::create(dir.join(name)) {
            let _ = write_csv(f, records);
        }
    }
}

fn main() {
    let graphs = suite();
    let criteria: [(&str, Box<dyn Fn() -> Outcome>, Duration); 8] = [
        ("oracle equivalence", Box::new(|| oracle_equivalence(&graphs)), Duration::from_secs(60)),
        ("batch/incremental consistency at K=20", Box::new(consistency), Duration::from_secs(300)),
        ("inflated spectrum structure", Box::new(|| spectrum_structure(&graphs)), Duration::MAX),
        ("rank-one null-space lift", Box::new(|| null_space_lift(&graphs)), Duration::MAX),
        ("timing trend", Box::new(timing_trend), Duration::from_secs(600)),
        ("lanczos-io agreement and Z_aug series", Box::new(|| lanczos_agreement(&graphs)), Duration::MAX),
        ("metric identities", Box::new(|| metric_identities(&graphs)), Duration::MAX),
        ("two-moons session end to end", Box::new(end_to_end), Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, budget) in &criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        let over = if took > *budget { " (over time budget)" } else { "" };
        println!(
            "{} {name}: {} [{:.1}s{over}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
