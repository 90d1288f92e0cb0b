//! Acceptance harness: runs every acceptance criterion at its stated
//! tolerance and prints one `[PASS]`, `[FAIL]` or `[NOT RUN]` line each.
//!
//! The process exits with status 0 so that `cargo test --workspace` reports
//! the remaining test targets; set `CPROC_ACCEPTANCE_STRICT=1` to exit with
//! status 1 when any criterion fails. `CPROC_TU_ROOT` points at a directory
//! holding the `BZR` and `PROTEINS` TU folders for the parser counts, and
//! `CPROC_ACCEPTANCE_DIAGNOSTICS=1` adds a comparison run of the coverage
//! experiment with the label-share neighbour estimate.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cproc::cli::{cmd_bands, ConfigArgs, Defaults};
use cproc::conformal::{quantile, Conditioning, NeighborEstimate, SoftInterval};
use cproc::graphdata::{parse_tu_dataset, write_tu_dataset, Graph, TuDataset};
use cproc::rocbands::{band_from_intervals, default_grid, empirical_rates, BandConfig, BandMode};
use cproc::similarity::wasserstein_points;
use cproc::synthetic::{
    bootstrap_comparison, coverage_experiment, modelled_data, Cluster, ExperimentConfig, ModelKind, SyntheticSpec,
};
use cproc::topology::{compute_filtration, sublevel_persistence, FiltrationKind, Pair};

use common::{exhaustive_matching_cost, fixture_dir};

enum Status {
    Pass,
    Fail,
    NotRun,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }
}

fn env_flag(name: &str) -> bool {
    std::env::var(name).is_ok_and(|v| !v.is_empty() && v != "0")
}

fn coverage() -> Outcome {
    let spec = SyntheticSpec::m1(2000, 1000, 500, 1);
    let cfg = ExperimentConfig::default();
    let report = coverage_experiment(&spec, &cfg).expect("coverage experiment");
    let ok = report.coverage_sen >= 0.85 && report.coverage_spe >= 0.85;
    let mut detail = format!(
        "{} reps, alpha {}, K {}: TPR coverage {:.3} (se {:.3}), FPR coverage {:.3} (se {:.3}), need >= 0.85 each; mean bandwidth sen {:.3}, spe {:.3}",
        report.reps,
        report.alpha,
        report.k,
        report.coverage_sen,
        report.se_sen,
        report.coverage_spe,
        report.se_spe,
        report.mean_bw_sen,
        report.mean_bw_spe
    );
    if env_flag("CPROC_ACCEPTANCE_DIAGNOSTICS") {
        let alt = ExperimentConfig {
            estimate: NeighborEstimate::LabelMean,
            ..cfg
        };
        let r = coverage_experiment(&spec, &alt).expect("coverage experiment");
        detail.push_str(&format!(
            "; label-share estimate: TPR {:.3}, FPR {:.3}, bandwidth sen {:.3}, spe {:.3}",
            r.coverage_sen, r.coverage_spe, r.mean_bw_sen, r.mean_bw_spe
        ));
    }
    Outcome::check(ok, detail)
}

fn sandwich() -> Outcome {
    let mut violations = 0usize;
    let mut checked = 0usize;
    for inst in 0..50u64 {
        let md = modelled_data(&SyntheticSpec::m1(400, 200, 150 + inst as usize, 100 + inst), 1e-8, 500)
            .expect("synthetic data");
        let mut rng = ChaCha8Rng::seed_from_u64(inst);
        let test = &md.data.test;
        let intervals: Vec<SoftInterval> = test
            .iter()
            .map(|&g| {
                let f = md.f_hat[g];
                // Some intervals collapse onto the point itself.
                let (a, b) = if rng.random_bool(0.1) {
                    (0.0, 0.0)
                } else {
                    (rng.random_range(0.0..0.3), rng.random_range(0.0..0.3))
                };
                SoftInterval {
                    graph_id: g,
                    lo: f - a,
                    up: f + b,
                    alpha: 0.1,
                    conditioning: Conditioning::Marginal,
                }
            })
            .collect();
        let positive: Vec<bool> = test.iter().map(|&g| md.data.labels[g] == 1).collect();
        let scores: Vec<f64> = test.iter().map(|&g| md.f_hat[g]).collect();
        let (pos, neg): (Vec<SoftInterval>, Vec<SoftInterval>) =
            intervals.iter().partition(|iv| md.data.labels[iv.graph_id] == 1);
        let grid = default_grid(512, &intervals);
        let band = band_from_intervals(&pos, &neg, &grid, 0.1, BandMode::Exchangeable).expect("band");
        let (tpr, fpr) = empirical_rates(&scores, &positive, &grid).expect("rates");
        for i in 0..grid.len() {
            checked += 1;
            let ok = band.sen_lo[i] <= tpr[i] && tpr[i] <= band.sen_up[i] && band.spe_lo[i] <= fpr[i] && fpr[i] <= band.spe_up[i];
            if !ok {
                violations += 1;
            }
        }
    }
    Outcome::check(
        violations == 0,
        format!("50 instances, {checked} grid points, {violations} points where the empirical ROC leaves the band"),
    )
}

fn random_diagram(rng: &mut ChaCha8Rng) -> Vec<Pair> {
    let n = rng.random_range(0..=4);
    (0..n)
        .map(|_| {
            let b: f64 = rng.random_range(0.0..5.0);
            // Occasional zero-persistence and tied points.
            let d = if rng.random_bool(0.1) { b } else { b + rng.random_range(0.0..3.0) };
            if rng.random_bool(0.1) {
                (1.0, 2.0)
            } else {
                (b, d)
            }
        })
        .collect()
}

fn wasserstein_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let (a, b) = (random_diagram(&mut rng), random_diagram(&mut rng));
        let p = [1.0, 2.0, 1.5][i % 3];
        let fast = wasserstein_points(&a, &b, p);
        let slow = exhaustive_matching_cost(&a, &b, p).powf(1.0 / p);
        worst = worst.max((fast - slow).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        worst <= 1e-9 && secs < 30.0,
        format!("1000 pairs of <= 4 points, p in {{1, 1.5, 2}}: max |error| {worst:.2e} (tol 1e-9), {secs:.2}s (limit 30s)"),
    )
}

fn quantile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n = rng.random_range(1..=60);
        let ties = rng.random_bool(0.5);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if ties {
                    rng.random_range(0..5) as f64
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for gamma in [0.05, 0.5, 0.95] {
            let m = ((gamma * n as f64).floor() as usize).clamp(1, n);
            if quantile(&values, gamma).expect("quantile") != sorted[m - 1] {
                mismatches += 1;
            }
        }
    }
    Outcome::check(
        mismatches == 0,
        format!("1000 multisets x 3 levels: {mismatches} mismatches against the sorted order statistic"),
    )
}

fn reduction_identity() -> Outcome {
    let mut differing = 0usize;
    for inst in 0..20u64 {
        let spec = SyntheticSpec::m2(300, 120 + 5 * inst as usize, 80, 200 + inst);
        let md = modelled_data(&spec, 1e-8, 500).expect("synthetic data");
        let base = BandConfig {
            k_train: Some(15),
            ..BandConfig::default()
        };
        let cond = md
            .band(&BandConfig {
                k: md.data.calib.len(),
                mode: BandMode::Conditional,
                ..base
            })
            .expect("conditional band");
        let exch = md
            .band(&BandConfig {
                mode: BandMode::Exchangeable,
                ..base
            })
            .expect("exchangeable band");
        let same_intervals = cond
            .intervals
            .iter()
            .zip(&exch.intervals)
            .all(|(a, b)| a.lo.to_bits() == b.lo.to_bits() && a.up.to_bits() == b.up.to_bits());
        let (a, b) = (&cond.band, &exch.band);
        let same_band = a.lambda_grid == b.lambda_grid
            && a.sen_lo == b.sen_lo
            && a.sen_up == b.sen_up
            && a.spe_lo == b.spe_lo
            && a.spe_up == b.spe_up
            && a.auc_lo.to_bits() == b.auc_lo.to_bits()
            && a.auc_up.to_bits() == b.auc_up.to_bits();
        if !(same_intervals && same_band) {
            differing += 1;
        }
    }
    Outcome::check(
        differing == 0,
        format!("20 instances with K = |calibration|: {differing} differ from the exchangeable band"),
    )
}

fn noisy_cluster_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        clusters: vec![
            Cluster { center: vec![0.0, 0.0, 0.0], pool_weight: 1.0, test_weight: 9.0, noise_sd: 0.05 },
            Cluster { center: vec![8.0, 0.0, 0.0], pool_weight: 1.0, test_weight: 1.0, noise_sd: 1.0 },
        ],
        model: ModelKind::NoisyOracle,
        ..SyntheticSpec::m1(800, 600, 200, seed)
    }
}

fn directional() -> Outcome {
    let spec = noisy_cluster_spec(300);
    let cfg = |mode| ExperimentConfig {
        reps: 50,
        k: 30,
        mode,
        ..ExperimentConfig::default()
    };
    let exch = coverage_experiment(&spec, &cfg(BandMode::Exchangeable)).expect("exchangeable run");
    let cond = coverage_experiment(&spec, &cfg(BandMode::Conditional)).expect("conditional run");
    let narrower = exch
        .outcomes
        .iter()
        .zip(&cond.outcomes)
        .filter(|(e, c)| c.mean_bw_sen + c.mean_bw_spe < e.mean_bw_sen + e.mean_bw_spe)
        .count();
    let share = narrower as f64 / 50.0;
    Outcome::check(
        share >= 0.8,
        format!(
            "50 reps, test mass on the low-noise cluster: conditional narrower in {:.0}% (need >= 80%); mean bandwidth {:.3} vs {:.3}",
            100.0 * share,
            (cond.mean_bw_sen + cond.mean_bw_spe) / 2.0,
            (exch.mean_bw_sen + exch.mean_bw_spe) / 2.0
        ),
    )
}

fn bootstrap_baseline() -> Outcome {
    let spec = SyntheticSpec {
        intercept: -3.0,
        ..SyntheticSpec::m1(2000, 1000, 500, 400)
    };
    let prevalence = {
        let md = modelled_data(&spec, 1e-8, 500).expect("synthetic data");
        md.data.labels.iter().filter(|&&y| y == 1).count() as f64 / md.data.labels.len() as f64
    };
    let cfg = ExperimentConfig {
        reps: 20,
        ..ExperimentConfig::default()
    };
    let compare = |cfg: &ExperimentConfig| {
        let rows = bootstrap_comparison(&spec, cfg, 1000, 0.95).expect("bootstrap comparison");
        let wins = rows.iter().filter(|r| r.boot_mean() < r.cp_mean()).count();
        let n = rows.len() as f64;
        (
            wins as f64 / n,
            rows.iter().map(|r| r.boot_mean()).sum::<f64>() / n,
            rows.iter().map(|r| r.cp_mean()).sum::<f64>() / n,
        )
    };
    let (share, boot, cp) = compare(&cfg);
    let mut detail = format!(
        "20 reps, positive share {prevalence:.3}, B = 1000, level 0.95: bootstrap narrower in {:.0}% (need >= 80%); mean bandwidth bootstrap {boot:.3}, conformal {cp:.3}",
        100.0 * share
    );
    if env_flag("CPROC_ACCEPTANCE_DIAGNOSTICS") {
        let (share, boot, cp) = compare(&ExperimentConfig {
            estimate: NeighborEstimate::LabelMean,
            ..cfg
        });
        detail.push_str(&format!(
            "; label-share estimate: bootstrap narrower in {:.0}%, bandwidth bootstrap {boot:.3}, conformal {cp:.3}",
            100.0 * share
        ));
    }
    Outcome::check(share >= 0.8, detail)
}

fn random_graph(rng: &mut ChaCha8Rng, id: usize) -> Graph {
    let n = rng.random_range(1..=30);
    let p: f64 = rng.random_range(0.0..0.4);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(id, n, edges, 0)
}

fn persistence_counts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0usize;
    for id in 0..200 {
        let g = random_graph(&mut rng, id);
        let kind = FiltrationKind::ALL[id % FiltrationKind::ALL.len()];
        let values = compute_filtration(&g, kind).expect("filtration");
        let d = sublevel_persistence(&g, &values).expect("persistence");
        let essential1 = d.dim1.iter().filter(|p| p.1 == f64::INFINITY).count();
        let cycles = g.num_edges() + g.num_components() - g.num_nodes;
        if d.dim0.len() != g.num_nodes || essential1 != cycles {
            bad += 1;
        }
    }
    Outcome::check(
        bad == 0,
        format!("200 random graphs (n <= 30, all five filtrations): {bad} with wrong dimension-0 or cycle counts"),
    )
}

fn fixture_round_trip() -> Outcome {
    let parsed = parse_tu_dataset(fixture_dir(), "TINY").expect("fixture parses");
    let (a, b) = (tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir"));
    write_tu_dataset(a.path(), &parsed).expect("write");
    let again = parse_tu_dataset(a.path(), "TINY").expect("reparse");
    write_tu_dataset(b.path(), &again).expect("write");
    let same_files = ["A", "graph_indicator", "graph_labels"].iter().all(|kind| {
        let file = format!("TINY_{kind}.txt");
        fs::read(a.path().join(&file)).ok() == fs::read(b.path().join(&file)).ok()
    });
    Outcome::check(
        again == parsed && same_files,
        format!(
            "fixture with {} graphs: reparsed dataset equal {}, second serialization byte-identical {}",
            parsed.graphs.len(),
            again == parsed,
            same_files
        ),
    )
}

fn tu_counts() -> Outcome {
    let Ok(root) = std::env::var("CPROC_TU_ROOT") else {
        return Outcome {
            status: Status::NotRun,
            detail: "set CPROC_TU_ROOT to a directory holding BZR/ and PROTEINS/".into(),
        };
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, graphs) in [("BZR", 405), ("PROTEINS", 1113)] {
        match parse_tu_dataset(Path::new(&root).join(name), name) {
            Ok(d) => {
                ok &= d.graphs.len() == graphs && d.num_classes() == 2;
                parts.push(format!("{name}: {} graphs, {} classes (expect {graphs}, 2)", d.graphs.len(), d.num_classes()));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    Outcome::check(ok, parts.join("; "))
}

/// Random two-class graph set with model scores tied to edge density.
fn write_graph_inputs(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let graphs: Vec<Graph> = (0..160)
        .map(|id| {
            let label = id % 2;
            let n = rng.random_range(6..=14);
            let p = if label == 1 { 0.45 } else { 0.25 };
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.random_bool(p))
                .collect();
            Graph::new(id, n, edges, label)
        })
        .collect();
    let mut scores = String::from("graph_id,label,p0,p1\n");
    for g in &graphs {
        let pairs = (g.num_nodes * (g.num_nodes - 1) / 2) as f64;
        let density = g.num_edges() as f64 / pairs;
        let p1 = (0.2 + density + rng.random_range(-0.15..0.15)).clamp(0.01, 0.99);
        scores.push_str(&format!("{},{},{},{}\n", g.id, g.label, 1.0 - p1, p1));
    }
    let data = dir.join("GRAPHS");
    write_tu_dataset(
        &data,
        &TuDataset {
            name: "GRAPHS".into(),
            graphs,
            class_labels: vec![0, 1],
            self_loops_dropped: 0,
        },
    )
    .expect("write dataset");
    let scores_path = dir.join("scores.csv");
    fs::write(&scores_path, scores).expect("write scores");
    (data, scores_path)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let (data, scores) = write_graph_inputs(dir.path());
    let args = ConfigArgs {
        dataset: Some(data),
        scores: Some(scores),
        filtration: Some("degree,closeness".into()),
        knn: Some(15),
        repeats: Some(3),
        thin_stratum: Some("expand".into()),
        out: Some(dir.path().join("out")),
        ..Default::default()
    };
    let cfg = args.load(&Defaults::default()).expect("config");
    // The second run recomputes the distance matrix instead of reading the cache.
    let snapshot = |force: bool| -> Vec<(String, Vec<u8>)> {
        let outcome = cmd_bands(&cfg, force).expect("bands run");
        let mut files: Vec<_> = outcome
            .band_files
            .iter()
            .map(|p| (p.display().to_string(), fs::read(p).expect("band file")))
            .collect();
        for rep in &outcome.repeat_dirs {
            let p = rep.join("band.csv");
            files.push((p.display().to_string(), fs::read(&p).expect("repeat band file")));
        }
        files
    };
    let first = snapshot(false);
    let second = snapshot(true);
    Outcome::check(
        !first.is_empty() && first == second,
        format!(
            "graph pipeline (160 graphs, 2 filtrations, 3 repeats) run twice: {} band CSVs, identical {}",
            first.len(),
            first == second
        ),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 11] = [
        ("#1", "conditional coverage on the well-specified design", coverage),
        ("#2", "empirical ROC inside the band when intervals contain the scores", sandwich),
        ("#3", "Wasserstein distance against exhaustive matching", wasserstein_oracle),
        ("#4", "quantile against the sorted order statistic", quantile_oracle),
        ("#5", "K = |calibration| reduces to the exchangeable band", reduction_identity),
        ("#6", "conditional band narrower under cluster-dependent noise", directional),
        ("#7", "bootstrap baseline narrower than the conformal band", bootstrap_baseline),
        ("#8", "persistence pair counts on random graphs", persistence_counts),
        ("#9a", "TU fixture round trip", fixture_round_trip),
        ("#9b", "BZR and PROTEINS graph counts", tu_counts),
        ("#10", "bands rerun is byte-identical", determinism),
    ];
    let mut failed = 0usize;
    for (id, title, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let tag = match outcome.status {
            Status::Pass => "[PASS]",
            Status::Fail => {
                failed += 1;
                "[FAIL]"
            }
            Status::NotRun => "[NOT RUN]",
        };
        println!(
            "{tag} {id} {title}: {} ({:.1}s)",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed");
    if failed > 0 && env_flag("CPROC_ACCEPTANCE_STRICT") {
        std::process::exit(1);
    }
}
