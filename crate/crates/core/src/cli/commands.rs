use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{version, RunConfig};
use super::svg::{self, Layer};
use crate::baseline::bootstrap_bands;
use crate::conformal::write_intervals_csv;
use crate::graphdata::{
    load_scores, load_scores_unchecked, parse_tu_dataset, split_dataset_with, Graph, Part, ScoredDataset,
    SplitAssignment, TuDataset,
};
use crate::rocbands::{
    band_from_intervals, default_grid, empirical_roc, multilabel_bands, run_band_pipeline, BandRun, BandSummary,
    RocBand, SplitIds,
};
use crate::similarity::{build_combined_matrix, CacheStatus, MatrixSource, SimilarityMatrix};
use crate::synthetic::{coverage_experiment, CoverageReport, SyntheticSpec};
use crate::topology::{
    dataset_cap, dataset_diagrams, persistence_image, write_diagrams_csv, write_images_csv, FiltrationKind,
    HomologyDims, ImageParams, PersistenceDiagram,
};
use crate::{Error, Result};

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Comment lines followed by whatever `body` writes.
fn commented(lines: &[String], body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in lines {
        writeln!(buf, "# {line}")?;
    }
    body(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: String,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn json_report<T: Serialize>(cfg: &RunConfig, body: T) -> Result<Vec<u8>> {
    let report = Report {
        version: version(),
        config: cfg,
        body,
    };
    let mut out = serde_json::to_vec_pretty(&report).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    out.push(b'\n');
    Ok(out)
}

/// Rewrites the placeholder file name of a parse error with the real path.
fn at_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            file: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::parse(path, None, e.to_string()))
}

fn load_dataset(cfg: &RunConfig) -> Result<TuDataset> {
    let (dir, name) = cfg.dataset_location()?;
    let data = parse_tu_dataset(dir, &name)?;
    info!(
        "parsed {} graphs with {} classes from {}",
        data.graphs.len(),
        data.num_classes(),
        dir.display()
    );
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoOutcome {
    pub graphs: usize,
    pub written: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
}

/// Persistence diagrams and images of every graph, one pair of CSV files per
/// filtration under `out/topo`. Existing files are kept unless `force`.
pub fn cmd_topo(cfg: &RunConfig, force: bool) -> Result<TopoOutcome> {
    let data = load_dataset(cfg)?;
    let dir = cfg.out.join("topo");
    let mut outcome = TopoOutcome {
        graphs: data.graphs.len(),
        written: Vec::new(),
        skipped: Vec::new(),
    };
    for &kind in &cfg.filtrations {
        let diagrams_path = dir.join(format!("diagrams_{kind}.csv"));
        let images_path = dir.join(format!("images_{kind}.csv"));
        if !force && diagrams_path.exists() && images_path.exists() {
            info!("{} exists, skipping (use --force to recompute)", diagrams_path.display());
            outcome.skipped.extend([diagrams_path, images_path]);
            continue;
        }
        let diagrams = dataset_diagrams(&data.graphs, kind)?;
        let cap = dataset_cap(&diagrams);
        let params = ImageParams {
            dims: cfg.homology,
            ..ImageParams::with_cap(cfg.image_resolution, cap)
        };
        let images: Vec<_> = diagrams
            .par_iter()
            .map(|d| (d.graph_id, persistence_image(d, &params)))
            .collect();
        let mut lines = cfg.provenance_lines();
        lines.push(format!("filtration {kind} cap {cap}"));
        write_file(&diagrams_path, &commented(&lines, |w| write_diagrams_csv(w, &diagrams))?)?;
        write_file(&images_path, &commented(&lines, |w| write_images_csv(w, &images))?)?;
        info!("wrote {} and {}", diagrams_path.display(), images_path.display());
        outcome.written.extend([diagrams_path, images_path]);
    }
    Ok(outcome)
}

/// Where a similarity matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheUse {
    Hit,
    Computed,
    /// The cache file was unreadable or stale and has been replaced.
    Recomputed,
}

#[derive(Debug, Clone)]
pub struct SimmatOutcome {
    pub matrix: SimilarityMatrix,
    pub cache: CacheUse,
    pub cache_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Combined Wasserstein matrix over the prepared diagrams of each filtration.
pub fn wasserstein_matrix(
    graphs: &[Graph],
    filtrations: &[FiltrationKind],
    p: f64,
    dims: HomologyDims,
) -> Result<SimilarityMatrix> {
    let mut prepared: Vec<Vec<PersistenceDiagram>> = Vec::with_capacity(filtrations.len());
    let mut cap = 0.0f64;
    for &kind in filtrations {
        let diagrams = dataset_diagrams(graphs, kind)?;
        let c = dataset_cap(&diagrams);
        cap = cap.max(c);
        prepared.push(diagrams.iter().map(|d| d.prepared(dims, c)).collect());
    }
    let sets: Vec<&[PersistenceDiagram]> = prepared.iter().map(Vec::as_slice).collect();
    let mut matrix = build_combined_matrix(&sets, p);
    matrix.source = MatrixSource::Wasserstein {
        p,
        filtrations: filtrations.to_vec(),
        cap,
        dims,
    };
    Ok(matrix)
}

/// Hash of the dataset files and the settings the matrix depends on.
fn matrix_key(cfg: &RunConfig) -> Result<Vec<u8>> {
    let (dir, name) = cfg.dataset_location()?;
    let mut hasher = Sha256::new();
    for suffix in ["A", "graph_indicator", "graph_labels"] {
        let path = dir.join(format!("{name}_{suffix}.txt"));
        let bytes = fs::read(&path).map_err(|e| Error::parse(&path, None, e.to_string()))?;
        hasher.update(suffix.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    let settings = serde_json::json!({
        "filtrations": cfg.filtrations,
        "p": cfg.wasserstein_p,
        "homology": cfg.homology,
    });
    hasher.update(settings.to_string().as_bytes());
    Ok(hasher.finalize().to_vec())
}

/// Pairwise distance matrix, reused from `out/simmat.bin` when its key
/// matches and recomputed (with a warning) when the cache is corrupt.
pub fn cmd_simmat(cfg: &RunConfig, force: bool) -> Result<SimmatOutcome> {
    let data = load_dataset(cfg)?;
    let key = matrix_key(cfg)?;
    let cache_path = cfg.out.join("simmat.bin");
    let csv_path = cfg.out.join("simmat.csv");
    let status = if force {
        CacheStatus::Missing
    } else {
        SimilarityMatrix::read_file(&cache_path, &key)?
    };
    let (matrix, cache) = match status {
        CacheStatus::Hit(m) => {
            info!("similarity cache hit: {}", cache_path.display());
            (m, CacheUse::Hit)
        }
        CacheStatus::Missing => (
            wasserstein_matrix(&data.graphs, &cfg.filtrations, cfg.wasserstein_p, cfg.homology)?,
            CacheUse::Computed,
        ),
        CacheStatus::Corrupt(why) => {
            warn!("similarity cache {} unusable ({why}); recomputing", cache_path.display());
            (
                wasserstein_matrix(&data.graphs, &cfg.filtrations, cfg.wasserstein_p, cfg.homology)?,
                CacheUse::Recomputed,
            )
        }
    };
    if matrix.n() != data.graphs.len() {
        return Err(Error::Argument(format!(
            "matrix has {} rows for {} graphs",
            matrix.n(),
            data.graphs.len()
        )));
    }
    if cache != CacheUse::Hit {
        let provenance = serde_json::json!({ "version": version(), "config": cfg.to_json() });
        if let Some(parent) = cache_path.parent() {
            fs::create_dir_all(parent)?;
        }
        matrix.write_file(&cache_path, &key, &provenance)?;
        info!("wrote {}", cache_path.display());
    }
    if cache != CacheUse::Hit || !csv_path.exists() {
        write_file(&csv_path, &commented(&cfg.provenance_lines(), |w| matrix.write_csv(w))?)?;
    }
    Ok(SimmatOutcome {
        matrix,
        cache,
        cache_path,
        csv_path,
    })
}

fn load_scored(cfg: &RunConfig) -> Result<(ScoredDataset, Option<TuDataset>)> {
    let path = cfg
        .scores
        .as_deref()
        .ok_or_else(|| Error::Argument("--scores is required".into()))?;
    if !path.is_file() {
        return Err(Error::parse(path, None, "score file not found"));
    }
    let data = match cfg.dataset {
        Some(_) => Some(load_dataset(cfg)?),
        None => None,
    };
    let scored = match &data {
        Some(d) => load_scores(path, &d.graphs)?,
        None => load_scores_unchecked(path)?,
    };
    if scored.is_empty() {
        return Err(Error::ScoreIngest {
            row: 1,
            msg: "score file has no rows".into(),
        });
    }
    Ok((scored, data))
}

fn load_split(cfg: &RunConfig, n: usize) -> Result<SplitAssignment> {
    match &cfg.split_file {
        Some(path) => {
            let split = SplitAssignment::read_csv(open(path)?, cfg.seed, cfg.split)?;
            if split.len() != n {
                return Err(Error::Split(format!(
                    "manifest {} lists {} instances, scores have {n}",
                    path.display(),
                    split.len()
                )));
            }
            Ok(split)
        }
        None => split_dataset_with(n, cfg.seed, &cfg.split),
    }
}

fn load_distances(cfg: &RunConfig, have_dataset: bool, force: bool) -> Result<SimilarityMatrix> {
    if let Some(path) = &cfg.matrix {
        let reader = BufReader::new(open(path)?);
        return SimilarityMatrix::read_csv(reader).map_err(|e| at_path(path, e));
    }
    if have_dataset {
        return Ok(cmd_simmat(cfg, force)?.matrix);
    }
    Err(Error::Argument("a distance source is required: --matrix FILE or --dataset DIR".into()))
}

/// One binary problem: `class` is the positive label.
#[derive(Debug, Clone)]
struct Target {
    suffix: String,
    class: usize,
}

fn targets(scored: &ScoredDataset) -> Vec<Target> {
    let classes = scored.num_classes();
    if classes == 2 {
        vec![Target {
            suffix: String::new(),
            class: 1,
        }]
    } else {
        (0..classes)
            .map(|k| Target {
                suffix: format!("_label{k}"),
                class: k,
            })
            .collect()
    }
}

fn label_of(target: &Target, binary: bool) -> Option<usize> {
    (!binary).then_some(target.class)
}

fn roc_csv(points: &[(f64, f64)], lines: &[String]) -> Result<Vec<u8>> {
    commented(lines, |w| {
        writeln!(w, "fpr,tpr")?;
        for (x, y) in points {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    })
}

/// Reads the `fpr,tpr` layout written next to band files.
pub fn read_roc_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::parse(path, None, e.to_string()))?;
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match rows.next() {
        Some((_, h)) if h.trim() == "fpr,tpr" => {}
        Some((i, _)) => return Err(Error::parse(path, Some(i + 1), "expected header fpr,tpr")),
        None => return Err(Error::parse(path, None, "empty ROC file")),
    }
    rows.map(|(i, l)| {
        let bad = || Error::parse(path, Some(i + 1), format!("bad row {l:?}"));
        let (x, y) = l.trim().split_once(',').ok_or_else(bad)?;
        Ok((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSummary {
    /// Positive label of a one-vs-rest band; absent for binary scores.
    pub label: Option<usize>,
    pub repeats: usize,
    #[serde(flatten)]
    pub summary: BandSummary,
}

#[derive(Debug, Clone)]
pub struct BandsOutcome {
    pub summaries: Vec<AggregateSummary>,
    /// Aggregated band file per target.
    pub band_files: Vec<PathBuf>,
    pub repeat_dirs: Vec<PathBuf>,
}

/// Per-threshold mean of the repeats' envelopes on the union of their grids.
pub fn average_bands(runs: &[BandRun], positive: impl Fn(usize) -> bool, cfg: &RunConfig) -> Result<RocBand> {
    let mut grid: Vec<f64> = runs.iter().flat_map(|r| r.band.lambda_grid.iter().copied()).collect();
    grid.sort_unstable_by(f64::total_cmp);
    grid.dedup();
    let bands = runs
        .iter()
        .map(|r| {
            let (pos, neg): (Vec<_>, Vec<_>) = r.intervals.iter().cloned().partition(|iv| positive(iv.graph_id));
            band_from_intervals(&pos, &neg, &grid, cfg.alpha, cfg.mode)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |pick: fn(&RocBand) -> &Vec<f64>| -> Vec<f64> {
        (0..grid.len())
            .map(|i| bands.iter().map(|b| pick(b)[i]).sum::<f64>() / bands.len() as f64)
            .collect()
    };
    Ok(RocBand::from_envelopes(
        grid.clone(),
        mean(|b| &b.sen_lo),
        mean(|b| &b.sen_up),
        mean(|b| &b.spe_lo),
        mean(|b| &b.spe_up),
        Some(cfg.mode),
        cfg.alpha,
    ))
}

/// CP-ROC bands for a score file. Repeat 0 uses the configured split; repeat
/// `i > 0` re-divides the calibration/test pool with seed `seed + i`. Each
/// repeat is written under `out/bands/repNNN`, and the per-threshold mean
/// over repeats goes to `out/bands`.
pub fn cmd_bands(cfg: &RunConfig, force: bool) -> Result<BandsOutcome> {
    let (scored, data) = load_scored(cfg)?;
    let n = scored.len();
    let matrix = load_distances(cfg, data.is_some(), force)?;
    if matrix.n() != n {
        return Err(Error::Argument(format!("distance matrix is {}x{0} but there are {n} scores", matrix.n())));
    }
    let base = load_split(cfg, n)?;
    let band_cfg = cfg.band_config();
    let targets = targets(&scored);
    let binary = scored.num_classes() == 2;
    let dir = cfg.out.join("bands");
    let lines = cfg.provenance_lines();

    let mut runs: Vec<Vec<BandRun>> = vec![Vec::new(); targets.len()];
    let mut repeat_dirs = Vec::new();
    for rep in 0..cfg.repeats {
        let split = if rep == 0 {
            base.clone()
        } else {
            base.resplit_pool(cfg.seed + rep as u64)?
        };
        let (train, calib, test) = (split.ids(Part::Train), split.ids(Part::Calib), split.ids(Part::Test));
        let ids = SplitIds {
            train: &train,
            calib: &calib,
            test: &test,
        };
        let rep_runs: Vec<BandRun> = if binary {
            vec![run_band_pipeline(&matrix, &scored.class_probs(1), &scored.labels, ids, &band_cfg)?]
        } else {
            multilabel_bands(&matrix, &scored, ids, &band_cfg)?.into_values().collect()
        };

        let rep_dir = dir.join(format!("rep{rep:03}"));
        let mut rep_lines = lines.clone();
        rep_lines.push(format!("repeat {rep} split_seed {}", split.seed));
        write_file(&rep_dir.join("split.csv"), &commented(&rep_lines, |w| split.write_csv(w))?)?;
        for ((target, run), acc) in targets.iter().zip(rep_runs).zip(runs.iter_mut()) {
            let sfx = &target.suffix;
            write_file(
                &rep_dir.join(format!("band{sfx}.csv")),
                &commented(&[], |w| run.band.write_csv(w, &rep_lines))?,
            )?;
            write_file(
                &rep_dir.join(format!("intervals{sfx}.csv")),
                &commented(&rep_lines, |w| write_intervals_csv(w, &run.intervals))?,
            )?;
            write_file(&rep_dir.join(format!("roc{sfx}.csv")), &roc_csv(&run.roc.points, &rep_lines)?)?;
            let summary = AggregateSummary {
                label: label_of(target, binary),
                repeats: 1,
                summary: run.summary(cfg.k),
            };
            write_file(&rep_dir.join(format!("summary{sfx}.json")), &json_report(cfg, &summary)?)?;
            if run.expanded > 0 {
                warn!(
                    "repeat {rep}{sfx}: {} test neighbourhoods grown past K to reach {} same-label members",
                    run.expanded, cfg.min_stratum
                );
            }
            acc.push(run);
        }
        repeat_dirs.push(rep_dir);
    }

    let mut summaries = Vec::new();
    let mut band_files = Vec::new();
    for (target, target_runs) in targets.iter().zip(&runs) {
        let sfx = &target.suffix;
        let class = target.class;
        let band = average_bands(target_runs, |g| scored.labels[g] == class, cfg)?;
        let auc = target_runs.iter().map(|r| r.roc.auc).sum::<f64>() / target_runs.len() as f64;
        let summary = AggregateSummary {
            label: label_of(target, binary),
            repeats: cfg.repeats,
            summary: BandSummary {
                auc,
                auc_lo: band.auc_lo,
                auc_up: band.auc_up,
                mean_bw_sen: band.mean_bandwidth_sen(),
                mean_bw_spe: band.mean_bandwidth_spe(),
                alpha: cfg.alpha,
                mode: cfg.mode,
                k: cfg.k,
                expanded: target_runs.iter().map(|r| r.expanded).sum(),
            },
        };
        let band_path = dir.join(format!("band{sfx}.csv"));
        write_file(&band_path, &commented(&[], |w| band.write_csv(w, &lines))?)?;
        write_file(&dir.join(format!("summary{sfx}.json")), &json_report(cfg, &summary)?)?;
        let title = match summary.label {
            Some(k) => format!("{} band, label {k} vs rest", cfg.mode),
            None => format!("{} band", cfg.mode),
        };
        let legend = format!("CP-ROC {} (alpha {})", cfg.mode, cfg.alpha);
        let svg_text = svg::render(
            &[Layer {
                band: &band,
                label: &legend,
            }],
            Some(&target_runs[0].roc.points),
            &title,
            &lines,
        );
        write_file(&dir.join(format!("band{sfx}.svg")), svg_text.as_bytes())?;
        info!(
            "{}: AUC {:.4} in [{:.4}, {:.4}], mean bandwidth sen {:.4} spe {:.4}",
            band_path.display(),
            summary.summary.auc,
            summary.summary.auc_lo,
            summary.summary.auc_up,
            summary.summary.mean_bw_sen,
            summary.summary.mean_bw_spe
        );
        summaries.push(summary);
        band_files.push(band_path);
    }
    Ok(BandsOutcome {
        summaries,
        band_files,
        repeat_dirs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub label: Option<usize>,
    pub resamples: usize,
    pub level: f64,
    pub auc: f64,
    pub auc_lo: f64,
    pub auc_up: f64,
    pub mean_bw_tpr: f64,
    pub mean_bw_fpr: f64,
}

/// Bootstrap baseline bands on the test part of the configured split,
/// written under `out/bootstrap`.
pub fn cmd_bootstrap(cfg: &RunConfig) -> Result<Vec<BootstrapSummary>> {
    let (scored, _) = load_scored(cfg)?;
    let split = load_split(cfg, scored.len())?;
    let test = split.ids(Part::Test);
    let binary = scored.num_classes() == 2;
    let dir = cfg.out.join("bootstrap");
    let lines = cfg.provenance_lines();
    let mut out = Vec::new();
    for target in targets(&scored) {
        let sfx = &target.suffix;
        let probs = scored.class_probs(target.class);
        let scores: Vec<f64> = test.iter().map(|&g| probs[g]).collect();
        let positive: Vec<bool> = test.iter().map(|&g| scored.labels[g] == target.class).collect();
        let roc = empirical_roc(&scores, &positive)?;
        let mut grid = default_grid(cfg.grid_points, &[]);
        grid.extend(scores.iter().copied().filter(|s| (0.0..=1.0).contains(s)));
        grid.sort_unstable_by(f64::total_cmp);
        grid.dedup();
        let boot = bootstrap_bands(&scores, &positive, &grid, cfg.resamples, cfg.level, cfg.seed)?;
        let band = boot.to_roc_band();
        let summary = BootstrapSummary {
            label: label_of(&target, binary),
            resamples: cfg.resamples,
            level: cfg.level,
            auc: roc.auc,
            auc_lo: band.auc_lo,
            auc_up: band.auc_up,
            mean_bw_tpr: boot.mean_bandwidth_tpr(),
            mean_bw_fpr: boot.mean_bandwidth_fpr(),
        };
        write_file(&dir.join(format!("band{sfx}.csv")), &commented(&[], |w| band.write_csv(w, &lines))?)?;
        write_file(&dir.join(format!("roc{sfx}.csv")), &roc_csv(&roc.points, &lines)?)?;
        write_file(&dir.join(format!("summary{sfx}.json")), &json_report(cfg, &summary)?)?;
        let legend = format!("bootstrap (level {})", cfg.level);
        let svg_text = svg::render(
            &[Layer {
                band: &band,
                label: &legend,
            }],
            Some(&roc.points),
            "bootstrap band",
            &lines,
        );
        write_file(&dir.join(format!("band{sfx}.svg")), svg_text.as_bytes())?;
        out.push(summary);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SimulationBody<'a> {
    design: &'a SyntheticSpec,
    #[serde(flatten)]
    report: &'a CoverageReport,
}

/// Coverage experiment on synthetic data: `out/simulate/report.json` and the
/// per-replicate audit table `out/simulate/outcomes.csv`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CoverageReport> {
    let spec = cfg.synthetic_spec();
    let report = coverage_experiment(&spec, &cfg.experiment_config())?;
    let dir = cfg.out.join("simulate");
    write_file(
        &dir.join("report.json"),
        &json_report(
            cfg,
            SimulationBody {
                design: &spec,
                report: &report,
            },
        )?,
    )?;
    let mut table = commented(&cfg.provenance_lines(), |_| Ok(()))?;
    report.write_outcomes_csv(&mut table)?;
    write_file(&dir.join("outcomes.csv"), &table)?;
    info!(
        "coverage over {} replicates: sensitivity {:.3} (se {:.3}), false positive rate {:.3} (se {:.3})",
        report.reps, report.coverage_sen, report.se_sen, report.coverage_spe, report.se_spe
    );
    Ok(report)
}

/// Settings of the plot command, embedded in the SVG.
#[derive(Debug, Clone, PartialEq, clap::Args, Serialize)]
pub struct PlotArgs {
    /// Band CSV files to overlay.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Comma-separated legend entries; file stems by default.
    #[arg(long)]
    pub labels: Option<String>,
    /// Empirical ROC (`fpr,tpr` CSV) drawn on top.
    #[arg(long, value_name = "FILE")]
    pub roc: Option<PathBuf>,
    #[arg(long, default_value = "bands.svg")]
    pub out: PathBuf,
    #[arg(long, default_value = "ROC bands")]
    pub title: String,
}

/// Overlays band files in one SVG.
pub fn cmd_plot(args: &PlotArgs) -> Result<PathBuf> {
    let bands = args
        .files
        .iter()
        .map(|path| RocBand::read_csv(BufReader::new(open(path)?)).map_err(|e| at_path(path, e)))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = match &args.labels {
        Some(l) => {
            let labels: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
            if labels.len() != bands.len() {
                return Err(Error::Argument(format!(
                    "{} labels for {} band files",
                    labels.len(),
                    bands.len()
                )));
            }
            labels
        }
        None => args
            .files
            .iter()
            .map(|p| p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()))
            .collect(),
    };
    let roc = args.roc.as_deref().map(read_roc_csv).transpose()?;
    let layers: Vec<Layer<'_>> = bands
        .iter()
        .zip(&labels)
        .map(|(band, label)| Layer { band, label })
        .collect();
    let config = serde_json::to_string(args).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let metadata = vec![format!("version {}", version()), format!("config {config}")];
    let text = svg::render(&layers, roc.as_deref(), &args.title, &metadata);
    write_file(&args.out, text.as_bytes())?;
    Ok(args.out.clone())
}
