//! Command-line front end: topology extraction, similarity matrices, CP-ROC
//! bands, the bootstrap baseline, coverage simulations and plots.
//!
//! Every command resolves a [`RunConfig`] first (defaults, then an optional
//! TOML file, then flags) and writes it, with the version, into each output.
//! Input and usage errors exit with code 2, numerical failures with 3.

mod commands;
mod config;
mod svg;

pub use commands::{
    average_bands, cmd_bands, cmd_bootstrap, cmd_plot, cmd_simmat, cmd_simulate, cmd_topo, read_roc_csv,
    wasserstein_matrix, AggregateSummary, BandsOutcome, BootstrapSummary, CacheUse, PlotArgs, SimmatOutcome,
    TopoOutcome,
};
pub use config::{version, ConfigArgs, Defaults, Design, RunConfig};
pub use svg::{render as render_svg, Layer};

use clap::{Parser, Subcommand};

use crate::conformal::StratumPolicy;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "cproc", version, about = "Conformal ROC bands with topology-based local calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Persistence diagrams and images for every graph and filtration.
    Topo(ConfigArgs),
    /// Pairwise Wasserstein distance matrix, cached on disk.
    Simmat(ConfigArgs),
    /// CP-ROC bands from a score file.
    Bands(ConfigArgs),
    /// Class-stratified bootstrap bands from a score file.
    Bootstrap(ConfigArgs),
    /// Coverage of the oracle ROC rates on synthetic data.
    Simulate(ConfigArgs),
    /// Overlay band CSV files in one SVG.
    Plot(PlotArgs),
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Topo(args) => {
            let force = args.force;
            let cfg = args.load(&Defaults::default())?;
            let out = cmd_topo(&cfg, force)?;
            println!(
                "{} graphs, {} files written, {} kept",
                out.graphs,
                out.written.len(),
                out.skipped.len()
            );
        }
        Command::Simmat(args) => {
            let force = args.force;
            let cfg = args.load(&Defaults::default())?;
            let out = cmd_simmat(&cfg, force)?;
            println!("{}x{0} matrix ({:?}) in {}", out.matrix.n(), out.cache, out.csv_path.display());
        }
        Command::Bands(args) => {
            let force = args.force;
            let cfg = args.load(&Defaults::default())?;
            let out = cmd_bands(&cfg, force)?;
            for (s, path) in out.summaries.iter().zip(&out.band_files) {
                println!(
                    "{}: AUC {:.4} [{:.4}, {:.4}]",
                    path.display(),
                    s.summary.auc,
                    s.summary.auc_lo,
                    s.summary.auc_up
                );
            }
        }
        Command::Bootstrap(args) => {
            let cfg = args.load(&Defaults::default())?;
            for s in cmd_bootstrap(&cfg)? {
                println!("AUC {:.4} [{:.4}, {:.4}]", s.auc, s.auc_lo, s.auc_up);
            }
        }
        Command::Simulate(args) => {
            let defaults = Defaults {
                thin_stratum: StratumPolicy::Expand,
                repeats: 200,
                knn: 50,
            };
            let cfg = args.load(&defaults)?;
            let r = cmd_simulate(&cfg)?;
            println!(
                "coverage sensitivity {:.3} false positive rate {:.3} over {} replicates",
                r.coverage_sen, r.coverage_spe, r.reps
            );
        }
        Command::Plot(args) => {
            let path = cmd_plot(&args)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
