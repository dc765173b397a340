use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use nlfe::harness::{run_metrics, run_single, run_sweep};
use nlfe::Error;

/// Configs that regenerate each convergence study and metric plot.
const FIGURES: &[(&str, &str)] = &[
    ("stress_measures.toml", include_str!("../figures/stress_measures.toml")),
    ("compression_region.toml", include_str!("../figures/compression_region.toml")),
    ("vw_nonlinearity.toml", include_str!("../figures/vw_nonlinearity.toml")),
    ("mr_nonlinearity.toml", include_str!("../figures/mr_nonlinearity.toml")),
    ("vw_bar_first_step.toml", include_str!("../figures/vw_bar_first_step.toml")),
    ("vw_bar_sweep.toml", include_str!("../figures/vw_bar_sweep.toml")),
    ("vw_axisymmetric_sweep.toml", include_str!("../figures/vw_axisymmetric_sweep.toml")),
    ("vw_axisymmetric_bulk.toml", include_str!("../figures/vw_axisymmetric_bulk.toml")),
    ("vw_axisymmetric_first_step.toml", include_str!("../figures/vw_axisymmetric_first_step.toml")),
    ("vw_cube_sweep.toml", include_str!("../figures/vw_cube_sweep.toml")),
    ("vw_cube_bulk.toml", include_str!("../figures/vw_cube_bulk.toml")),
    ("mr_bar_compression.toml", include_str!("../figures/mr_bar_compression.toml")),
    ("mr_axisymmetric_compression.toml", include_str!("../figures/mr_axisymmetric_compression.toml")),
    ("mr_cube_compression.toml", include_str!("../figures/mr_cube_compression.toml")),
    ("nh_axisymmetric_bulk.toml", include_str!("../figures/nh_axisymmetric_bulk.toml")),
    ("nh_cube_bulk.toml", include_str!("../figures/nh_cube_bulk.toml")),
    ("mr_cube_log_compression.toml", include_str!("../figures/mr_cube_log_compression.toml")),
    ("tube_pressurization.toml", include_str!("../figures/tube_pressurization.toml")),
    ("indentation.toml", include_str!("../figures/indentation.toml")),
];

#[derive(Parser)]
#[command(name = "nlfe", version, about = "Newton convergence studies for hyperelastic benchmarks")]
struct Cli {
    /// Output directory for CSV files.
    #[arg(long, global = true, env = "NLFE_OUT_DIR", default_value = "out")]
    out: PathBuf,

    /// Worker threads for sweeps (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Write the bundled figure configs into `<out>/figures`.
    #[arg(long)]
    seed_figures: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one load-stepped solve.
    Solve { config: PathBuf },
    /// Run a parameter sweep and write iteration counts.
    Sweep { config: PathBuf },
    /// Evaluate stress curves, nonlinearity measures and comparison regions.
    Metrics { config: PathBuf },
}

fn seed_figures(out: &Path) -> anyhow::Result<()> {
    let dir = out.join("figures");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, text) in FIGURES {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if cli.seed_figures {
        seed_figures(&cli.out)?;
    }
    match &cli.command {
        Some(Command::Solve { config }) => {
            let outcome = run_single(config, &cli.out)?;
            let step = outcome.report.last_step();
            println!(
                "converged={} iterations={} termination={}",
                outcome.report.converged(),
                step.iterations,
                step.termination
            );
            for f in &outcome.files {
                println!("{}", f.display());
            }
        }
        Some(Command::Sweep { config }) => {
            let outcome = run_sweep(config, &cli.out, cli.jobs)?;
            let converged = outcome.records.iter().filter(|r| r.converged).count();
            println!("{} runs, {converged} converged", outcome.records.len());
            println!("{}", outcome.file.display());
        }
        Some(Command::Metrics { config }) => {
            let outcome = run_metrics(config, &cli.out)?;
            for (name, frac) in &outcome.region_fractions {
                println!("region {name}: standard smaller on {:.2}% of cells", 100.0 * frac);
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
        }
        None if cli.seed_figures => {}
        None => anyhow::bail!("nothing to do: give a command or --seed-figures (see --help)"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::Config(_)) | Some(Error::InvalidProblem(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
