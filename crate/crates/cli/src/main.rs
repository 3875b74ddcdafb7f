use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mixdta::pricing::write_nfd;
use mixdta::workbench::{
    nfd_from_run_dir, run_scenario, validate_scenario_file, write_nguyen_bundle, LoadedScenario,
    RunOptions,
};

#[derive(Parser)]
#[command(name = "mixdta", version, about = "Mixed UE/SO dynamic traffic assignment with feedback pricing")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the simulation step, seconds.
    #[arg(long, global = true)]
    step_seconds: Option<f64>,
    /// Record wall-clock time per iteration in the logs.
    #[arg(long, global = true)]
    timings: bool,
    /// Write per-vehicle trajectories next to each run.
    #[arg(long, global = true)]
    trajectories: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario, its network and its demand.
    Validate { scenario: PathBuf },
    /// Untolled equilibrium at the scenario ratios (or one given ratio).
    Equilibrate {
        scenario: PathBuf,
        #[arg(long)]
        so_ratio: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// NFD series of a run directory on stdout; K_cr estimate on stderr.
    Nfd {
        run_dir: PathBuf,
        /// Pricing-zone links (default).
        #[arg(long, conflicts_with = "network")]
        zone: bool,
        /// All links.
        #[arg(long)]
        network: bool,
    },
    /// Full pricing run at the scenario ratios.
    Price {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics over a list of SO ratios, priced when the scenario has tolls.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the bundled Nguyen scenario files.
    Nguyen {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, g: &Global, ratios: Option<Vec<f64>>) -> Result<LoadedScenario> {
    let sc = LoadedScenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let mut s = sc.scenario.clone();
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    if let Some(step) = g.step_seconds {
        s.clock.step_s = step;
    }
    if g.timings {
        s.solver.timings = true;
    }
    if let Some(r) = ratios {
        s.so_ratios = r;
    }
    Ok(LoadedScenario::from_parts(s, sc.network_def, sc.demand_file)?)
}

fn out_dir(out: Option<PathBuf>, sc: &LoadedScenario) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("runs").join(&sc.scenario.id))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let g = &cli.global;
    let options = |pricing| RunOptions {
        pricing,
        trajectories: g.trajectories,
    };
    match cli.command {
        Command::Validate { scenario } => {
            let sc = validate_scenario_file(&scenario)?;
            println!(
                "ok: {} ({} nodes, {} links, {} OD pairs, {} vehicles)",
                sc.scenario.id,
                sc.network.nodes().len(),
                sc.network.links().len(),
                sc.demand.ods.len(),
                sc.demand.total_vehicles()
            );
        }
        Command::Equilibrate { scenario, so_ratio, out } => {
            let sc = load(&scenario, g, so_ratio.map(|r| vec![r]))?;
            let dir = out_dir(out, &sc);
            let m = run_scenario(&sc, &dir, &options(false))?;
            report(&dir, m.files.len())?;
        }
        Command::Nfd { run_dir, zone: _, network } => {
            let (series, c) = nfd_from_run_dir(&run_dir, !network)?;
            let stdout = std::io::stdout();
            write_nfd(&series, stdout.lock())?;
            eprintln!(
                "k_cr_veh_km={:.4} q_max_veh_h={:.4} interval={} low_confidence={}",
                c.k_cr, c.q_max, c.interval, c.low_confidence
            );
        }
        Command::Price { scenario, out } => {
            let sc = load(&scenario, g, None)?;
            if sc.scenario.toll.is_none() {
                bail!("scenario {} has no toll section", scenario.display());
            }
            let dir = out_dir(out, &sc);
            let m = run_scenario(&sc, &dir, &options(true))?;
            report(&dir, m.files.len())?;
        }
        Command::Sweep { scenario, ratios, out } => {
            let sc = load(&scenario, g, Some(ratios))?;
            let dir = out_dir(out, &sc);
            run_scenario(&sc, &dir, &options(true))?;
            let text = std::fs::read(dir.join("metrics.csv")).context("reading metrics")?;
            std::io::stdout().write_all(&text)?;
        }
        Command::Nguyen { out } => {
            for p in write_nguyen_bundle(&out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn report(dir: &Path, files: usize) -> Result<()> {
    println!("wrote {files} files to {}", dir.display());
    let text = std::fs::read(dir.join("metrics.csv")).context("reading metrics")?;
    std::io::stdout().write_all(&text)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
