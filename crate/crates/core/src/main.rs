use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use graphent::experiments::{self, ExperimentConfig, Grid, Mode};
use graphent::Error;

/// Entanglement of noisy graph states: exact values for Pauli noise, bounds otherwise.
#[derive(Debug, Parser)]
#[command(name = "graphent", version)]
struct Cli {
    /// Graph preset (chain:N, ring:N, star:N), edge-list file, or random:K for oracle-check.
    #[arg(long)]
    graph: Option<String>,
    /// Comma-separated part labels per vertex, or one-vs-rest:K.
    #[arg(long)]
    partition: Option<String>,
    /// Channel spec, e.g. depol:p, ad:p, gad:1.5:p, gad:inf:p, diffusive:p.
    #[arg(long)]
    channel: Option<String>,
    /// Sweep grid `start:stop:count`, or a single value.
    #[arg(long)]
    p_grid: Option<Grid>,
    /// Measurement-angle grid for theta-scan, e.g. 0:pi/2:33.
    #[arg(long)]
    theta_grid: Option<Grid>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Run a named figure preset (see --list-presets).
    #[arg(long, conflicts_with_all = ["graph", "partition", "channel", "mode", "config"])]
    preset: Option<String>,
    /// Load the run from a JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for `<run>.csv` and `<run>.meta.json`; CSV goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    list_presets: bool,
}

fn configs(cli: &Cli) -> Result<Vec<ExperimentConfig>, Error> {
    let mut runs = if let Some(name) = &cli.preset {
        let mut runs = experiments::preset(name)?.runs;
        for r in &mut runs {
            if let Some(g) = cli.p_grid {
                r.p_grid = g;
            }
            if let Some(t) = cli.theta_grid {
                r.theta_grid = Some(t);
            }
        }
        runs
    } else if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = ExperimentConfig::from_json(&text)?;
        if let Some(g) = cli.p_grid {
            c.p_grid = g;
        }
        if let Some(t) = cli.theta_grid {
            c.theta_grid = Some(t);
        }
        vec![c]
    } else {
        let missing = |what: &str| Error::Config(format!("--{what} is required without --preset or --config"));
        let graph = cli.graph.as_deref().ok_or_else(|| missing("graph"))?;
        let channel = cli.channel.as_deref().ok_or_else(|| missing("channel"))?;
        let mode = cli.mode.ok_or_else(|| missing("mode"))?;
        let partition = cli.partition.as_deref().unwrap_or("one-vs-rest:0");
        let mut c = ExperimentConfig::new("run", graph, partition, channel, mode)?;
        if let Some(g) = cli.p_grid {
            c.p_grid = g;
        }
        c.theta_grid = cli.theta_grid;
        vec![c]
    };
    for r in &mut runs {
        if cli.jobs.is_some() {
            r.jobs = cli.jobs;
        }
        if cli.out.is_some() {
            r.out = cli.out.clone();
        }
        r.seed = cli.seed.unwrap_or(r.seed);
        r.validate()?;
    }
    Ok(runs)
}

fn real_main(cli: &Cli) -> Result<(), Error> {
    if cli.list_presets {
        print!("{}", experiments::list_presets());
        return Ok(());
    }
    let runs = configs(cli)?;
    let many = runs.len() > 1;
    for config in &runs {
        log::info!("running {} (seed {})", config.name, config.seed);
        let output = experiments::run(config)?;
        match &config.out {
            Some(dir) => {
                let (csv, meta) = experiments::write_output(&output, dir)?;
                eprintln!("wrote {} and {}", csv.display(), meta.display());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                if many {
                    writeln!(stdout, "# {}", output.name)?;
                }
                stdout.write_all(output.csv.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_limit() { 3 } else { 2 })
        }
    }
}
