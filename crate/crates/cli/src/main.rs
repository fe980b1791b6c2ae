mod args;
mod config;
mod error;
mod output;
mod report;

use std::process::ExitCode;

use clap::Parser;

use policy_response::synthetic::{generate, SyntheticConfig};

use args::{Cli, Command};
use config::RunConfig;
use error::CliError;
use report::Run;

fn synth(countries: usize, seed: u64, dir: &std::path::Path, cfg: &args::Options) -> Result<(), CliError> {
    let window = policy_response::AnalysisWindow::new(cfg.window_start, cfg.window_end)
        .map_err(|e| CliError::Config(format!("--window-start/--window-end: {e}")))?;
    if countries < 2 {
        return Err(CliError::Config("--countries must be at least 2".into()));
    }
    let files = generate(&SyntheticConfig { countries, seed, window, ..SyntheticConfig::default() });
    std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    let paths = files.write_to(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    println!("mobility\t{}", paths.mobility.display());
    println!("stringency\t{}", paths.stringency.display());
    for (role, p) in [
        ("continents", &paths.continents),
        ("population", &paths.population),
        ("neighbors", &paths.neighbors),
        ("boundaries", &paths.boundaries),
    ] {
        if let Some(p) = p {
            println!("{role}\t{}", p.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Synth { countries, synth_seed, dir } = &cli.command {
        return synth(*countries, *synth_seed, dir, &cli.opts);
    }
    let cfg = RunConfig::from_options(&cli.opts)?;
    let mut run = Run::load(&cfg)?;
    let name = match &cli.command {
        Command::IngestCheck => {
            run.ingest_check()?;
            "ingest-check"
        }
        Command::Similarity => {
            run.similarity()?;
            "similarity"
        }
        Command::Lag => {
            run.lag()?;
            "lag"
        }
        Command::Subregion => {
            run.subregion()?;
            "subregion"
        }
        Command::Spatial => {
            run.spatial()?;
            "spatial"
        }
        Command::Embed => {
            run.embed()?;
            "embed"
        }
        Command::Correlate => {
            run.correlate()?;
            "correlate"
        }
        Command::ReportAll => {
            run.ingest_check()?;
            run.similarity()?;
            run.lag()?;
            run.subregion()?;
            run.measures()?;
            run.spatial()?;
            run.embed()?;
            run.correlate()?;
            "report-all"
        }
        Command::PlotData { country } => {
            run.plot_data(country)?;
            "plot-data"
        }
        Command::Synth { .. } => unreachable!("handled above"),
    };
    let dir = run.out.dir().to_path_buf();
    run.finish(name)?;
    log::info!("{name}: artifacts written to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
