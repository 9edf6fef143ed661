use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mwlab::harness::{self, Experiment, ExperimentConfig, RunError, EXIT_CONFIG};

/// Runs one mwlab experiment from a JSON config.
#[derive(Parser, Debug)]
#[command(name = "mwlab", version)]
struct Cli {
    /// a2h, riesz_norm, lp, duality, martingale, bellman_sweep or full_sweep
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's out_dir, else ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's root seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also rerun at doubled resolution and report drift
    #[arg(long)]
    refine: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let experiment = Experiment::from_name(&cli.experiment)
        .ok_or_else(|| RunError::config(format!("unknown experiment '{}'", cli.experiment)))?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| RunError::config(format!("reading {}: {e}", cli.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(|e| RunError::config(e.to_string()))?;
    if cfg.experiment != experiment {
        return Err(RunError::config(format!(
            "config is for '{}', command line asks for '{}'",
            cfg.experiment.name(),
            experiment.name()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    // relative paths in the config are relative to the config file
    if let (Some(path), Some(base)) = (&cfg.weight_file, cli.config.parent()) {
        if path.is_relative() {
            cfg.weight_file = Some(base.join(path));
        }
    }
    Ok(cfg)
}

fn real_main(cli: Cli) -> Result<(), RunError> {
    let cfg = load(&cli)?;
    let out = cli.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let summary = harness::run(&cfg, &out)?;
    println!("{} {} -> {}", cfg.experiment.name(), summary.manifest.config_hash, out.display());
    for (k, v) in &summary.manifest.headline {
        println!("  {k} = {v}");
    }
    for (name, fit) in &summary.manifest.fits {
        println!("  fit {name}: c = {} (residual {}, {} pairs used)", fit.fitted_c, fit.residual, fit.used);
    }
    if cli.refine {
        let report = harness::stability_check(&cfg)?;
        let path = out.join("stability.json");
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(&path, text).map_err(|e| RunError {
            exit_code: harness::EXIT_NUMERIC,
            message: format!("writing {}: {e}", path.display()),
        })?;
        println!(
            "  stability: max drift {} (tolerance {}) {}",
            report.max_drift,
            report.tolerance,
            if report.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mwlab: {e}");
            ExitCode::from(e.exit_code as u8)
        }
    }
}
