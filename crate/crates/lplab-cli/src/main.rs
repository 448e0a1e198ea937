use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lplab::labcli::{
    configure_threads, convergence_report, load_report, run_experiment_with_cache, simulate_to_cache, write_outputs,
    write_summary, ExperimentConfig, Status,
};
use lplab::scaling::{classify, is_long_memory, limit_constants, scaling_factor, ConstantsOptions, Region};
use lplab::{LabError, Result};

/// Monte Carlo lab for limit theorems of functionals of heavy-tailed linear processes.
#[derive(Parser)]
#[command(name = "labcli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for replicate parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
            if let Some(t) = cfg.theta.as_mut() {
                t.seed = s;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the region and the memory verdict.
    Classify(ConfigArgs),
    /// Print the A_N table over the N grid.
    Scale(ConfigArgs),
    /// Print the limit constants as JSON.
    Constants(ConfigArgs),
    /// Simulate the N grid and write the path cache.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        cache: PathBuf,
    },
    /// Run the full experiment and write report.json, table.csv and timing.json.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Merge report.json files into summary.json and table.csv.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_for(status: Status) -> u8 {
    match status {
        Status::Pass | Status::OutOfScope => 0,
        Status::Fail => 1,
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(LabError::config("--threads must be at least 1"));
        }
        configure_threads(n)?;
    }
    match cli.command {
        Command::Classify(a) => {
            let cfg = a.load()?;
            let spec = cfg.process.build_infinite()?;
            let region = classify(&spec, &cfg.kernel)?;
            let long = is_long_memory(spec.alpha(), spec.ell(), &spec.model().spec().h)?;
            println!("region: {}", region.label());
            if let Region::OutOfScope { reason } = &region {
                println!("reason: {reason}");
            }
            println!("memory: {}", if long { "long" } else { "short" });
            Ok(0)
        }
        Command::Scale(a) => {
            let cfg = a.load()?;
            let spec = cfg.process.build_infinite()?;
            let region = classify(&spec, &cfg.kernel)?;
            if let Region::OutOfScope { reason } = &region {
                println!("out of scope: {reason}");
                return Ok(0);
            }
            println!("N,J,A_N");
            for &n in &cfg.n_grid {
                println!("{n},{},{:.9e}", cfg.process.horizon_for(n), scaling_factor(&region, &spec, n as f64)?);
            }
            Ok(0)
        }
        Command::Constants(a) => {
            let cfg = a.load()?;
            let spec = cfg.process.build_infinite()?;
            let region = classify(&spec, &cfg.kernel)?;
            let ls = limit_constants(&region, &spec, &cfg.kernel, &ConstantsOptions { theta: cfg.theta_config() })?;
            println!("{}", serde_json::to_string_pretty(&ls)?);
            Ok(0)
        }
        Command::Simulate { cfg, cache } => {
            let cfg = cfg.load()?;
            for f in simulate_to_cache(&cfg, &cache)? {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Verify { cfg, out, cache } => {
            let cfg = cfg.load()?;
            let run = run_experiment_with_cache(&cfg, cache.as_deref())?;
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(&cfg.id));
            write_outputs(&dir, &run.report, Some(&run.timing))?;
            let r = &run.report;
            println!("{} [{}]: {}", r.config_id, r.region.label(), r.overall.label());
            if let Some(e) = &r.explanation {
                println!("  {e}");
            }
            for v in &r.verdicts {
                println!("  {} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            println!("wrote {} ({:.1} s)", dir.display(), run.timing.total_secs);
            Ok(exit_for(r.overall))
        }
        Command::Report { reports, out } => {
            let loaded = reports.iter().map(|p| load_report(p)).collect::<Result<Vec<_>>>()?;
            let (summary, csv) = convergence_report(&loaded)?;
            write_summary(&out, &summary, &csv)?;
            println!("overall: {}", summary.overall.label());
            for f in &summary.failing {
                println!("  failing {f}");
            }
            Ok(exit_for(summary.overall))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
