use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fraclevy_cli::verify::{self, Suite};
use fraclevy_cli::{config, manifest, plotdata, run};

#[derive(Parser)]
#[command(name = "fraclevy", version, about = "Fractional Lévy noise experiments and checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root; the run directory is created inside it.
        #[arg(long, env = "FRACLEVY_OUT", default_value = "runs")]
        out: PathBuf,
    },
    /// Run property suites, or audit a run directory against its manifest.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Config whose `solver.tolerances` override the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Audit this run directory instead of running suites.
        #[arg(long, conflicts_with_all = ["suite", "config", "seed"])]
        run: Option<PathBuf>,
    },
    /// Write plot-ready CSVs for a finished run.
    EmitPlotdata {
        run_dir: PathBuf,
        /// Defaults to RUN_DIR/plot.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run { config, seed, out } => {
            let cfg = config::load(&config, seed)?;
            let res = run::execute(&cfg, &out)?;
            println!("{}", res.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { run: Some(dir), out, .. } => {
            let findings = manifest::audit(&dir)?;
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "run": dir,
                "intact": findings.is_empty(),
                "findings": findings,
            }))?;
            emit_report(&body, out.as_deref())?;
            for f in &findings {
                eprintln!("{f}");
            }
            Ok(if findings.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Verify { suite, config, seed, out, run: None } => {
            let mut opts = verify::Options::default();
            if let Some(path) = config {
                opts.tolerances = config::Config::from_path(&path)?.solver.tolerances;
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            let report = verify::run(suite, &opts);
            for c in &report.checks {
                eprintln!("[{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.value);
            }
            emit_report(&serde_json::to_string_pretty(&report)?, out.as_deref())?;
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::EmitPlotdata { run_dir, out } => {
            for p in plotdata::emit(&run_dir, out.as_deref())? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit_report(body: &str, out: Option<&std::path::Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{body}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}
