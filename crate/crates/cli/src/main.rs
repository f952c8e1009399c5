use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use vdv_core::carleman::build_vandevusse;
use vdv_core::experiments::{emit_charts, emit_csv, run_scenario, Methods, Scenario};
use vdv_core::validation;

/// Carleman moment propagation for the stochastic van de Vusse reactor.
#[derive(Parser)]
#[command(name = "vdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV, JSON and SVG artifacts.
    Run {
        /// `builtin:set1`, `builtin:set2` or a JSON scenario file.
        #[arg(long, default_value = "builtin:set1")]
        scenario: String,
        /// Comma-separated subset of carleman, ekf, mc.
        #[arg(long, default_value = "carleman,ekf,mc")]
        methods: Methods,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        mc_paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads for the Monte-Carlo ensemble (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a built-in scenario as JSON.
    DumpScenario { name: String },
    /// Print the bilinear system blocks of a scenario.
    Matrices {
        #[arg(long, default_value = "builtin:set1")]
        scenario: String,
    },
    /// Run the acceptance suite; exits nonzero if any check fails.
    Validate {
        /// Scratch directory for the determinism check (default: a temporary directory).
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            methods,
            dt,
            t_end,
            mc_paths,
            seed,
            out,
            threads,
        } => {
            let mut s = Scenario::resolve(&scenario)?;
            if let Some(dt) = dt {
                s.dt = dt;
            }
            if let Some(t_end) = t_end {
                s = s.truncated(t_end);
            }
            if let Some(n) = mc_paths {
                s.mc_paths = n;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                pool = pool.num_threads(n);
            }
            let pool = pool.build().context("building thread pool")?;
            log::info!("running {} with methods [{methods}]", s.name);
            let report = pool.install(|| run_scenario(&s, methods))?;
            let mut files = emit_csv(&report, &out)?;
            files.extend(emit_charts(&report, &out)?);
            for f in &files {
                println!("{}", f.display());
            }
        }
        Command::DumpScenario { name } => {
            let name = name.strip_prefix("builtin:").unwrap_or(&name);
            println!("{}", Scenario::builtin(name)?.to_json());
        }
        Command::Matrices { scenario } => {
            let s = Scenario::resolve(&scenario)?;
            print!("{}", build_vandevusse(&s.params).dump_blocks());
        }
        Command::Validate { work_dir } => {
            let scratch = work_dir.is_none();
            let dir = work_dir.unwrap_or_else(|| {
                std::env::temp_dir().join(format!("vdv-validate-{}", std::process::id()))
            });
            let checks = validation::run_all(&dir);
            if scratch {
                let _ = std::fs::remove_dir_all(&dir);
            }
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", checks.len() - failed);
            if failed > 0 {
                bail!("{failed} acceptance check(s) failed");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
