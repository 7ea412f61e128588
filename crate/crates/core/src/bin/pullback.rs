use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pullback::config::{builtin, RunConfig, BUILTIN_NAMES};
use pullback::noise::sample_path;
use pullback::{ou, runner};

#[derive(Parser)]
#[command(name = "pullback", about = "Pullback-attractor estimation for monotone SPDE with Levy noise", version)]
struct Cli {
    /// Rayon thread count (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Select {
    /// Builtin experiment name (see `list`).
    #[arg(long, conflicts_with = "config")]
    experiment: Option<String>,
    /// Path to a JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the builtin experiments.
    List,
    /// Print what an experiment models and its full configuration.
    Describe(Select),
    /// Run the condition checks and admissibility gates only.
    Check(Select),
    /// Build the stationary section and report its depth and gap.
    Ou(Select),
    /// Full pipeline: checks, section, flow self-tests, absorption,
    /// attractor estimate; writes artifacts and a manifest.
    Run {
        #[command(flatten)]
        select: Select,
        /// Output directory for artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Alias for `run` that prints only the attractor portion.
    Attractor {
        #[command(flatten)]
        select: Select,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(sel: &Select) -> Result<RunConfig, String> {
    let mut cfg = match (&sel.experiment, &sel.config) {
        (Some(name), None) => {
            builtin(name).ok_or_else(|| format!("unknown experiment `{name}`; try `pullback list`"))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        _ => return Err("pass exactly one of --experiment or --config".into()),
    };
    if let Some(seed) = sel.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .expect("rayon pool");
    }
    match dispatch(cli.cmd) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<bool, String> {
    match cmd {
        Cmd::List => {
            for name in BUILTIN_NAMES {
                let cfg = builtin(name).unwrap();
                println!("{name:12} {}", cfg.description);
            }
            Ok(true)
        }
        Cmd::Describe(sel) => {
            let cfg = load(&sel)?;
            println!("{}: {}", cfg.experiment, cfg.description);
            println!("config hash: {}", cfg.hash_hex());
            println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
            Ok(true)
        }
        Cmd::Check(sel) => {
            let cfg = load(&sel)?;
            let prep = runner::prepare(&cfg).map_err(|e| e.to_string())?;
            let cert = runner::certify_config(&cfg, &prep).map_err(|e| e.to_string())?;
            for e in &cert.report.entries {
                println!(
                    "{} {:28} worst_margin={:+.3e} samples={}",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.name,
                    e.worst_margin,
                    e.n_samples
                );
            }
            for g in &cert.gates {
                println!(
                    "{} gate {:32} value={:.6} bound={:.6}",
                    if g.pass { "PASS" } else { "FAIL" },
                    g.gate,
                    g.value,
                    g.bound
                );
            }
            if let Some(c) = cert.report.c_mono_est {
                println!("c_mono_est = {c:.6}");
            }
            Ok(cert.report.pass && cert.gates.iter().all(|g| g.pass))
        }
        Cmd::Ou(sel) => {
            let cfg = load(&sel)?;
            let prep = runner::prepare(&cfg).map_err(|e| e.to_string())?;
            let path = sample_path(&cfg.noise, cfg.seed).map_err(|e| e.to_string())?;
            let section = ou::stationary_section(&prep.m, &cfg.ou_config(), &path, cfg.section_window())
                .map_err(|e| e.to_string())?;
            println!(
                "stationary section on [{}, {}]: converged at depth {} with sup-gap {:.3e} (tol {:.1e})",
                section.window().0,
                section.window().1,
                section.depth,
                section.gap,
                cfg.ou.cauchy_tol
            );
            Ok(true)
        }
        Cmd::Run { select, out } | Cmd::Attractor { select, out } => {
            let cfg = load(&select)?;
            let summary = runner::run(&cfg, &out).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            println!("artifacts written to {}", out.display());
            Ok(summary.pass)
        }
    }
}
