use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use guidewave::checks::run_checks;
use guidewave::config::Config;
use guidewave::floquet::Side;
use guidewave::layout::Layout;
use guidewave::pipeline::{guide_modes, run_convergence, run_solve, Reference};
use guidewave::Result;

#[derive(Parser)]
#[command(
    name = "guidewave",
    version,
    about = "Scattering through a junction of periodic waveguides"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write the field, plot data and manifest.
    Solve {
        config: PathBuf,
        /// Output directory; defaults to `output.dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative L² error of the closure for several strip counts.
    Converge {
        config: PathBuf,
        #[arg(long = "M", value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// `self` (richest closure) or `lap` (absorbing reference).
        #[arg(long = "ref", default_value = "self")]
        reference: String,
        /// Strip count of the self reference.
        #[arg(long = "ref-m", default_value_t = 10)]
        ref_m: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mode-basis cache directory.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Dump an outgoing mode family as JSON.
    Modes {
        config: PathBuf,
        #[arg(long, default_value = "plus")]
        side: Side,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Check,
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = Config::load(&config)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let manifest = run_solve(&cfg, &out)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for s in &manifest.sides {
                println!(
                    "{} side: {} modes ({} propagating), gram condition {:.3e}",
                    s.side.name(),
                    s.modes,
                    s.propagating,
                    s.gram_condition
                );
            }
            println!("{} dofs, outputs in {}", manifest.mesh.dofs, out.display());
            Ok(true)
        }
        Command::Converge {
            config,
            m,
            reference,
            ref_m,
            out,
            cache,
        } => {
            let cfg = Config::load(&config)?;
            let reference = match reference.parse::<Reference>()? {
                Reference::SelfRichest(_) => Reference::SelfRichest(ref_m),
                r => r,
            };
            let table = run_convergence(&cfg, &m, reference, cache.as_deref())?;
            write_or_print(out.as_ref(), &table.to_csv())?;
            Ok(true)
        }
        Command::Modes { config, side, out } => {
            let cfg = Config::load(&config)?;
            let layout = Layout::new(&cfg)?;
            // Each side's outgoing family lives in the guide on that side.
            let guide = match side {
                Side::Plus => &layout.right,
                Side::Minus => &layout.left,
            };
            let modes = guide_modes(
                guide,
                cfg.wavenumber,
                cfg.truncation.n,
                cfg.truncation.m,
                &cfg.tolerances,
                cfg.eigensolver.backend,
                None,
            )?;
            let basis = match side {
                Side::Plus => modes.plus,
                Side::Minus => modes.minus,
            };
            write_or_print(
                out.as_ref(),
                &(serde_json::to_string_pretty(&basis.to_document())? + "\n"),
            )?;
            Ok(true)
        }
        Command::Check => {
            let results = run_checks();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    faer::set_global_parallelism(faer::Par::Seq);
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
