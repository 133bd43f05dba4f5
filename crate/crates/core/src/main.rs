use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lifelong_mc::harness::{self, Algorithm, RunConfig};
use lifelong_mc::Error;

#[derive(Parser)]
#[command(name = "lifelong-mc", version, about = "Streaming matrix completion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance and write its matrices and metadata
    Gen(Common),
    /// Run independent trials and write per-trial results
    Run(Common),
    /// Success fraction over a grid of rank and sample ratios
    Sweep(Common),
    /// Full-span versus sparse recovery on mixture instances
    CompareMixture(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the trial count
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn load(&self) -> lifelong_mc::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(cli: &Cli) -> lifelong_mc::Result<()> {
    match &cli.command {
        Command::Gen(c) => {
            for p in harness::cmd_gen(&c.load()?)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            let s = harness::cmd_run(&cfg)?;
            println!(
                "{} trials, {} successes, {:.3} s",
                s.outcomes.len(),
                s.successes,
                s.wall_time
            );
            for p in &s.written {
                println!("wrote {}", p.display());
            }
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let s = harness::cmd_sweep(&cfg)?;
            println!("{} cells, {:.3} s", s.cells.len(), s.wall_time);
            println!("wrote {}", cfg.out.display());
        }
        Command::CompareMixture(c) => {
            let cfg = c.load()?;
            let s = harness::cmd_compare_mixture(&cfg)?;
            let show = |a| {
                s.threshold(a, 0.9)
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "none".into())
            };
            println!(
                "d at 0.9 success: exact {}, mixture {} ({:.3} s)",
                show(Algorithm::Exact),
                show(Algorithm::Mixture),
                s.wall_time
            );
            println!("wrote {}", cfg.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Csv(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
