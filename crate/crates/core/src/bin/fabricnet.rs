use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fabricnet::cli::{
    cmd_confuse, cmd_eval, cmd_gen, cmd_ingest, cmd_train, exit_code, with_workers, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "fabricnet",
    version,
    about = "Cross-modal fabric embedding experiments"
)]
struct Args {
    /// `key = value` config file; missing keys take their defaults.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.iterations=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Evaluation threads (0 = one per core).
    #[arg(long, default_value_t = 0, global = true)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen,
    /// Build a dataset from a directory of PNM images.
    Ingest { root: PathBuf },
    /// Train a model.
    Train,
    /// Retrieval precision over all modality pairs.
    Eval,
    /// Confusion matrix, heatmap and cluster-level matrix.
    Confuse,
    /// Print the resolved config.
    Config,
}

fn run(args: Args) -> fabricnet::Result<()> {
    let mut text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| fabricnet::Error::Io {
            path: p.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    for o in &args.overrides {
        text.push('\n');
        text.push_str(o);
    }
    let cfg = RunConfig::parse(&text)?;
    match args.command {
        Command::Gen => {
            let d = cmd_gen(&cfg)?;
            println!(
                "wrote {} ({} fabrics, {} observations)",
                cfg.paths.dataset.display(),
                d.fabrics.len(),
                d.observations.len()
            );
        }
        Command::Ingest { root } => {
            let out = cmd_ingest(&cfg, &root)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} ({} fabrics, {} observations)",
                cfg.paths.dataset.display(),
                out.dataset.fabrics.len(),
                out.dataset.observations.len()
            );
        }
        Command::Train => {
            let (_, history) = cmd_train(&cfg)?;
            match history.last() {
                Some(l) => println!("final mean batch loss {l:.6}"),
                None => println!("no iterations run"),
            }
            println!("wrote {}", cfg.paths.checkpoint.display());
        }
        Command::Eval => {
            let report = with_workers(args.workers, || cmd_eval(&cfg))??;
            for c in &report.cells {
                let ks: Vec<String> = c
                    .topk
                    .iter()
                    .map(|(k, p)| format!("top{k} {p:.4}"))
                    .collect();
                println!("{} -> {}: {}", c.query, c.candidate, ks.join("  "));
            }
            println!("wrote {}", cfg.paths.report.display());
        }
        Command::Confuse => {
            let m = cmd_confuse(&cfg)?;
            println!(
                "wrote {}x{} matrix to {}, {}, {}",
                m.size(),
                m.size(),
                cfg.paths.confusion.display(),
                cfg.paths.heatmap.display(),
                cfg.paths.cluster_confusion.display()
            );
        }
        Command::Config => print!("{}", cfg.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
