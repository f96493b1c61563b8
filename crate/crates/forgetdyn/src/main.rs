use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use forgetdyn::commands;

/// Forgetting-event heat maps, density rankings and augmentation experiments.
#[derive(Parser)]
#[command(name = "forgetdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count per-pixel forgetting events from per-epoch prediction masks.
    Track {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Truth label excluded from counting (overrides the manifest).
        #[arg(long)]
        ignore_label: Option<u8>,
    },
    /// Rank heat maps by forgetting density of one class.
    Rank {
        #[arg(long)]
        heatmaps: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long = "class")]
        class_id: u8,
        #[arg(long, default_value_t = usize::MAX)]
        top: usize,
        /// Output CSV, or `-` for stdout.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a heat map with a blue-to-red palette.
    Render {
        #[arg(long)]
        heatmap: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "diverging")]
        palette: String,
    },
    /// Run the augmentation comparison on the synthetic volume.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track {
            manifest,
            out,
            ignore_label,
        } => commands::track(&manifest, &out, ignore_label).map(drop),
        Command::Rank {
            heatmaps,
            labels,
            class_id,
            top,
            out,
        } => commands::rank(&heatmaps, &labels, class_id, top, &out).map(drop),
        Command::Render {
            heatmap,
            out,
            palette,
        } => commands::render(&heatmap, &out, &palette),
        Command::Experiment { config, out } => commands::experiment(&config, &out).map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("forgetdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
