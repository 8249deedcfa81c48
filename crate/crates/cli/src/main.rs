//! `triplewalk`: triple and edge embeddings via weighted line-graph walks.

mod config;
mod pipeline;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::RawOptions;

#[derive(Parser)]
#[command(
    name = "triplewalk",
    about = "Learn triple/edge embeddings from (knowledge) graphs via weighted line-graph walks",
    version
)]
struct Cli {
    /// Config file with `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    options: RawOptions,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: build, weigh, walk, embed, evaluate.
    Run {
        /// Skip stages whose artifacts already exist.
        #[arg(long)]
        resume: bool,
    },
    /// Build the (triple) line graph and its node map.
    BuildLineGraph,
    /// Weight the line graph edges (relatedness, centrality, or uniform).
    Weigh,
    /// Generate the weighted random-walk corpus.
    Walk,
    /// Train skip-gram embeddings on the walk corpus.
    Embed,
    /// Classify labeled line nodes with one-vs-rest logistic regression.
    EvalClassify,
    /// Cluster line-node embeddings with k-means and score NMI.
    EvalCluster,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut raw = cli.options;
    if let Some(path) = &cli.config {
        config::merge_config_file(&mut raw, path)?;
    }
    let opts = raw.resolve()?;

    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build_global()
        .ok();

    match cli.command {
        Command::Run { resume } => pipeline::run_pipeline(&opts, resume),
        Command::BuildLineGraph => pipeline::stage_build_line_graph(&opts),
        Command::Weigh => pipeline::stage_weigh(&opts),
        Command::Walk => pipeline::stage_walk(&opts),
        Command::Embed => pipeline::stage_embed(&opts),
        Command::EvalClassify => pipeline::stage_eval_classify(&opts),
        Command::EvalCluster => pipeline::stage_eval_cluster(&opts),
    }
}
