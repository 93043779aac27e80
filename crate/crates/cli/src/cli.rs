use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::BlockKind;

#[derive(Debug, Parser)]
#[command(
    name = "splinter",
    version,
    about = "Root-and-template pre-tokenization pipeline"
)]
pub struct Cli {
    /// Pipeline config file (TOML). Flags override its values.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Language profile: a built-in name or a profile TOML path.
    #[arg(long, global = true)]
    pub profile: Option<String>,

    /// Directory for pipeline artifacts.
    #[arg(long, global = true)]
    pub work_dir: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log debug messages.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct BeamArgs {
    /// Children kept per node of the selection tree.
    #[arg(long)]
    pub breadth: Option<usize>,
    /// Levels of the selection tree.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count normalized words of the corpus into a frequency table.
    BuildFreq {
        #[arg(long = "input", short)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Train a reduction map from a frequency table.
    TrainMap {
        #[arg(long)]
        freq: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Store raw non-negative positions.
        #[arg(long)]
        unsigned: bool,
    },
    /// Write the composite alphabet covering a map.
    ExportAlphabet {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        block: Option<BlockKind>,
    },
    /// Rewrite text with splintered words.
    Splinter {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        alphabet: Option<PathBuf>,
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        beam: BeamArgs,
    },
    /// Restore text written by `splinter`.
    Unsplinter {
        #[arg(long)]
        alphabet: Option<PathBuf>,
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train a BPE model.
    TrainBpe {
        #[arg(long = "input", short, required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        vocab_size: usize,
        #[arg(long = "special")]
        special_tokens: Vec<String>,
    },
    /// Segment text with a BPE model into the tokenized-corpus format.
    Tokenize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Compute metrics for every (arm, vocab size) model in the work directory.
    Eval,
    /// Vocabulary intersection curve over the configured vocab sizes.
    CompareVocabs,
    /// Run every stage from the config.
    Pipeline,
    /// Print the resolved configuration.
    ShowConfig,
}
