use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod data;
mod fail;
mod output;
mod probe;
mod recover;
mod seg;

/// Seed used by every randomized command unless `--seed` is given.
pub const DEFAULT_SEED: u64 = 13;

#[derive(Debug, Parser)]
#[command(
    name = "blendkit",
    version,
    about = "Lexical blend segmentation, base recovery and probing"
)]
struct Cli {
    /// Worker threads for per-record work (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every corpus line and report problems.
    Validate(data::ValidateArgs),
    /// Corpus summary counts as JSON.
    Stats(data::StatsArgs),
    /// Segment every corpus word with one system.
    Segment(seg::SegmentArgs),
    /// Train a BPE model on raw text.
    TrainBpe(seg::TrainSubwordArgs),
    /// Train a unigram LM tokenizer on raw text.
    TrainUnigram(seg::TrainSubwordArgs),
    /// Train or apply the PAXOBS tagger.
    #[command(subcommand)]
    Tagger(seg::TaggerCommand),
    /// Score segmentations against gold labelings.
    EvalSeg(seg::EvalSegArgs),
    /// Build candidate base lists for each blend.
    GenCandidates(recover::GenCandidatesArgs),
    /// Rank candidate bases.
    Rank(recover::RankArgs),
    /// Train a character n-gram LM for the charlm ranker.
    TrainCharlm(recover::TrainCharlmArgs),
    /// Score rankings with MRR and P@1.
    EvalRecovery(recover::EvalRecoveryArgs),
    /// Layer-wise similarity between words and their bases.
    Probe(probe::ProbeArgs),
    /// Turn two-base compounds into mock blends.
    Smoothie(data::SmoothieArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Corpus JSONL file.
    #[arg(long, alias = "in")]
    pub corpus: PathBuf,
}

fn run(cli: Cli) -> fail::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(fail::usage)?;
    match cli.command {
        Command::Validate(a) => data::validate(a),
        Command::Stats(a) => data::stats(a),
        Command::Segment(a) => seg::segment(a),
        Command::TrainBpe(a) => seg::train_bpe(a),
        Command::TrainUnigram(a) => seg::train_unigram(a),
        Command::Tagger(c) => seg::tagger(c),
        Command::EvalSeg(a) => seg::eval_seg(a),
        Command::GenCandidates(a) => recover::gen_candidates(a),
        Command::Rank(a) => recover::rank(a),
        Command::TrainCharlm(a) => recover::train_charlm(a),
        Command::EvalRecovery(a) => recover::eval_recovery(a),
        Command::Probe(a) => probe::probe(a),
        Command::Smoothie(a) => data::smoothie(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { fail::Kind::Usage as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("blendkit: {f}");
            ExitCode::from(f.kind as u8)
        }
    }
}

pub fn load(path: &std::path::Path) -> anyhow::Result<Vec<blendkit::ComplexWordRecord>> {
    use anyhow::Context;
    blendkit::dataset::load_corpus(path).with_context(|| format!("loading {}", path.display()))
}
