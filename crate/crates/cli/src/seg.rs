use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use blendkit::dataset::{ComplexWordRecord, Segmentation};
use blendkit::jsonl::{read_jsonl, write_jsonl};
use blendkit::segeval::{aggregate, format_table_tsv, score_segmentation, SegTableRow};
use blendkit::segment::{AllChars, Segmenter, SubwordSegmenter};
use blendkit::subword::{BpeModel, UnigramLmModel, WordCounts, WordPieceVocab};
use blendkit::tagger::{train_tagger, TaggerConfig, TaggerModel, DEFAULT_EPOCHS};
use blendkit::text::Normalizer;
use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fail::{usage, Result};
use crate::output::{emit, with_suffix, Staged};
use crate::{CorpusArg, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    Allchars,
    Tagger,
    Wordpiece,
    Bpe,
    Unigram,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Segmentation system.
    #[arg(long, value_enum)]
    pub system: Option<System>,
    /// Model file for tagger, wordpiece, bpe and unigram.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// WordPiece falls back to single characters instead of failing.
    #[arg(long)]
    pub char_fallback: bool,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub system: SystemArgs,
    /// Predictions JSONL; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainSubwordArgs {
    /// Raw training text.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long, default_value_t = blendkit::subword::DEFAULT_VOCAB_SIZE)]
    pub vocab_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum TaggerCommand {
    /// Train on the corpus labelings.
    Train {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPOCHS)]
        epochs: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Label words read one per line.
    Tag {
        #[arg(long)]
        model: PathBuf,
        /// Word list; stdin when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EvalSegArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub system: SystemArgs,
    /// Score a predictions file instead of running a system.
    #[arg(long, conflicts_with = "system")]
    pub predictions: Option<PathBuf>,
    /// Row label in the table.
    #[arg(long)]
    pub name: Option<String>,
    /// Writes PREFIX.tsv and PREFIX.json.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

/// One predicted segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub surface: String,
    pub cuts: Vec<usize>,
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn load_segmenter(args: &SystemArgs) -> Result<Box<dyn Segmenter>> {
    let system = args
        .system
        .ok_or_else(|| usage("--system or --predictions is required"))?;
    let model = || {
        args.model
            .as_deref()
            .ok_or_else(|| usage(format!("--system {system:?} needs --model").to_lowercase()))
    };
    Ok(match system {
        System::Allchars => Box::new(AllChars),
        System::Tagger => Box::new(TaggerModel::read_json(open(model()?)?)?),
        System::Wordpiece => Box::new(SubwordSegmenter::new(
            "wordpiece",
            WordPieceVocab::read(open(model()?)?)?.with_char_fallback(args.char_fallback),
        )),
        System::Bpe => Box::new(SubwordSegmenter::new("bpe", BpeModel::read(open(model()?)?)?)),
        System::Unigram => Box::new(SubwordSegmenter::new("unigram", UnigramLmModel::read(open(model()?)?)?)),
    })
}

/// Segments each normalized surface form, sorted by id.
fn predict(records: &[ComplexWordRecord], seg: &dyn Segmenter) -> Result<Vec<Prediction>> {
    let norm = Normalizer::default();
    let mut preds = records
        .par_iter()
        .map(|r| {
            let word = norm.apply(r.surface());
            if word.chars().count() != r.labeling().len() {
                bail!("{}: normalization changed the length of {:?}", r.id(), r.surface());
            }
            let s = seg.segment(&word).with_context(|| format!("segmenting {}", r.id()))?;
            Ok(Prediction {
                id: r.id().to_string(),
                surface: r.surface().to_string(),
                cuts: s.cuts().to_vec(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    preds.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(preds)
}

pub fn segment(a: SegmentArgs) -> Result<()> {
    let records = crate::load(&a.corpus.corpus)?;
    let seg = load_segmenter(&a.system)?;
    let preds = predict(&records, seg.as_ref())?;
    emit(a.out.as_deref(), |w| Ok(write_jsonl(w, &preds)?))?;
    Ok(())
}

fn read_counts(path: &Path) -> Result<WordCounts> {
    let counts = WordCounts::from_reader(open(path)?, Normalizer::default())?;
    if counts.is_empty() {
        return Err(anyhow!("{} has no words", path.display()).into());
    }
    Ok(counts)
}

pub fn train_bpe(a: TrainSubwordArgs) -> Result<()> {
    let model = blendkit::subword::train_bpe(&read_counts(&a.text)?, a.vocab_size)?;
    emit(Some(&a.out), |w| Ok(model.write(w)?))?;
    Ok(())
}

pub fn train_unigram(a: TrainSubwordArgs) -> Result<()> {
    let model = blendkit::subword::train_unigram(&read_counts(&a.text)?, a.vocab_size)?;
    emit(Some(&a.out), |w| Ok(model.write(w)?))?;
    Ok(())
}

pub fn tagger(c: TaggerCommand) -> Result<()> {
    match c {
        TaggerCommand::Train {
            corpus,
            out,
            epochs,
            seed,
        } => {
            let norm = Normalizer::default();
            let examples: Vec<_> = crate::load(&corpus.corpus)?
                .iter()
                .map(|r| (norm.apply(r.surface()), r.labeling().clone()))
                .collect();
            let model = train_tagger(&examples, TaggerConfig { epochs, seed })?;
            emit(Some(&out), |w| Ok(model.write_json(w)?))?;
        }
        TaggerCommand::Tag { model, input } => {
            let model = TaggerModel::read_json(open(&model)?)?;
            let reader: Box<dyn BufRead> = match input {
                Some(p) => Box::new(open(&p)?),
                None => Box::new(BufReader::new(io::stdin())),
            };
            let stdout = io::stdout();
            let mut w = stdout.lock();
            for line in reader.lines() {
                let line = line?;
                let word = line.trim();
                if word.is_empty() {
                    continue;
                }
                writeln!(w, "{word}\t{}", model.tag(word))?;
            }
        }
    }
    Ok(())
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let mut preds: Vec<Prediction> = read_jsonl(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    preds.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(preds)
}

/// Pairs each record with its prediction by id; every record needs exactly
/// one prediction.
fn match_predictions<'a>(
    records: &'a [ComplexWordRecord],
    preds: &'a [Prediction],
) -> anyhow::Result<Vec<(&'a ComplexWordRecord, &'a Prediction)>> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            bail!("duplicate prediction for {}", p.id);
        }
    }
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let p = by_id
            .remove(r.id())
            .ok_or_else(|| anyhow!("no prediction for {}", r.id()))?;
        out.push((r, p));
    }
    if let Some(id) = by_id.keys().min() {
        bail!("prediction {id} matches no corpus record");
    }
    out.sort_by(|a, b| a.0.id().cmp(b.0.id()));
    Ok(out)
}

pub fn eval_seg(a: EvalSegArgs) -> Result<()> {
    let records = crate::load(&a.corpus.corpus)?;
    let (preds, default_name) = match &a.predictions {
        Some(p) => (
            read_predictions(p)?,
            p.file_stem()
                .map_or("predictions".into(), |s| s.to_string_lossy().into_owned()),
        ),
        None => {
            let seg = load_segmenter(&a.system)?;
            let name = seg.name().to_string();
            (predict(&records, seg.as_ref())?, name)
        }
    };
    let pairs = match_predictions(&records, &preds)?;
    let scores = pairs
        .iter()
        .map(|(r, p)| {
            let s = Segmentation::new(p.cuts.clone(), r.labeling().len())
                .with_context(|| format!("prediction for {}", p.id))?;
            score_segmentation(r.labeling(), &s).with_context(|| format!("scoring {}", p.id))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let row = SegTableRow {
        model: a.name.unwrap_or(default_name),
        metrics: aggregate(&scores)?,
    };
    let rows = [row];
    let tsv = format_table_tsv(&rows);
    if let Some(prefix) = &a.out_prefix {
        let mut staged = Staged::new();
        staged.write_str(&with_suffix(prefix, "tsv"), &tsv)?;
        staged.write(&with_suffix(prefix, "json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        })?;
        staged.commit()?;
    }
    print!("{tsv}");
    Ok(())
}
