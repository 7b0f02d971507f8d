use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use blendkit::dataset::{corpus_stats, read_corpus, write_corpus};
use blendkit::probe::smoothie_record;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fail::Result;
use crate::output::emit;
use crate::{CorpusArg, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmoothieArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Expected fraction of characters deleted.
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output corpus JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    let path = &a.corpus.corpus;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let report = read_corpus(BufReader::new(file))?;
    for issue in &report.issues {
        eprintln!("{issue}");
    }
    if !report.issues.is_empty() {
        return Err(anyhow!(
            "{} bad line(s), {} valid record(s)",
            report.issues.len(),
            report.records.len()
        )
        .into());
    }
    println!("{} records ok", report.records.len());
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let records = crate::load(&a.corpus.corpus)?;
    let stats = corpus_stats(&records)?;
    emit(a.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &stats)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(())
}

/// Compounds with exactly two bases, in corpus order, each rewritten as a
/// smoothie drawn from one seeded generator.
pub fn smoothie(a: SmoothieArgs) -> Result<()> {
    let records = crate::load(&a.corpus.corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = Vec::new();
    for r in records
        .iter()
        .filter(|r| r.class().is_compound() && r.bases().len() == 2)
    {
        out.push(smoothie_record(r, a.rate, &mut rng)?);
    }
    out.sort_by(|x, y| x.id().cmp(y.id()));
    if out.is_empty() {
        return Err(anyhow!("no two-base compounds in {}", a.corpus.corpus.display()).into());
    }
    emit(Some(&a.out), |w| Ok(write_corpus(w, &out)?))?;
    Ok(())
}
