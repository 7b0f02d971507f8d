use std::path::{Path, PathBuf};

use anyhow::anyhow;
use blendkit::dataset::ComplexWordRecord;
use blendkit::probe::{
    aggregate_profiles, profiles_tsv, similarity_profile, smoothie_record, summaries_tsv, GroupBy, ProbeError,
    SimilarityProfile, Tokenization, MIN_RELATION_GROUP,
};
use blendkit::rankers::mlm::{connect, MlmBackend};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::fail::{Classify, Failure, Kind, Result};
use crate::output::{with_suffix, Staged};
use crate::{CorpusArg, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// mock:PATH, cmd:COMMAND or unix:PATH.
    #[arg(long)]
    pub backend: String,
    /// Pre-split words where base material changes.
    #[arg(long)]
    pub paxobs_tok: bool,
    /// Also probe smoothies made from the two-base compounds at this rate.
    #[arg(long, value_name = "RATE")]
    pub smoothies: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Writes PREFIX.profiles.tsv, PREFIX.class.tsv, PREFIX.relation.tsv and
    /// PREFIX.json (plus PREFIX.smoothie.* with --smoothies).
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Serialize)]
struct Report<'a> {
    profiles: &'a [SimilarityProfile],
    by_class: Vec<blendkit::probe::GroupSummary>,
    by_relation: Vec<blendkit::probe::GroupSummary>,
}

fn classify(e: ProbeError) -> Failure {
    let kind = if matches!(e, ProbeError::Backend(_)) {
        Kind::Backend
    } else {
        Kind::Data
    };
    Failure { kind, error: e.into() }
}

fn profiles(
    records: &[ComplexWordRecord],
    backend: &dyn MlmBackend,
    mode: Tokenization,
) -> Result<Vec<SimilarityProfile>> {
    let mut out = records
        .par_iter()
        .map(|r| similarity_profile(r, backend, mode))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(classify)?;
    out.sort_by(|a, b| a.word_id.cmp(&b.word_id));
    Ok(out)
}

fn stage(staged: &mut Staged, prefix: &Path, profiles: &[SimilarityProfile]) -> Result<()> {
    let by_class = aggregate_profiles(profiles, GroupBy::Class, None).map_err(classify)?;
    let by_relation = aggregate_profiles(profiles, GroupBy::Relation, Some(MIN_RELATION_GROUP)).map_err(classify)?;
    staged.write_str(&with_suffix(prefix, "profiles.tsv"), &profiles_tsv(profiles))?;
    staged.write_str(&with_suffix(prefix, "class.tsv"), &summaries_tsv(&by_class))?;
    staged.write_str(&with_suffix(prefix, "relation.tsv"), &summaries_tsv(&by_relation))?;
    let report = Report {
        profiles,
        by_class,
        by_relation,
    };
    staged.write(&with_suffix(prefix, "json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(())
}

pub fn probe(a: ProbeArgs) -> Result<()> {
    let records = crate::load(&a.corpus.corpus)?;
    let mode = if a.paxobs_tok {
        Tokenization::PaxobsInformed
    } else {
        Tokenization::Default
    };
    let smoothies = match a.smoothies {
        Some(rate) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let made = records
                .iter()
                .filter(|r| r.class().is_compound() && r.bases().len() == 2)
                .map(|r| smoothie_record(r, rate, &mut rng))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(classify)?;
            if made.is_empty() {
                return Err(anyhow!("no two-base compounds to turn into smoothies").into());
            }
            Some(made)
        }
        None => None,
    };
    let backend = connect(&a.backend).backend()?;
    let mut staged = Staged::new();
    stage(&mut staged, &a.out_prefix, &profiles(&records, backend.as_ref(), mode)?)?;
    if let Some(s) = &smoothies {
        stage(
            &mut staged,
            &with_suffix(&a.out_prefix, "smoothie"),
            &profiles(s, backend.as_ref(), mode)?,
        )?;
    }
    staged.commit()?;
    Ok(())
}
