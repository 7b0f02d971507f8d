use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use blendkit::dataset::{ComplexWordRecord, WordClass};
use blendkit::jsonl::{read_jsonl, write_jsonl};
use blendkit::rankers::mlm::{connect, rank_by_mlm, MlmContext, MlmError, MlmOptions};
use blendkit::rankers::{
    rank_by_char_lm, rank_by_edit_distance, rank_by_embedding, CharNgramLm, Direction, EmbeddingTable, DEFAULT_ORDER,
    DEFAULT_SMOOTHING,
};
use blendkit::recovery::{
    aggregate_recovery, format_recovery_tsv, generate_candidates, lower_bound_ranking, score_ranking, CandidateConfig,
    CandidateSet, Ranking, RecoveryTableRow, Vocabulary, DEFAULT_MIN_OVERLAP,
};
use blendkit::text::split_around;
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use crate::fail::{usage, Classify, Failure, Kind, Result};
use crate::output::{emit, with_suffix, Staged};
use crate::CorpusArg;

#[derive(Debug, Args)]
pub struct GenCandidatesArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Word list or word2vec text file; the first token of each line is used.
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_OVERLAP)]
    pub min_overlap: usize,
    /// Candidate sets JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSystem {
    Ed,
    Embed,
    Charlm,
    Mlm(MlmOptions),
    LowerBound,
}

impl FromStr for RankSystem {
    type Err = String;

    /// `ed`, `embed`, `charlm`, `lower-bound`, or `mlm` with optional
    /// comma-separated variants after a colon: `plus-other`, `no-context`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (head, variants) = match s.split_once(':') {
            Some((h, v)) => (h, Some(v)),
            None => (s, None),
        };
        match (head, variants) {
            ("ed", None) => Ok(RankSystem::Ed),
            ("embed", None) => Ok(RankSystem::Embed),
            ("charlm", None) => Ok(RankSystem::Charlm),
            ("lower-bound", None) => Ok(RankSystem::LowerBound),
            ("mlm", v) => {
                let mut opts = MlmOptions::default();
                for part in v.into_iter().flat_map(|v| v.split(',')) {
                    match part {
                        "plus-other" => opts.plus_other_base = true,
                        "no-context" => opts.context = false,
                        _ => return Err(format!("unknown mlm variant {part:?}")),
                    }
                }
                Ok(RankSystem::Mlm(opts))
            }
            _ => Err(format!("unknown ranker {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Candidate sets from gen-candidates.
    #[arg(long)]
    pub candidates: PathBuf,
    /// ed, embed, charlm, mlm[:plus-other,no-context] or lower-bound.
    #[arg(long)]
    pub system: RankSystem,
    /// Corpus with the blend contexts (charlm and mlm).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// word2vec text vectors (embed).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub lm_forward: Option<PathBuf>,
    #[arg(long)]
    pub lm_backward: Option<PathBuf>,
    /// mock:PATH, cmd:COMMAND or unix:PATH (mlm).
    #[arg(long)]
    pub backend: Option<String>,
    /// Rankings JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Debug, Args)]
pub struct TrainCharlmArgs {
    /// Training text, one sentence per line.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long, value_enum)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalRecoveryArgs {
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub rankings: PathBuf,
    /// Row label in the table.
    #[arg(long)]
    pub name: Option<String>,
    /// Writes PREFIX.tsv and PREFIX.json.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

pub fn gen_candidates(a: GenCandidatesArgs) -> Result<()> {
    let records = crate::load(&a.corpus.corpus)?;
    let vocab = Vocabulary::read(open(&a.vocab)?)?;
    let config = CandidateConfig {
        min_overlap: a.min_overlap,
    };
    let blends: Vec<&ComplexWordRecord> = records.iter().filter(|r| r.class() == WordClass::Blend).collect();
    if blends.is_empty() {
        return Err(anyhow!("no blends in {}", a.corpus.corpus.display()).into());
    }
    let mut sets = blends
        .par_iter()
        .map(|r| generate_candidates(r, &vocab, config))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    sets.sort_by(|x, y| x.blend_id.cmp(&y.blend_id));
    emit(Some(&a.out), |w| Ok(write_jsonl(w, &sets)?))?;
    Ok(())
}

fn read_candidates(path: &Path) -> Result<Vec<CandidateSet>> {
    Ok(read_jsonl(open(path)?).with_context(|| format!("reading {}", path.display()))?)
}

/// Lowercased text left and right of each blend's first whole-token
/// occurrence in its context.
fn contexts(corpus: Option<&Path>, sets: &[CandidateSet]) -> Result<HashMap<String, MlmContext>> {
    let path = corpus.ok_or_else(|| usage("this ranker needs --corpus for blend contexts"))?;
    let records = crate::load(path)?;
    let by_id: HashMap<&str, &ComplexWordRecord> = records.iter().map(|r| (r.id(), r)).collect();
    let mut out = HashMap::new();
    for s in sets {
        let r = by_id
            .get(s.blend_id.as_str())
            .ok_or_else(|| anyhow!("{} is not in {}", s.blend_id, path.display()))?;
        let (left, right) = split_around(r.context(), r.surface())
            .ok_or_else(|| anyhow!("{}: word not found in its context", s.blend_id))?;
        out.insert(
            s.blend_id.clone(),
            MlmContext {
                left: left.trim().to_lowercase(),
                right: right.trim().to_lowercase(),
            },
        );
    }
    Ok(out)
}

fn read_lm(path: Option<&Path>, flag: &str) -> Result<CharNgramLm> {
    let path = path.ok_or_else(|| usage(format!("charlm needs --{flag}")))?;
    Ok(CharNgramLm::read_json(open(path)?).with_context(|| format!("reading {}", path.display()))?)
}

pub fn rank(a: RankArgs) -> Result<()> {
    let sets = read_candidates(&a.candidates)?;
    let mut rankings: Vec<Ranking> = match a.system {
        RankSystem::Ed => sets.par_iter().map(rank_by_edit_distance).collect(),
        RankSystem::LowerBound => sets.par_iter().map(lower_bound_ranking).collect(),
        RankSystem::Embed => {
            let path = a.vectors.as_deref().ok_or_else(|| usage("embed needs --vectors"))?;
            let table = EmbeddingTable::read(open(path)?).with_context(|| format!("reading {}", path.display()))?;
            sets.par_iter().map(|s| rank_by_embedding(s, &table)).collect()
        }
        RankSystem::Charlm => {
            let fwd = read_lm(a.lm_forward.as_deref(), "lm-forward")?;
            let bwd = read_lm(a.lm_backward.as_deref(), "lm-backward")?;
            let ctx = contexts(a.corpus.as_deref(), &sets)?;
            sets.par_iter()
                .map(|s| {
                    let c = &ctx[&s.blend_id];
                    rank_by_char_lm(s, &fwd, &bwd, &c.left, &c.right)
                })
                .collect::<std::result::Result<_, _>>()?
        }
        RankSystem::Mlm(opts) => {
            let addr = a.backend.as_deref().ok_or_else(|| usage("mlm needs --backend"))?;
            let ctx = contexts(a.corpus.as_deref(), &sets)?;
            let backend = connect(addr).backend()?;
            sets.par_iter()
                .map(|s| rank_by_mlm(s, backend.as_ref(), &ctx[&s.blend_id], opts))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| match e {
                    MlmError::Backend(_) => Failure {
                        kind: Kind::Backend,
                        error: e.into(),
                    },
                    _ => e.into(),
                })?
        }
    };
    rankings.sort_by(|x, y| x.blend_id.cmp(&y.blend_id));
    emit(Some(&a.out), |w| Ok(write_jsonl(w, &rankings)?))?;
    Ok(())
}

pub fn train_charlm(a: TrainCharlmArgs) -> Result<()> {
    let direction = match a.direction {
        DirectionArg::Forward => Direction::Forward,
        DirectionArg::Backward => Direction::Backward,
    };
    let mut lm = CharNgramLm::new(a.order, a.smoothing, direction).map_err(usage)?;
    for line in open(&a.text)?.lines() {
        let line = line?;
        let line = line.trim();
        if !line.is_empty() {
            lm.train_line(&line.to_lowercase());
        }
    }
    emit(Some(&a.out), |w| Ok(lm.write_json(w)?))?;
    Ok(())
}

pub fn eval_recovery(a: EvalRecoveryArgs) -> Result<()> {
    let sets = read_candidates(&a.candidates)?;
    let rankings: Vec<Ranking> =
        read_jsonl(open(&a.rankings)?).with_context(|| format!("reading {}", a.rankings.display()))?;
    let mut by_id: HashMap<&str, &Ranking> = HashMap::new();
    for r in &rankings {
        if by_id.insert(r.blend_id.as_str(), r).is_some() {
            return Err(anyhow!("duplicate ranking for {}", r.blend_id).into());
        }
    }
    let mut scores = Vec::with_capacity(sets.len());
    for s in &sets {
        let r = by_id
            .remove(s.blend_id.as_str())
            .ok_or_else(|| anyhow!("no ranking for {}", s.blend_id))?;
        scores.push(score_ranking(s, r)?);
    }
    if let Some(id) = by_id.keys().min() {
        return Err(anyhow!("ranking {id} matches no candidate set").into());
    }
    let name = a.name.unwrap_or_else(|| {
        a.rankings
            .file_stem()
            .map_or("rankings".into(), |s| s.to_string_lossy().into_owned())
    });
    let rows = [RecoveryTableRow {
        model: name,
        metrics: aggregate_recovery(&scores)?,
    }];
    let tsv = format_recovery_tsv(&rows);
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
