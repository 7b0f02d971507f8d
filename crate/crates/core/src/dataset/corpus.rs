use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use super::record::{ComplexWordRecord, RawRecord, RecordIssue, WordClass};
use super::DatasetError;
use crate::text::find_whole_token;

/// A problem on one corpus line (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub problem: LineProblem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineProblem {
    Parse(String),
    Invalid(Vec<RecordIssue>),
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.problem {
            LineProblem::Parse(msg) => write!(f, "line {}: parse error: {msg}", self.line),
            LineProblem::Invalid(issues) => {
                write!(f, "line {}: ", self.line)?;
                for (i, issue) in issues.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{issue}")?;
                }
                Ok(())
            }
        }
    }
}

/// Records that parsed and validated, plus every line that did not.
#[derive(Debug, Clone, Default)]
pub struct CorpusReport {
    pub records: Vec<ComplexWordRecord>,
    pub issues: Vec<LineIssue>,
}

/// Parses every line, keeping good records and collecting issues.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<CorpusReport, DatasetError> {
    let mut report = CorpusReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                report.issues.push(LineIssue {
                    line: i + 1,
                    problem: LineProblem::Parse(e.to_string()),
                });
                continue;
            }
        };
        match ComplexWordRecord::try_from(raw) {
            Ok(r) => report.records.push(r),
            Err(DatasetError::InvalidRecord { issues, .. }) => report.issues.push(LineIssue {
                line: i + 1,
                problem: LineProblem::Invalid(issues),
            }),
            Err(e) => report.issues.push(LineIssue {
                line: i + 1,
                problem: LineProblem::Parse(e.to_string()),
            }),
        }
    }
    Ok(report)
}

/// Loads a JSONL corpus, failing if any line is malformed or invalid.
pub fn load_corpus<P: AsRef<Path>>(path: P) -> Result<Vec<ComplexWordRecord>, DatasetError> {
    let file = File::open(path.as_ref())?;
    let report = read_corpus(BufReader::new(file))?;
    if report.issues.is_empty() {
        Ok(report.records)
    } else {
        Err(DatasetError::Corpus(report.issues))
    }
}

pub fn write_corpus<W: Write>(mut writer: W, records: &[ComplexWordRecord]) -> Result<(), DatasetError> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    pub per_class: BTreeMap<WordClass, usize>,
    pub blends: usize,
    pub linear_blends: usize,
    /// Percent of blends that are linear; `None` without blends.
    pub pct_linear: Option<f64>,
    /// Mean number of bases over all records.
    pub mean_bases: f64,
    /// Percent of blend contexts containing at least one base as a token.
    pub pct_context_any_base: Option<f64>,
    /// Percent of blend contexts containing every base as a token.
    pub pct_context_all_bases: Option<f64>,
}

/// Summary counts. Base-in-context checks are case-insensitive whole-token
/// matches.
pub fn corpus_stats(records: &[ComplexWordRecord]) -> Result<CorpusStats, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let mut per_class = BTreeMap::new();
    for r in records {
        *per_class.entry(r.class()).or_insert(0) += 1;
    }
    let blends: Vec<&ComplexWordRecord> = records.iter().filter(|r| r.class() == WordClass::Blend).collect();
    let linear_blends = blends.iter().filter(|r| r.is_linear()).count();

    let mut any = 0;
    let mut all = 0;
    for r in &blends {
        let found = r
            .bases()
            .iter()
            .filter(|b| find_whole_token(r.context(), b).is_some())
            .count();
        if found > 0 {
            any += 1;
        }
        if found == r.bases().len() {
            all += 1;
        }
    }
    let pct = |n: usize| (!blends.is_empty()).then(|| 100.0 * n as f64 / blends.len() as f64);

    Ok(CorpusStats {
        total: records.len(),
        per_class,
        blends: blends.len(),
        linear_blends,
        pct_linear: pct(linear_blends),
        mean_bases: records.iter().map(|r| r.bases().len()).sum::<usize>() as f64 / records.len() as f64,
        pct_context_any_base: pct(any),
        pct_context_all_bases: pct(all),
    })
}
