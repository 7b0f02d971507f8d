use std::fmt;

use serde::{Deserialize, Serialize};

use super::labeling::{validate_labeling, Label, PaxobsLabeling, Violation};
use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordClass {
    Blend,
    TransparentCompound,
    OpaqueCompound,
}

impl WordClass {
    pub fn as_str(self) -> &'static str {
        match self {
            WordClass::Blend => "blend",
            WordClass::TransparentCompound => "transparent_compound",
            WordClass::OpaqueCompound => "opaque_compound",
        }
    }

    pub fn is_compound(self) -> bool {
        !matches!(self, WordClass::Blend)
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Something wrong with a record, beyond its labeling alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordIssue {
    Labeling(Violation),
    BaseCount { bases: usize },
    BaseLetterCount { letters: usize, bases: usize },
    NotSubsequence { base: String, material: String },
    EmptySurface,
}

impl fmt::Display for RecordIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordIssue::Labeling(v) => write!(f, "labeling: {v}"),
            RecordIssue::BaseCount { bases } => write!(f, "{bases} bases, expected 1 to 3"),
            RecordIssue::BaseLetterCount { letters, bases } => {
                write!(f, "{letters} base letters in labeling but {bases} bases listed")
            }
            RecordIssue::NotSubsequence { base, material } => {
                write!(f, "material {material:?} is not a subsequence of base {base:?}")
            }
            RecordIssue::EmptySurface => write!(f, "empty surface form"),
        }
    }
}

/// One annotated blend or compound with its originating context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord", into = "RawRecord")]
pub struct ComplexWordRecord {
    surface: String,
    class: WordClass,
    bases: Vec<String>,
    labeling: PaxobsLabeling,
    relation: Option<String>,
    context: String,
    source_id: Option<String>,
}

/// Line format of the corpus file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub surface: String,
    pub class: WordClass,
    pub bases: Vec<String>,
    pub paxobs: String,
    #[serde(default)]
    pub relation: Option<String>,
    #[serde(default)]
    pub context: String,
    #[serde(default)]
    pub source_id: Option<String>,
}

impl TryFrom<RawRecord> for ComplexWordRecord {
    type Error = DatasetError;

    fn try_from(raw: RawRecord) -> Result<Self, Self::Error> {
        let labeling: PaxobsLabeling = raw.paxobs.parse()?;
        ComplexWordRecord::new(
            raw.surface,
            raw.class,
            raw.bases,
            labeling,
            raw.relation,
            raw.context,
            raw.source_id,
        )
    }
}

impl From<ComplexWordRecord> for RawRecord {
    fn from(r: ComplexWordRecord) -> Self {
        RawRecord {
            paxobs: r.labeling.to_string(),
            surface: r.surface,
            class: r.class,
            bases: r.bases,
            relation: r.relation,
            context: r.context,
            source_id: r.source_id,
        }
    }
}

impl ComplexWordRecord {
    /// Builds a record, rejecting it if [`ComplexWordRecord::issues`] finds anything.
    pub fn new(
        surface: String,
        class: WordClass,
        bases: Vec<String>,
        labeling: PaxobsLabeling,
        relation: Option<String>,
        context: String,
        source_id: Option<String>,
    ) -> Result<Self, DatasetError> {
        let record = ComplexWordRecord {
            surface,
            class,
            bases,
            labeling,
            relation,
            context,
            source_id,
        };
        let issues = record.issues();
        if issues.is_empty() {
            Ok(record)
        } else {
            Err(DatasetError::InvalidRecord {
                surface: record.surface,
                issues,
            })
        }
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn class(&self) -> WordClass {
        self.class
    }

    pub fn bases(&self) -> &[String] {
        &self.bases
    }

    pub fn labeling(&self) -> &PaxobsLabeling {
        &self.labeling
    }

    pub fn relation(&self) -> Option<&str> {
        self.relation.as_deref()
    }

    pub fn context(&self) -> &str {
        &self.context
    }

    pub fn source_id(&self) -> Option<&str> {
        self.source_id.as_deref()
    }

    /// Stable identifier: the source id when present, else the surface form.
    pub fn id(&self) -> &str {
        self.source_id.as_deref().unwrap_or(&self.surface)
    }

    pub fn is_linear(&self) -> bool {
        self.labeling.is_linear().unwrap_or(false)
    }

    /// Same record with the surface form and labeling replaced.
    pub fn with_form(&self, surface: String, labeling: PaxobsLabeling) -> Result<Self, DatasetError> {
        ComplexWordRecord::new(
            surface,
            self.class,
            self.bases.clone(),
            labeling,
            self.relation.clone(),
            self.context.clone(),
            self.source_id.clone(),
        )
    }

    pub fn issues(&self) -> Vec<RecordIssue> {
        let mut issues = Vec::new();
        if self.surface.is_empty() {
            issues.push(RecordIssue::EmptySurface);
        }
        issues.extend(
            validate_labeling(&self.surface, &self.labeling)
                .violations
                .into_iter()
                .map(RecordIssue::Labeling),
        );
        if !(1..=3).contains(&self.bases.len()) {
            issues.push(RecordIssue::BaseCount {
                bases: self.bases.len(),
            });
        }
        let letters = self.labeling.num_bases();
        if letters != self.bases.len() {
            issues.push(RecordIssue::BaseLetterCount {
                letters,
                bases: self.bases.len(),
            });
        }
        if issues.is_empty() {
            issues.extend(self.material_issues());
        }
        issues
    }

    /// Each base's material must appear in the base, in order. Deleted base
    /// characters are simply absent from the blend. Shared material is
    /// checked against every base only for one- and two-base words, since
    /// with three bases an `X` may belong to just two of them.
    fn material_issues(&self) -> Vec<RecordIssue> {
        let chars: Vec<char> = self.surface.chars().flat_map(char::to_lowercase).collect();
        if chars.len() != self.labeling.len() {
            // Non-ASCII case folding changed the length; compare as-is.
            return self.material_issues_with(&self.surface.chars().collect::<Vec<_>>());
        }
        self.material_issues_with(&chars)
    }

    fn material_issues_with(&self, chars: &[char]) -> Vec<RecordIssue> {
        let include_shared = self.bases.len() <= 2;
        let mut issues = Vec::new();
        for (i, base) in self.bases.iter().enumerate() {
            let material: String = chars
                .iter()
                .zip(self.labeling.labels())
                .filter(|(_, l)| match l {
                    Label::Base(b) => *b as usize == i,
                    Label::Shared => include_shared,
                    _ => false,
                })
                .map(|(c, _)| *c)
                .collect();
            let base_lower = base.to_lowercase();
            if !is_subsequence(&material, &base_lower) {
                issues.push(RecordIssue::NotSubsequence {
                    base: base.clone(),
                    material,
                });
            }
        }
        issues
    }

    /// Surface characters carrying base `index`'s letter.
    pub fn exclusive_material(&self, index: u8) -> String {
        self.surface
            .chars()
            .zip(self.labeling.labels())
            .filter(|(_, l)| **l == Label::Base(index))
            .map(|(c, _)| c)
            .collect()
    }
}

fn is_subsequence(needle: &str, haystack: &str) -> bool {
    let mut hay = haystack.chars();
    needle.chars().all(|c| hay.any(|h| h == c))
}
