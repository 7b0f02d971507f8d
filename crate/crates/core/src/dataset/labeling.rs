use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DatasetError, Segmentation};

/// Highest base letter accepted; `O` is reserved for orphan material.
pub const MAX_BASES: u8 = 14;

/// One PAXOBS character label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// `P`: part of a prefix.
    Prefix,
    /// `A`, `B`, `C`, ...: exclusive material of the base with this index.
    Base(u8),
    /// `X`: contributed by more than one base.
    Shared,
    /// `O`: contributed by no base.
    Orphan,
    /// `S`: part of a suffix.
    Suffix,
}

impl Label {
    pub fn from_char(c: char) -> Option<Label> {
        match c {
            'P' => Some(Label::Prefix),
            'S' => Some(Label::Suffix),
            'X' => Some(Label::Shared),
            'O' => Some(Label::Orphan),
            'A'..='N' => Some(Label::Base(c as u8 - b'A')),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Label::Prefix => 'P',
            Label::Suffix => 'S',
            Label::Shared => 'X',
            Label::Orphan => 'O',
            Label::Base(i) => (b'A' + i) as char,
        }
    }

    pub fn base_index(self) -> Option<u8> {
        match self {
            Label::Base(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_affix(self) -> bool {
        matches!(self, Label::Prefix | Label::Suffix)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A structural problem with a labeling, optionally relative to its word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    LengthMismatch { labels: usize, chars: usize },
    NonContiguousBases { missing: char },
    PrefixNotLeading { index: usize },
    SuffixNotTrailing { index: usize },
    BaseOrder { index: usize, expected: char, found: char },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { labels, chars } => {
                write!(f, "{labels} labels for {chars} characters")
            }
            Violation::NonContiguousBases { missing } => {
                write!(f, "base letters skip {missing}")
            }
            Violation::PrefixNotLeading { index } => {
                write!(f, "prefix label at {index} follows non-prefix material")
            }
            Violation::SuffixNotTrailing { index } => {
                write!(f, "suffix label at {index} precedes non-suffix material")
            }
            Violation::BaseOrder { index, expected, found } => {
                write!(f, "first exclusive material at {index} is {found}, expected {expected}")
            }
        }
    }
}

/// Outcome of [`validate_labeling`]; empty means the labeling is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-character PAXOBS labels of one complex word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PaxobsLabeling {
    labels: Vec<Label>,
}

impl PaxobsLabeling {
    pub fn new(labels: Vec<Label>) -> Self {
        PaxobsLabeling { labels }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct base indices, ascending.
    pub fn base_indices(&self) -> BTreeSet<u8> {
        self.labels.iter().filter_map(|l| l.base_index()).collect()
    }

    pub fn num_bases(&self) -> usize {
        self.base_indices().len()
    }

    /// `[start, end)` of the word body once leading prefix and trailing
    /// suffix runs are removed.
    pub fn body_range(&self) -> (usize, usize) {
        let start = self.labels.iter().take_while(|&&l| l == Label::Prefix).count();
        let trailing = self.labels[start..]
            .iter()
            .rev()
            .take_while(|&&l| l == Label::Suffix)
            .count();
        (start, self.labels.len() - trailing)
    }

    /// Violations that can be detected without the surface form.
    pub fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let (body_start, body_end) = self.body_range();
        if let Some(i) = (body_start..self.labels.len()).find(|&i| self.labels[i] == Label::Prefix) {
            out.push(Violation::PrefixNotLeading { index: i });
        }
        if let Some(i) = (0..body_end).find(|&i| self.labels[i] == Label::Suffix) {
            out.push(Violation::SuffixNotTrailing { index: i });
        }

        let used = self.base_indices();
        if let Some(&max) = used.iter().next_back() {
            for b in 0..max {
                if !used.contains(&b) {
                    out.push(Violation::NonContiguousBases {
                        missing: Label::Base(b).to_char(),
                    });
                }
            }
        }

        // Bases are lettered by order of first exclusive material.
        let mut next = 0u8;
        for (i, l) in self.labels.iter().enumerate() {
            if let Label::Base(b) = *l {
                if b < next {
                    continue;
                }
                if b != next {
                    out.push(Violation::BaseOrder {
                        index: i,
                        expected: Label::Base(next).to_char(),
                        found: l.to_char(),
                    });
                    break;
                }
                next += 1;
            }
        }
        out
    }

    fn ensure_valid(&self) -> Result<(), DatasetError> {
        let violations = self.structural_violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(DatasetError::InvalidLabeling(violations))
        }
    }

    /// Linearity: no orphan material, no base material preceded by material
    /// of a later base, no shared material before any of the first base's
    /// material, and no shared material after any of the last base's
    /// material. For two bases: A never follows B or X, B never precedes
    /// A or X.
    pub fn is_linear(&self) -> Result<bool, DatasetError> {
        self.ensure_valid()?;
        if self.labels.contains(&Label::Orphan) {
            return Ok(false);
        }
        let num_bases = self.num_bases() as u8;
        if num_bases == 0 {
            return Ok(true);
        }
        let last = num_bases - 1;

        // Highest base index seen so far, and whether any X has been seen.
        let mut max_seen: Option<u8> = None;
        let mut shared_seen = false;
        for l in &self.labels {
            match *l {
                Label::Base(b) => {
                    if max_seen.is_some_and(|m| m > b) {
                        return Ok(false);
                    }
                    if b == 0 && shared_seen {
                        return Ok(false);
                    }
                    max_seen = Some(max_seen.map_or(b, |m| m.max(b)));
                }
                Label::Shared => {
                    if max_seen == Some(last) {
                        return Ok(false);
                    }
                    shared_seen = true;
                }
                _ => {}
            }
        }
        Ok(true)
    }

    /// Cut at every label change.
    pub fn gold_segmentation(&self) -> Segmentation {
        let cuts = (1..self.labels.len())
            .filter(|&i| self.labels[i - 1] != self.labels[i])
            .collect();
        Segmentation::from_sorted_unchecked(cuts, self.labels.len())
    }

    /// Cuts at label changes inside the body only; affix material is merged
    /// into the adjacent body segment.
    pub fn base_congruent_segmentation(&self) -> Segmentation {
        let (start, end) = self.body_range();
        let cuts = (start + 1..end)
            .filter(|&i| self.labels[i - 1] != self.labels[i])
            .collect();
        Segmentation::from_sorted_unchecked(cuts, self.labels.len())
    }
}

impl fmt::Display for PaxobsLabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PaxobsLabeling {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(i, c)| Label::from_char(c).ok_or(DatasetError::BadLabel { index: i, found: c }))
            .collect::<Result<Vec<_>, _>>()
            .map(PaxobsLabeling::new)
    }
}

impl Serialize for PaxobsLabeling {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PaxobsLabeling {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Checks a labeling against its surface form.
pub fn validate_labeling(word: &str, labeling: &PaxobsLabeling) -> ValidationReport {
    let mut violations = Vec::new();
    let chars = word.chars().count();
    if chars != labeling.len() {
        violations.push(Violation::LengthMismatch {
            labels: labeling.len(),
            chars,
        });
    }
    violations.extend(labeling.structural_violations());
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(s: &str) -> PaxobsLabeling {
        s.parse().unwrap()
    }

    #[test]
    fn table_rows_validate() {
        for (w, l) in [
            ("hatriotism", "AXXBBBBSSS"),
            ("shoptics", "AAXXBBBS"),
            ("innoventor", "XXAAXBBXXX"),
            ("thrupple", "AAABOBBB"),
        ] {
            assert!(validate_labeling(w, &lab(l)).is_ok(), "{w}");
        }
    }

    #[test]
    fn length_mismatch_reported() {
        let r = validate_labeling("shoptics", &lab("AAXXBBB"));
        assert_eq!(r.violations, vec![Violation::LengthMismatch { labels: 7, chars: 8 }]);
    }

    #[test]
    fn base_order_reported() {
        let r = validate_labeling("thrupple", &lab("BBBAOAAA"));
        assert_eq!(
            r.violations,
            vec![Violation::BaseOrder {
                index: 0,
                expected: 'A',
                found: 'B'
            }]
        );
    }

    #[test]
    fn skipped_letter_reported() {
        let v = lab("AACC").structural_violations();
        assert!(v.contains(&Violation::NonContiguousBases { missing: 'B' }));
    }

    #[test]
    fn affix_positions_checked() {
        assert_eq!(
            lab("APB").structural_violations(),
            vec![Violation::PrefixNotLeading { index: 1 }]
        );
        assert_eq!(
            lab("ASB").structural_violations(),
            vec![Violation::SuffixNotTrailing { index: 1 }]
        );
        assert!(lab("PPABSS").structural_violations().is_empty());
        assert!(lab("PPSS").structural_violations().is_empty());
    }

    #[test]
    fn unknown_label_character() {
        assert!(matches!(
            "AAZ".parse::<PaxobsLabeling>(),
            Err(DatasetError::BadLabel { index: 2, found: 'Z' })
        ));
    }

    #[test]
    fn linearity_of_table_rows() {
        assert!(lab("AXXBBBBSSS").is_linear().unwrap());
        assert!(lab("AAXXBBBS").is_linear().unwrap());
        assert!(!lab("AAABOBBB").is_linear().unwrap());
        assert!(!lab("XXAAXBBXXX").is_linear().unwrap());
    }

    #[test]
    fn linearity_two_base_rule_cases() {
        // A preceded by B
        assert!(!lab("ABA").is_linear().unwrap());
        // A preceded by X
        assert!(!lab("XAB").is_linear().unwrap());
        // B followed by X
        assert!(!lab("ABX").is_linear().unwrap());
        assert!(lab("AXB").is_linear().unwrap());
        assert!(lab("AAAA").is_linear().unwrap());
    }

    #[test]
    fn linearity_three_bases() {
        assert!(lab("AAXBBXCC").is_linear().unwrap());
        assert!(!lab("AABBACC").is_linear().unwrap());
        assert!(!lab("AACCBB").structural_violations().is_empty());
        assert!(!lab("AABBCCX").is_linear().unwrap());
    }

    #[test]
    fn linearity_rejects_invalid() {
        assert!(lab("BA").is_linear().is_err());
    }

    #[test]
    fn gold_segmentation_cuts() {
        assert_eq!(lab("AAXXBBBS").gold_segmentation().cuts(), &[2, 4, 7]);
        assert!(lab("AAAA").gold_segmentation().cuts().is_empty());
        assert_eq!(lab("AXXBBBBSSS").gold_segmentation().cuts(), &[1, 3, 7]);
    }

    #[test]
    fn base_congruent_merges_affixes() {
        assert_eq!(lab("AAXXBBBS").base_congruent_segmentation().cuts(), &[2, 4]);
        assert_eq!(lab("PPAABB").base_congruent_segmentation().cuts(), &[4]);
        assert!(lab("SSS").base_congruent_segmentation().cuts().is_empty());
    }

    #[test]
    fn display_round_trip() {
        let l = lab("PAXOBCS");
        assert_eq!(l.to_string(), "PAXOBCS");
        assert_eq!(l.labels()[5], Label::Base(2));
    }
}
