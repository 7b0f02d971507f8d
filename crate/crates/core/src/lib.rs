//! Tools for analysing lexical blends (portmanteaux).
//!
//! The crate is organised around the PAXOBS character labeling:
//!
//! * [`dataset`] holds the labeling, complex-word records and corpus I/O.
//! * [`segeval`] scores predicted segmentations against a labeling.
//! * [`subword`] trains and applies BPE, Unigram LM and WordPiece tokenizers.
//! * [`tagger`] is a supervised character tagger and the all-chars baseline.
//! * [`segment`] adapts every system above to a common [`segment::Segmenter`].
//! * [`recovery`] generates base candidates and scores rankings (MRR, P@1).
//! * [`rankers`] contains edit distance, embedding, character LM and
//!   masked-LM rankers along with the masked-LM backend interface.
//! * [`probe`] measures contextual similarity of a word to its bases.
//! * [`jsonl`] reads and writes line-delimited JSON.

pub mod dataset;
pub mod jsonl;
pub mod probe;
pub mod rankers;
pub mod recovery;
pub mod segeval;
pub mod segment;
pub mod subword;
pub mod tagger;
pub mod text;

pub use dataset::{ComplexWordRecord, Label, PaxobsLabeling, Segmentation, WordClass};
