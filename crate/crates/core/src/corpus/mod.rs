//! Dataset records, the planted-bias toy corpus, and saliency export.

mod records;
mod saliency;
mod sampling;
mod toy;

pub use records::{load_records, parse_records, records_to_jsonl, write_records, TextRecord};
pub use saliency::{export_saliency, SaliencyTable};
pub use sampling::{downsample_protected, simulate_annotations};
pub use toy::{gen_toy_corpus, PlantedCorrelation, ToyCorpusSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("invalid corpus spec: {0}")]
    Spec(String),
    #[error("saliency export: {0}")]
    Saliency(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
