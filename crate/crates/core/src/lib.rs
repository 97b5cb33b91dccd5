//! Outlet-specific word embeddings and cross-outlet comparison.
//!
//! Two news corpora are tokenized, merged into phrases and trained into
//! separate skip-gram spaces with hierarchical softmax. A linear map carries
//! one space into the other, and words are ranked by how far their mapped
//! vector lands from their counterpart, relative to other words of similar
//! frequency.
//!
//! The [`pipeline`] module runs the stages on a run directory; the other
//! modules can be used on their own.
//!
//! ```no_run
//! use outlet_lens::corpus::{tokenize, detect_phrases};
//!
//! let docs = vec![tokenize("Tax cuts and tax reform")];
//! let table = detect_phrases(&docs, 90.0, 25).unwrap();
//! assert!(table.is_empty());
//! ```

pub mod align;
pub mod analysis;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod stats;
pub mod store;
pub mod synth;
pub mod train;
pub mod vocab;

pub use error::{Error, Result};
pub use pipeline::PipelineConfig;
