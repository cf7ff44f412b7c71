//! Extraction of the commonsense subgraph of Wikidata from KGTK-style tabular
//! dumps, plus analytics over the resulting edge files.
//!
//! The extraction applies three per-edge principles in sequence:
//!
//! 1. both endpoints must be concepts, judged by the capitalization of their
//!    English labels ([`concept`]);
//! 2. both endpoint labels must be common words or phrases according to a
//!    corpus frequency table ([`commonness`]);
//! 3. the relation must be a general-domain one, mapped onto the ConceptNet
//!    vocabulary, and neither endpoint may occur in a domain-specific relation
//!    ([`relations`]).
//!
//! [`pipeline`] wires these stages together over bounded memory, and
//! [`analytics`] computes statistics, PageRank, overlap and growth reports.

pub mod analytics;
pub mod commonness;
pub mod concept;
pub mod error;
pub mod exec;
pub mod extsort;
pub mod pipeline;
pub mod relations;
pub mod tabular;
pub mod tsv;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use tabular::{EdgeRecord, LabelMap};
