//! Repository trend mining.
//!
//! The crate ingests repository metadata from collaboration platforms into a
//! common record format ([`schema`]), turns descriptions into token documents
//! ([`textprep`]), and analyzes them with an online stream clusterer with
//! fading micro-clusters ([`textclust`]), Pareto non-domination filtering
//! ([`select`]), LDA topic modeling ([`topics`]) and descriptive statistics
//! ([`analytics`]).

pub mod analytics;
pub mod error;
pub mod ingest;
pub mod io;
mod rank;
pub mod schema;
pub mod select;
pub mod synthetic;
pub mod textclust;
pub mod textprep;
pub mod topics;

pub use error::{Error, Result};
pub use schema::{CorpusHandle, Platform, RepoRecord};
pub use textclust::{ClustererConfig, MicroCluster, TextClust};
pub use textprep::{SparseVector, TokenDoc};
pub use topics::{LdaConfig, TopicModel};
