//! Taxonomy consistency checks for P31/P279 knowledge graphs.
//!
//! The crate is organised by stage: [`ingest`] builds a [`TaxonomyGraph`]
//! from triple files or dump lines, [`cme`] finds class/instance
//! anti-patterns, [`risk`] scores entities along four structural dimensions
//! and [`drift`] measures how far an entity's text sits from its parents'.

pub mod cme;
pub mod drift;
mod error;
pub mod fixtures;
mod graph;
mod id;
pub mod ingest;
pub mod policy;
pub mod risk;
mod text;

pub use error::{DriftError, EmbedError, GraphError, IngestError, LiveError, ParseIdError};
pub use graph::{
    Direction, Distance, DistanceMode, Edge, GraphBuilder, Neighborhood, Node, TaxonomyGraph,
};
pub use id::{EdgeKind, EntityId};
pub use policy::MetaclassPolicy;
pub use text::{sanitize, EntityText};
