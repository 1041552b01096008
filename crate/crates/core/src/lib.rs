//! Mining narrative coalitions from message-channel archives.
//!
//! Channels are compared through the knowledge sources they link to: links
//! are extracted from messages, expanded, reduced to registrable domains and
//! classified against a catalog of scholarly sources. A binary
//! channel × source citation matrix then yields bibliographic coupling
//! frequencies (shared-source counts) between channels, the coupling graph is
//! partitioned with Louvain and laid out with ForceAtlas2.
//!
//! Community detection and layout are generic over [`Scalar`]; the aliases
//! below fix the usual `f64` instantiation.

pub mod catalog;
pub mod communities;
pub mod coupling;
pub mod error;
pub mod ingest;
pub mod layout;
pub mod matrix;
pub mod mockserver;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod urls;

pub use catalog::SourceCatalog;
pub use coupling::{CouplingGraph, WeightMap};
pub use error::{Error, Result};
pub use matrix::{ChannelCitationProfile, CitationMatrix};
pub use scalar::Scalar;
pub use urls::{NormalizedDomain, Normalizer};

pub type CommunityAssignment = communities::CommunityAssignment<f64>;
pub type CommunityAssignment32 = communities::CommunityAssignment<f32>;
pub type LouvainParams = communities::LouvainParams<f64>;
pub type LayoutPositions = layout::LayoutPositions<f64>;
pub type LayoutPositions32 = layout::LayoutPositions<f32>;
pub type LayoutParams = layout::LayoutParams<f64>;
pub type NodeAttributes = layout::NodeAttributes<f64>;
