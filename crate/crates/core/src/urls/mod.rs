//! URL extraction, shortener expansion and registrable-domain normalization.

mod expand;
mod extract;
mod normalize;
mod psl;

pub use expand::{ExpandedUrl, Expander, ExpansionPolicy, FailureReason};
pub use extract::{extract_from_message, extract_urls, RawUrl};
pub use normalize::{default_exceptions, default_shorteners, read_domain_list, NormalizedDomain, Normalizer};
pub use psl::{SuffixList, BUNDLED_PSL};

pub(crate) use expand::build_agent as build_agent_for;
