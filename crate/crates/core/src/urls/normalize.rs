use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::psl::{tail_labels, SuffixList};
use crate::error::{Error, Result};

/// A lowercase ASCII host reduced to its registrable domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedDomain(String);

impl NormalizedDomain {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Wraps a string already produced by a [`Normalizer`], e.g. when reading
    /// a previously written artifact.
    pub fn from_normalized(value: impl Into<String>) -> Self {
        NormalizedDomain(value.into())
    }
}

impl fmt::Display for NormalizedDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormalizedDomain {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for NormalizedDomain {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Google hostnames kept in full instead of being reduced to `google.com`.
pub fn default_exceptions() -> BTreeSet<String> {
    [
        "books.google.com",
        "sites.google.com",
        "scholar.google.com",
        "docs.google.com",
        "drive.google.com",
    ]
    .into_iter()
    .map(str::to_owned)
    .collect()
}

pub fn default_shorteners() -> BTreeSet<NormalizedDomain> {
    ["bit.ly", "goo.gl", "goog.le"]
        .into_iter()
        .map(NormalizedDomain::from_normalized)
        .collect()
}

/// Reads a one-entry-per-line list; blank lines and `#` comments are ignored.
pub fn read_domain_list(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_ascii_lowercase)
        .collect())
}

/// Reduces URLs to registrable domains.
///
/// Catalog entries and message links must go through the same `Normalizer`
/// so that classification compares like with like.
#[derive(Debug, Clone)]
pub struct Normalizer {
    suffixes: SuffixList,
    exceptions: BTreeSet<String>,
    naive: bool,
}

impl Normalizer {
    pub fn new(suffixes: SuffixList, exceptions: BTreeSet<String>) -> Self {
        Self {
            suffixes,
            exceptions: exceptions
                .into_iter()
                .map(|h| h.trim().trim_end_matches('.').to_ascii_lowercase())
                .collect(),
            naive: false,
        }
    }

    /// Bundled ICANN suffix rules with the default Google exceptions.
    pub fn with_defaults() -> Self {
        Self::new(SuffixList::bundled(false), default_exceptions())
    }

    /// Keep the last two labels of every host instead of consulting the
    /// suffix rules.
    pub fn naive(mut self, naive: bool) -> Self {
        self.naive = naive;
        self
    }

    pub fn exceptions(&self) -> &BTreeSet<String> {
        &self.exceptions
    }

    /// Lowercase ASCII host of a URL. Bare hostnames are accepted.
    pub fn host_of(url: &str) -> Result<String> {
        let trimmed = url.trim();
        let parsed = if trimmed.contains("://") {
            ::url::Url::parse(trimmed)
        } else {
            ::url::Url::parse(&format!("http://{trimmed}"))
        }
        .map_err(|_| Error::UnparseableAuthority(url.to_owned()))?;
        let host = match parsed.host() {
            Some(::url::Host::Domain(d)) => d.trim_end_matches('.').to_ascii_lowercase(),
            Some(::url::Host::Ipv4(ip)) => ip.to_string(),
            Some(::url::Host::Ipv6(ip)) => format!("[{ip}]"),
            None => return Err(Error::UnparseableAuthority(url.to_owned())),
        };
        if host.is_empty() {
            return Err(Error::UnparseableAuthority(url.to_owned()));
        }
        Ok(host)
    }

    pub fn normalize(&self, url: &str) -> Result<NormalizedDomain> {
        let host = Self::host_of(url)?;
        if self.exceptions.contains(&host) || is_ip(&host) {
            return Ok(NormalizedDomain(host));
        }
        if host.split('.').any(str::is_empty) {
            return Err(Error::UnparseableAuthority(url.to_owned()));
        }
        let domain = if self.naive {
            tail_labels(&host, 2)
        } else {
            self.suffixes.registrable_domain(&host).unwrap_or(&host)
        };
        Ok(NormalizedDomain(domain.to_owned()))
    }
}

fn is_ip(host: &str) -> bool {
    host.starts_with('[') || host.parse::<std::net::Ipv4Addr>().is_ok()
}
