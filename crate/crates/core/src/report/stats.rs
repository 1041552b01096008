use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Pipeline counters, serialised as a flat JSON object.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunStats {
    pub messages_total: u64,
    pub messages_with_url: u64,
    pub channels_with_urls: u64,
    pub selected_channels: u64,
    pub distinct_sources: u64,
    pub catalog_domains: u64,
    /// Stage-specific counters (skipped lines, expansion failures, graph
    /// size, ...), keyed by name.
    #[serde(flatten)]
    pub extra: BTreeMap<String, u64>,
}

impl RunStats {
    pub fn set(&mut self, key: &str, value: u64) {
        self.extra.insert(key.to_owned(), value);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialise");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
