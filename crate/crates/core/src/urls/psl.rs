//! Public-suffix rule matching over the standard `public_suffix_list.dat` format.

use std::collections::HashSet;

/// Snapshot of the public-suffix list shipped with the crate.
pub const BUNDLED_PSL: &str = include_str!("../../data/public_suffix_list.dat");

/// Parsed public-suffix rules. Rules are stored in ASCII (punycode) form.
#[derive(Debug, Clone, Default)]
pub struct SuffixList {
    exact: HashSet<String>,
    /// `*.foo` rules, stored as `foo`.
    wildcard: HashSet<String>,
    /// `!foo.bar` rules, stored as `foo.bar`.
    exception: HashSet<String>,
}

fn to_ascii(rule: &str) -> Option<String> {
    if rule.is_ascii() {
        return Some(rule.to_ascii_lowercase());
    }
    ::url::Url::parse(&format!("http://{rule}"))
        .ok()
        .and_then(|u| u.host_str().map(str::to_owned))
}

impl SuffixList {
    /// Parses list text. Rules after the `BEGIN PRIVATE DOMAINS` marker are
    /// kept only when `include_private` is set.
    pub fn parse(text: &str, include_private: bool) -> Self {
        let mut list = SuffixList::default();
        let mut private = false;
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with("//") {
                if line.contains("===BEGIN PRIVATE DOMAINS===") {
                    private = true;
                } else if line.contains("===END PRIVATE DOMAINS===") {
                    private = false;
                }
                continue;
            }
            // A rule ends at the first whitespace.
            let Some(rule) = line.split_whitespace().next() else {
                continue;
            };
            if private && !include_private {
                continue;
            }
            if let Some(rest) = rule.strip_prefix('!') {
                if let Some(r) = to_ascii(rest) {
                    list.exception.insert(r);
                }
            } else if let Some(rest) = rule.strip_prefix("*.") {
                if let Some(r) = to_ascii(rest) {
                    list.wildcard.insert(r);
                }
            } else if let Some(r) = to_ascii(rule) {
                list.exact.insert(r);
            }
        }
        list
    }

    pub fn bundled(include_private: bool) -> Self {
        Self::parse(BUNDLED_PSL, include_private)
    }

    pub fn rule_count(&self) -> usize {
        self.exact.len() + self.wildcard.len() + self.exception.len()
    }

    /// Number of trailing labels of `host` forming its public suffix.
    fn suffix_labels(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        let joined = |i: usize| labels[i..].join(".");
        // Exception rules win over every other rule.
        for i in 0..n {
            if self.exception.contains(&joined(i)) {
                return n - i - 1;
            }
        }
        // Implicit `*` rule: the last label is always a suffix.
        let mut best = 1;
        for i in 0..n {
            let candidate = joined(i);
            if self.exact.contains(&candidate) {
                best = best.max(n - i);
            }
            if i >= 1 && self.wildcard.contains(&candidate) {
                best = best.max(n - i + 1);
            }
        }
        best
    }

    /// The public suffix of a lowercase ASCII host.
    pub fn public_suffix<'h>(&self, host: &'h str) -> &'h str {
        let labels: Vec<&str> = host.split('.').collect();
        let k = self.suffix_labels(&labels).min(labels.len());
        tail_labels(host, k)
    }

    /// The registrable domain (public suffix plus one label), or `None` when
    /// the host is itself a public suffix.
    pub fn registrable_domain<'h>(&self, host: &'h str) -> Option<&'h str> {
        let labels: Vec<&str> = host.split('.').collect();
        if labels.iter().any(|l| l.is_empty()) {
            return None;
        }
        let k = self.suffix_labels(&labels);
        (labels.len() > k).then(|| tail_labels(host, k + 1))
    }
}

/// The last `k` dot-separated labels of `host`.
pub(crate) fn tail_labels(host: &str, k: usize) -> &str {
    if k == 0 {
        return "";
    }
    let mut seen = 0;
    for (i, b) in host.bytes().enumerate().rev() {
        if b == b'.' {
            seen += 1;
            if seen == k {
                return &host[i + 1..];
            }
        }
    }
    host
}
