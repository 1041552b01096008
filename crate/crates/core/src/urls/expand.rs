//! Shortened-link expansion by following HTTP redirects.

use std::collections::{BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::extract::RawUrl;
use super::normalize::{NormalizedDomain, Normalizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    None,
    Timeout,
    TooManyRedirects,
    NetworkError,
    NotAShortener,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::None => "none",
            FailureReason::Timeout => "timeout",
            FailureReason::TooManyRedirects => "too_many_redirects",
            FailureReason::NetworkError => "network_error",
            FailureReason::NotAShortener => "not_a_shortener",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => FailureReason::None,
            "timeout" => FailureReason::Timeout,
            "too_many_redirects" => FailureReason::TooManyRedirects,
            "network_error" => FailureReason::NetworkError,
            "not_a_shortener" => FailureReason::NotAShortener,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedUrl {
    pub original: RawUrl,
    pub final_url: String,
    pub expanded: bool,
    pub failure: FailureReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionPolicy {
    pub max_hops: u32,
    pub timeout_ms: u64,
    /// Minimum spacing between two requests to the same host.
    pub politeness_ms: u64,
    pub concurrency: usize,
    /// Never touch the network; uncached shortened links fail with
    /// `network_error`.
    pub offline: bool,
    /// HTTP proxy for all requests. `None` reads the usual proxy variables.
    pub proxy: Option<String>,
}

impl Default for ExpansionPolicy {
    fn default() -> Self {
        Self {
            max_hops: 10,
            timeout_ms: 10_000,
            politeness_ms: 200,
            concurrency: 8,
            offline: false,
            proxy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Resolution {
    final_url: String,
    expanded: bool,
    failure: FailureReason,
}

impl Resolution {
    fn failed(original: &str, failure: FailureReason) -> Self {
        Self {
            final_url: original.to_owned(),
            expanded: false,
            failure,
        }
    }
}

pub(crate) fn build_agent(timeout: Duration, proxy: Option<&str>) -> Result<ureq::Agent> {
    let proxy = match proxy {
        Some(p) => Some(ureq::Proxy::new(p).map_err(|e| Error::Network(format!("proxy {p}: {e}")))?),
        None => ureq::Proxy::try_from_env(),
    };
    let config = ureq::Agent::config_builder()
        .max_redirects(0)
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .proxy(proxy)
        .user_agent(concat!("coalitions/", env!("CARGO_PKG_VERSION")))
        .build();
    Ok(config.into())
}

pub(crate) fn is_timeout(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::Timeout(_) => true,
        ureq::Error::Io(e) => matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock),
        _ => false,
    }
}

/// Resolves shortened links, caching results by the exact original string.
///
/// Successful expansions can be persisted to an append-only two-column file
/// (`original<TAB>final`) that is reloaded on the next run.
pub struct Expander {
    shorteners: BTreeSet<NormalizedDomain>,
    normalizer: Normalizer,
    policy: ExpansionPolicy,
    agent: Option<ureq::Agent>,
    cache: Mutex<HashMap<String, Resolution>>,
    next_slot: Mutex<HashMap<String, Instant>>,
    journal: Option<Mutex<BufWriter<File>>>,
}

impl Expander {
    pub fn new(
        shorteners: BTreeSet<NormalizedDomain>,
        normalizer: Normalizer,
        policy: ExpansionPolicy,
    ) -> Result<Self> {
        let agent = if policy.offline {
            None
        } else {
            Some(build_agent(
                Duration::from_millis(policy.timeout_ms),
                policy.proxy.as_deref(),
            )?)
        };
        Ok(Self {
            shorteners,
            normalizer,
            policy,
            agent,
            cache: Mutex::new(HashMap::new()),
            next_slot: Mutex::new(HashMap::new()),
            journal: None,
        })
    }

    /// Loads previous expansions from `path` and appends new successful ones
    /// to it. Returns the number of entries loaded.
    pub fn with_cache_file(mut self, path: impl AsRef<Path>) -> Result<(Self, usize)> {
        let path = path.as_ref();
        let mut loaded = 0;
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
            let cache = self.cache.get_mut().expect("cache lock");
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io("reading expansion cache", e))?;
                if let Some((original, target)) = line.split_once('\t') {
                    cache.insert(
                        original.to_owned(),
                        Resolution {
                            final_url: target.to_owned(),
                            expanded: true,
                            failure: FailureReason::None,
                        },
                    );
                    loaded += 1;
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        self.journal = Some(Mutex::new(BufWriter::new(file)));
        Ok((self, loaded))
    }

    pub fn is_shortener(&self, url: &str) -> bool {
        self.normalizer
            .normalize(url)
            .map(|d| self.shorteners.contains(&d))
            .unwrap_or(false)
    }

    pub fn expand(&self, url: &RawUrl) -> ExpandedUrl {
        let resolution = self.resolve(&url.value);
        ExpandedUrl {
            original: url.clone(),
            final_url: resolution.final_url,
            expanded: resolution.expanded,
            failure: resolution.failure,
        }
    }

    /// Expands many links with at most `policy.concurrency` requests in
    /// flight. Each distinct original is resolved once. Output order matches
    /// input order.
    pub fn expand_all(&self, urls: &[RawUrl]) -> Vec<ExpandedUrl> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut unique: Vec<&str> = Vec::new();
        for u in urls {
            index.entry(&u.value).or_insert_with(|| {
                unique.push(&u.value);
                unique.len() - 1
            });
        }
        let workers = self.policy.concurrency.max(1).min(unique.len().max(1));
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Resolution>>> = unique.iter().map(|_| Mutex::new(None)).collect();
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(url) = unique.get(i) else { break };
                    *slots[i].lock().expect("slot lock") = Some(self.resolve(url));
                });
            }
        });
        let resolved: Vec<Resolution> = slots
            .into_iter()
            .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
            .collect();
        urls.iter()
            .map(|u| {
                let r = &resolved[index[u.value.as_str()]];
                ExpandedUrl {
                    original: u.clone(),
                    final_url: r.final_url.clone(),
                    expanded: r.expanded,
                    failure: r.failure,
                }
            })
            .collect()
    }

    pub fn flush(&self) -> Result<()> {
        if let Some(journal) = &self.journal {
            journal
                .lock()
                .expect("journal lock")
                .flush()
                .map_err(|e| Error::io("writing expansion cache", e))?;
        }
        Ok(())
    }

    fn resolve(&self, original: &str) -> Resolution {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(original) {
            return hit.clone();
        }
        let computed = if !self.is_shortener(original) {
            Resolution::failed(original, FailureReason::NotAShortener)
        } else {
            match &self.agent {
                None => Resolution::failed(original, FailureReason::NetworkError),
                Some(agent) => self.follow(agent, original),
            }
        };
        let mut cache = self.cache.lock().expect("cache lock");
        // Another worker may have resolved the same link meanwhile; the first
        // stored answer wins.
        if let Some(existing) = cache.get(original) {
            return existing.clone();
        }
        if computed.expanded {
            if let Some(journal) = &self.journal {
                let mut j = journal.lock().expect("journal lock");
                if let Err(e) = writeln!(j, "{original}\t{}", computed.final_url) {
                    log::warn!("cannot append to expansion cache: {e}");
                }
            }
        }
        cache.insert(original.to_owned(), computed.clone());
        computed
    }

    /// Waits until `host` may be contacted again.
    fn wait_turn(&self, host: &str) {
        let delay = Duration::from_millis(self.policy.politeness_ms);
        if delay.is_zero() {
            return;
        }
        let wait = {
            let mut slots = self.next_slot.lock().expect("politeness lock");
            let now = Instant::now();
            let slot = slots.entry(host.to_owned()).or_insert(now);
            let start = (*slot).max(now);
            *slot = start + delay;
            start - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }

    fn follow(&self, agent: &ureq::Agent, original: &str) -> Resolution {
        let Ok(mut current) = ::url::Url::parse(original) else {
            return Resolution::failed(original, FailureReason::NetworkError);
        };
        let mut hops = 0;
        loop {
            if let Some(host) = current.host_str() {
                self.wait_turn(host);
            }
            let response = match agent.head(current.as_str()).call() {
                // Some servers refuse HEAD.
                Ok(r) if matches!(r.status().as_u16(), 405 | 501) => agent.get(current.as_str()).call(),
                other => other,
            };
            let response = match response {
                Ok(r) => r,
                Err(e) if is_timeout(&e) => return Resolution::failed(original, FailureReason::Timeout),
                Err(e) => {
                    log::debug!("expanding {original}: {e}");
                    return Resolution::failed(original, FailureReason::NetworkError);
                }
            };
            let status = response.status();
            let location = response
                .headers()
                .get("location")
                .and_then(|v| v.to_str().ok())
                .map(str::to_owned);
            match (status.is_redirection(), location) {
                (true, Some(location)) => {
                    if hops == self.policy.max_hops {
                        return Resolution::failed(original, FailureReason::TooManyRedirects);
                    }
                    match current.join(&location) {
                        Ok(next) => current = next,
                        Err(_) => return Resolution::failed(original, FailureReason::NetworkError),
                    }
                    hops += 1;
                }
                _ if hops == 0 => {
                    // The shortener itself did not redirect.
                    let failure = if status.is_client_error() || status.is_server_error() {
                        FailureReason::NetworkError
                    } else {
                        FailureReason::None
                    };
                    return Resolution::failed(original, failure);
                }
                _ => {
                    return Resolution {
                        final_url: current.to_string(),
                        expanded: true,
                        failure: FailureReason::None,
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mockserver::{MockResponse, MockServer};

    fn raw(url: &str) -> RawUrl {
        RawUrl {
            value: url.into(),
            message_id: "m".into(),
            channel_id: "c".into(),
        }
    }

    fn shorteners() -> BTreeSet<NormalizedDomain> {
        ["short.test", "loop.test", "dead.test"]
            .into_iter()
            .map(NormalizedDomain::from_normalized)
            .collect()
    }

    fn expander(server: &MockServer) -> Expander {
        let policy = ExpansionPolicy {
            proxy: Some(server.url()),
            politeness_ms: 0,
            timeout_ms: 2_000,
            max_hops: 3,
            ..ExpansionPolicy::default()
        };
        Expander::new(shorteners(), Normalizer::with_defaults(), policy).unwrap()
    }

    #[test]
    fn non_shortener_is_untouched() {
        let server = MockServer::builder().start().unwrap();
        let e = expander(&server).expand(&raw("https://nature.com/x"));
        assert!(!e.expanded);
        assert_eq!(e.failure, FailureReason::NotAShortener);
        assert_eq!(e.final_url, "https://nature.com/x");
        assert!(server.requests().is_empty());
    }

    #[test]
    fn follows_two_hops() {
        let server = MockServer::builder()
            .route("short.test", "/a", MockResponse::redirect(301, "/b"))
            .route("short.test", "/b", MockResponse::redirect(302, "http://target.test/b"))
            .route("target.test", "/b", MockResponse::ok("hi"))
            .start()
            .unwrap();
        let e = expander(&server).expand(&raw("http://short.test/a"));
        assert_eq!(e.final_url, "http://target.test/b");
        assert!(e.expanded);
        assert_eq!(e.failure, FailureReason::None);
    }

    #[test]
    fn loop_stops_at_hop_cap() {
        let server = MockServer::builder()
            .route("loop.test", "/x", MockResponse::redirect(302, "/y"))
            .route("loop.test", "/y", MockResponse::redirect(302, "/x"))
            .start()
            .unwrap();
        let e = expander(&server).expand(&raw("http://loop.test/x"));
        assert_eq!(e.failure, FailureReason::TooManyRedirects);
        assert_eq!(e.final_url, "http://loop.test/x");
        assert_eq!(server.requests().len(), 4);
    }

    #[test]
    fn offline_mode_fails_without_requests() {
        let policy = ExpansionPolicy {
            offline: true,
            ..ExpansionPolicy::default()
        };
        let x = Expander::new(shorteners(), Normalizer::with_defaults(), policy).unwrap();
        let e = x.expand(&raw("http://short.test/zz"));
        assert_eq!(e.failure, FailureReason::NetworkError);
        assert!(!e.expanded);
    }

    #[test]
    fn cache_is_coherent_and_persisted() {
        let server = MockServer::builder()
            .route("short.test", "/c", MockResponse::redirect(301, "http://t.test/1"))
            .route("short.test", "/c", MockResponse::redirect(301, "http://t.test/2"))
            .start()
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let (x, loaded) = expander(&server).with_cache_file(&path).unwrap();
        assert_eq!(loaded, 0);
        let first = x.expand(&raw("http://short.test/c"));
        let second = x.expand(&raw("http://short.test/c"));
        assert_eq!(first, second);
        assert_eq!(first.final_url, "http://t.test/1");
        x.flush().unwrap();
        drop(x);
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "http://short.test/c\thttp://t.test/1\n"
        );
        let (y, loaded) = expander(&server).with_cache_file(&path).unwrap();
        assert_eq!(loaded, 1);
        assert_eq!(y.expand(&raw("http://short.test/c")).final_url, "http://t.test/1");
    }

    #[test]
    fn expand_all_preserves_order() {
        let server = MockServer::builder()
            .route("short.test", "/1", MockResponse::redirect(301, "http://one.test/"))
            .route("short.test", "/2", MockResponse::redirect(301, "http://two.test/"))
            .start()
            .unwrap();
        let urls = [
            raw("http://short.test/2"),
            raw("http://x.org"),
            raw("http://short.test/1"),
        ];
        let out = expander(&server).expand_all(&urls);
        let finals: Vec<_> = out.iter().map(|e| e.final_url.as_str()).collect();
        assert_eq!(finals, ["http://two.test/", "http://x.org", "http://one.test/"]);
    }
}
