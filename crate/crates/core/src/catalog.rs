//! The knowledge-source catalog: a flat set of registrable domains.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::thread;
use std::time::Duration;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::urls::{NormalizedDomain, Normalizer};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceCatalog {
    pub domains: BTreeSet<NormalizedDomain>,
    pub provenance: String,
    /// Input lines that could not be normalized.
    pub skipped: usize,
}

impl SourceCatalog {
    /// Normalizes each raw source URL or domain and collapses duplicates.
    pub fn from_lines<'a>(
        lines: impl IntoIterator<Item = &'a str>,
        normalizer: &Normalizer,
        provenance: impl Into<String>,
    ) -> Self {
        let mut catalog = SourceCatalog {
            provenance: provenance.into(),
            ..Default::default()
        };
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match normalizer.normalize(line) {
                Ok(d) => {
                    catalog.domains.insert(d);
                }
                Err(_) => catalog.skipped += 1,
            }
        }
        catalog
    }

    /// Exact-domain membership; `alum.mit.edu` does not match `mit.edu`.
    pub fn classify(&self, domain: &NormalizedDomain) -> bool {
        self.domains.contains(domain)
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.domains.contains(domain)
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// One domain per line, sorted, LF-terminated.
    pub fn to_file_string(&self) -> String {
        self.domains.iter().map(|d| format!("{d}\n")).collect()
    }

    /// Reads a catalog previously written with [`Self::to_file_string`].
    pub fn read_normalized(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(SourceCatalog {
            domains: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(NormalizedDomain::from_normalized)
                .collect(),
            provenance: path.display().to_string(),
            skipped: 0,
        })
    }
}

pub fn classify(domain: &NormalizedDomain, catalog: &SourceCatalog) -> bool {
    catalog.classify(domain)
}

/// Builds a catalog from a file of raw source URLs, one per line.
pub fn build_catalog_from_file(path: impl AsRef<Path>, normalizer: &Normalizer) -> Result<SourceCatalog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let lines = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(SourceCatalog::from_lines(
        lines.iter().map(String::as_str),
        normalizer,
        path.display().to_string(),
    ))
}

/// Cursor-paginated harvesting of source homepage URLs from an
/// OpenAlex-style `/sources` endpoint.
#[derive(Debug, Clone)]
pub struct Harvester {
    pub endpoint: String,
    pub page_size: usize,
    /// Dotted path of the URL field inside each result object.
    pub url_field: String,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
    pub proxy: Option<String>,
}

/// Result of one harvest run. When `complete` is false, `next_cursor` is
/// the cursor of the page that could not be fetched and resumes the run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarvestOutcome {
    pub pages: usize,
    pub urls: usize,
    pub retries: u32,
    pub complete: bool,
    pub next_cursor: Option<String>,
}

enum PageError {
    Transient(String),
    Fatal(String),
}

impl Harvester {
    pub fn new(endpoint: impl Into<String>, page_size: usize) -> Self {
        Self {
            endpoint: endpoint.into(),
            page_size,
            url_field: "homepage_url".into(),
            max_retries: 5,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
            proxy: None,
        }
    }

    fn page_url(&self, cursor: &str) -> Result<String> {
        let mut url = ::url::Url::parse(&self.endpoint)
            .map_err(|e| Error::InvalidParameter(format!("endpoint {}: {e}", self.endpoint)))?;
        url.query_pairs_mut()
            .append_pair("per-page", &self.page_size.to_string())
            .append_pair("cursor", cursor);
        Ok(url.into())
    }

    fn fetch(&self, agent: &ureq::Agent, url: &str) -> std::result::Result<Value, PageError> {
        let mut response = match agent.get(url).call() {
            Ok(r) => r,
            Err(e) => return Err(PageError::Transient(e.to_string())),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(PageError::Transient(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(PageError::Fatal(format!("HTTP {status}")));
        }
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| PageError::Transient(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| PageError::Fatal(format!("bad page body: {e}")))
    }

    /// Walks the cursor chain from `start_cursor` (`*` for a fresh run),
    /// handing every URL to `sink` as soon as its page arrives.
    pub fn run(&self, start_cursor: Option<&str>, mut sink: impl FnMut(&str) -> Result<()>) -> Result<HarvestOutcome> {
        if self.page_size == 0 {
            return Err(Error::InvalidParameter("page size must be positive".into()));
        }
        let agent = crate::urls::build_agent_for(self.timeout, self.proxy.as_deref())?;
        let mut outcome = HarvestOutcome::default();
        let mut cursor = start_cursor.unwrap_or("*").to_owned();
        loop {
            let url = self.page_url(&cursor)?;
            let mut attempt = 0;
            let page = loop {
                match self.fetch(&agent, &url) {
                    Ok(page) => break Some(page),
                    Err(PageError::Transient(reason)) if attempt < self.max_retries => {
                        let backoff = self.initial_backoff * 2u32.pow(attempt);
                        log::warn!("page {url}: {reason}; retry {} in {backoff:?}", attempt + 1);
                        attempt += 1;
                        outcome.retries += 1;
                        thread::sleep(backoff);
                    }
                    Err(PageError::Transient(reason) | PageError::Fatal(reason)) => {
                        log::error!("giving up on page {url}: {reason}");
                        break None;
                    }
                }
            };
            let Some(page) = page else {
                outcome.next_cursor = Some(cursor);
                return Ok(outcome);
            };
            let results = page
                .get("results")
                .and_then(Value::as_array)
                .map(Vec::as_slice)
                .unwrap_or_default();
            if results.is_empty() {
                break;
            }
            outcome.pages += 1;
            for item in results {
                let value = self
                    .url_field
                    .split('.')
                    .try_fold(item, |v, key| v.get(key))
                    .and_then(Value::as_str);
                if let Some(u) = value.filter(|u| !u.trim().is_empty()) {
                    sink(u)?;
                    outcome.urls += 1;
                }
            }
            match page
                .get("meta")
                .and_then(|m| m.get("next_cursor"))
                .and_then(Value::as_str)
            {
                Some(next) if !next.is_empty() => cursor = next.to_owned(),
                _ => break,
            }
        }
        outcome.complete = true;
        Ok(outcome)
    }
}

/// Collects every source URL of a complete harvest.
pub fn harvest_sources(harvester: &Harvester) -> Result<(Vec<String>, HarvestOutcome)> {
    let mut urls = Vec::new();
    let outcome = harvester.run(None, |u| {
        urls.push(u.to_owned());
        Ok(())
    })?;
    Ok((urls, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mockserver::{MockResponse, MockServer};

    fn catalog(lines: &[&str]) -> SourceCatalog {
        SourceCatalog::from_lines(lines.iter().copied(), &Normalizer::with_defaults(), "test")
    }

    #[test]
    fn dedup_after_normalization() {
        let c = catalog(&["https://www.nature.com/nmat", "nature.com"]);
        assert_eq!(c.len(), 1);
        assert!(c.contains("nature.com"));
    }

    #[test]
    fn empty_catalog_classifies_nothing() {
        let c = catalog(&[]);
        assert!(c.is_empty());
        assert!(!classify(&NormalizedDomain::from_normalized("nature.com"), &c));
    }

    #[test]
    fn classification_is_exact() {
        let c = catalog(&["https://www.nature.com", "http://web.mit.edu/"]);
        let n = Normalizer::with_defaults();
        assert!(c.classify(&n.normalize("https://nature.com/articles/x").unwrap()));
        assert!(!c.classify(&n.normalize("https://www.bbc.com/news").unwrap()));
        assert!(c.contains("mit.edu"));
        assert!(!c.contains("alum.mit.edu"));
    }

    #[test]
    fn unparseable_lines_are_counted() {
        let c = catalog(&["http://", "  ", "# comment", "arxiv.org"]);
        assert_eq!(c.len(), 1);
        assert_eq!(c.skipped, 1);
    }

    #[test]
    fn file_round_trip() {
        let c = catalog(&["b.org", "a.org"]);
        assert_eq!(c.to_file_string(), "a.org\nb.org\n");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cat.txt");
        std::fs::write(&p, c.to_file_string()).unwrap();
        assert_eq!(SourceCatalog::read_normalized(&p).unwrap().domains, c.domains);
    }

    fn page(urls: &[&str], next: Option<&str>) -> MockResponse {
        let results: Vec<_> = urls
            .iter()
            .map(|u| serde_json::json!({ "id": u, "homepage_url": u }))
            .collect();
        MockResponse::json(serde_json::json!({ "meta": { "next_cursor": next }, "results": results }).to_string())
    }

    fn harvester(server: &MockServer) -> Harvester {
        Harvester {
            proxy: Some(server.url()),
            initial_backoff: Duration::from_millis(1),
            ..Harvester::new("http://api.test/sources", 2)
        }
    }

    #[test]
    fn empty_first_page() {
        let server = MockServer::builder()
            .route("api.test", "/sources", page(&[], None))
            .start()
            .unwrap();
        let (urls, outcome) = harvest_sources(&harvester(&server)).unwrap();
        assert!(urls.is_empty());
        assert!(outcome.complete);
    }

    #[test]
    fn fatal_status_stops_with_resume_cursor() {
        let server = MockServer::builder()
            .route(
                "api.test",
                "/sources?per-page=2&cursor=*",
                page(&["http://a.org"], Some("c2")),
            )
            .route("api.test", "/sources?per-page=2&cursor=c2", MockResponse::status(403))
            .start()
            .unwrap();
        let (urls, outcome) = harvest_sources(&harvester(&server)).unwrap();
        assert_eq!(urls, ["http://a.org"]);
        assert!(!outcome.complete);
        assert_eq!(outcome.next_cursor.as_deref(), Some("c2"));
        assert_eq!(outcome.retries, 0);
    }
}
