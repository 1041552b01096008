//! Domain-frequency rankings, run statistics, coalition tables and graph
//! exports.

mod chart;
mod gexf;
mod stats;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use chart::bar_chart_svg;
pub use gexf::{export_gexf, render_gexf, PALETTE};
pub use stats::RunStats;

use crate::catalog::SourceCatalog;
use crate::communities::CoalitionReport;
use crate::error::{Error, Result};
use crate::matrix::ProfileSet;
use crate::scalar::Scalar;
use crate::urls::NormalizedDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Combined,
    CatalogOnly,
    NonCatalogOnly,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Combined, Segment::CatalogOnly, Segment::NonCatalogOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Segment::Combined => "combined",
            Segment::CatalogOnly => "catalog_only",
            Segment::NonCatalogOnly => "non_catalog_only",
        }
    }

    fn admits(self, is_catalog: bool) -> bool {
        match self {
            Segment::Combined => true,
            Segment::CatalogOnly => is_catalog,
            Segment::NonCatalogOnly => !is_catalog,
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyRow {
    pub domain: NormalizedDomain,
    /// Distinct channels linking to the domain; the ranking key.
    pub channel_count: u64,
    pub link_total: u64,
    pub is_catalog: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyReport {
    pub segment: Segment,
    pub top_n: usize,
    /// Channel count descending, then domain ascending.
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "domain", "channel_count", "link_total", "is_catalog"])
            .and_then(|_| {
                for (i, r) in self.rows.iter().enumerate() {
                    w.write_record([
                        (i + 1).to_string(),
                        r.domain.to_string(),
                        r.channel_count.to_string(),
                        r.link_total.to_string(),
                        r.is_catalog.to_string(),
                    ])?;
                }
                Ok(())
            })
            .map_err(csv_err)?;
        finish(w)
    }
}

/// Ranks domains by the number of distinct channels linking to them.
pub fn frequency_report(
    profiles: &ProfileSet,
    catalog: &SourceCatalog,
    segment: Segment,
    top_n: usize,
) -> Result<FrequencyReport> {
    if top_n == 0 {
        return Err(Error::InvalidParameter("top_n must be at least 1".into()));
    }
    let mut tally: BTreeMap<&NormalizedDomain, (u64, u64)> = BTreeMap::new();
    for p in profiles.profiles.values() {
        for (domain, &count) in &p.domain_counts {
            let e = tally.entry(domain).or_default();
            e.0 += 1;
            e.1 += count;
        }
    }
    let mut rows: Vec<FrequencyRow> = tally
        .into_iter()
        .map(|(domain, (channel_count, link_total))| FrequencyRow {
            is_catalog: catalog.classify(domain),
            domain: domain.clone(),
            channel_count,
            link_total,
        })
        .filter(|r| segment.admits(r.is_catalog))
        .collect();
    // The tally is already in domain order, so a stable sort keeps the tie-break.
    rows.sort_by_key(|r| std::cmp::Reverse(r.channel_count));
    rows.truncate(top_n);
    Ok(FrequencyReport { segment, top_n, rows })
}

/// One CSV row per channel: its community, whether the community is a main
/// coalition, and the channel's rank by degree inside it.
pub fn coalitions_csv<T: Scalar>(reports: &[CoalitionReport<T>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = || -> csv::Result<()> {
        w.write_record([
            "community",
            "main",
            "size",
            "share",
            "rank",
            "channel_id",
            "title",
            "degree",
        ])?;
        for r in reports {
            for (i, m) in r.members.iter().enumerate() {
                w.write_record([
                    r.community.to_string(),
                    r.main.to_string(),
                    r.size.to_string(),
                    format!("{:.6}", r.share),
                    (i + 1).to_string(),
                    m.channel_id.clone(),
                    m.title.clone(),
                    m.degree.to_string(),
                ])?;
            }
        }
        Ok(())
    };
    write().map_err(csv_err)?;
    finish(w)
}

/// The sources removed before coupling, with their citing-channel counts.
pub fn excluded_sources_csv(removed: &[(NormalizedDomain, usize)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = || -> csv::Result<()> {
        w.write_record(["rank", "domain", "channel_count"])?;
        for (i, (d, n)) in removed.iter().enumerate() {
            w.write_record([(i + 1).to_string(), d.to_string(), n.to_string()])?;
        }
        Ok(())
    };
    write().map_err(csv_err)?;
    finish(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::io("writing CSV", std::io::Error::other(e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("writing CSV", std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}
