//! Channel citation profiles and the binary source × channel citation matrix.
//!
//! Rows are sources (lexicographic), columns are channels (in selection
//! order). Entry `(s, c)` is 1 iff channel `c` links to source `s` at least
//! once. The matrix is stored column-compressed: each column holds the sorted
//! row indices of its non-zero entries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::urls::NormalizedDomain;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelCitationProfile {
    pub channel_id: String,
    pub domain_counts: BTreeMap<NormalizedDomain, u64>,
    pub catalog_link_total: u64,
}

impl ChannelCitationProfile {
    pub fn link_total(&self) -> u64 {
        self.domain_counts.values().sum()
    }
}

/// Profiles of every channel plus the catalog classification of each domain
/// seen.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfileSet {
    pub profiles: BTreeMap<String, ChannelCitationProfile>,
    pub catalog_domains: BTreeSet<NormalizedDomain>,
}

impl ProfileSet {
    /// Counts one link occurrence.
    pub fn record(&mut self, channel_id: &str, domain: NormalizedDomain, is_catalog: bool) {
        let profile = match self.profiles.get_mut(channel_id) {
            Some(p) => p,
            None => self
                .profiles
                .entry(channel_id.to_owned())
                .or_insert_with(|| ChannelCitationProfile {
                    channel_id: channel_id.to_owned(),
                    ..Default::default()
                }),
        };
        if is_catalog {
            profile.catalog_link_total += 1;
            if !self.catalog_domains.contains(&domain) {
                self.catalog_domains.insert(domain.clone());
            }
        }
        *profile.domain_counts.entry(domain).or_insert(0) += 1;
    }

    /// Adds the counts of another (disjointly aggregated) shard.
    pub fn merge(&mut self, other: ProfileSet) {
        self.catalog_domains.extend(other.catalog_domains);
        for (id, theirs) in other.profiles {
            let mine = self
                .profiles
                .entry(id.clone())
                .or_insert_with(|| ChannelCitationProfile {
                    channel_id: id,
                    ..Default::default()
                });
            mine.catalog_link_total += theirs.catalog_link_total;
            for (d, n) in theirs.domain_counts {
                *mine.domain_counts.entry(d).or_insert(0) += n;
            }
        }
    }

    pub fn is_catalog(&self, domain: &NormalizedDomain) -> bool {
        self.catalog_domains.contains(domain)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Distinct domains cited by any channel.
    pub fn distinct_domains(&self) -> BTreeSet<&NormalizedDomain> {
        self.profiles.values().flat_map(|p| p.domain_counts.keys()).collect()
    }

    /// Restricts the set to the given channels.
    pub fn subset(&self, channels: &[String]) -> ProfileSet {
        let profiles: BTreeMap<_, _> = channels
            .iter()
            .filter_map(|c| self.profiles.get(c).map(|p| (c.clone(), p.clone())))
            .collect();
        let catalog_domains = profiles
            .values()
            .flat_map(|p| p.domain_counts.keys())
            .filter(|d| self.catalog_domains.contains(*d))
            .cloned()
            .collect();
        ProfileSet {
            profiles,
            catalog_domains,
        }
    }

    /// Tab-separated `channel_id  domain  count  is_catalog`, sorted.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("channel_id\tdomain\tcount\tis_catalog\n");
        for p in self.profiles.values() {
            for (d, n) in &p.domain_counts {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", p.channel_id, d, n, u8::from(self.is_catalog(d)));
            }
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut set = ProfileSet::default();
        for (i, line) in text.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.split('\t').collect();
            let [channel, domain, count, flag] = fields[..] else {
                return Err(Error::malformed(path, format!("line {}: expected 4 columns", i + 1)));
            };
            let count: u64 = count
                .parse()
                .map_err(|_| Error::malformed(path, format!("line {}: bad count", i + 1)))?;
            let is_catalog = flag == "1";
            let domain = NormalizedDomain::from_normalized(domain);
            let profile = set
                .profiles
                .entry(channel.to_owned())
                .or_insert_with(|| ChannelCitationProfile {
                    channel_id: channel.to_owned(),
                    ..Default::default()
                });
            if is_catalog {
                profile.catalog_link_total += count;
                set.catalog_domains.insert(domain.clone());
            }
            profile.domain_counts.insert(domain, count);
        }
        Ok(set)
    }
}

/// Aggregates classified links per channel. Every occurrence counts.
pub fn aggregate_profiles<I>(links: I) -> ProfileSet
where
    I: IntoIterator<Item = (String, NormalizedDomain, bool)>,
{
    let mut set = ProfileSet::default();
    for (channel, domain, is_catalog) in links {
        set.record(&channel, domain, is_catalog);
    }
    set
}

/// The `k` channels with most catalog links; ties go to the smaller id.
pub fn select_top_channels(profiles: &ProfileSet, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut ranked: Vec<(&String, u64)> = profiles
        .profiles
        .iter()
        .map(|(id, p)| (id, p.catalog_link_total))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked.into_iter().take(k).map(|(id, _)| id.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationMatrix {
    pub channels: Vec<String>,
    pub sources: Vec<NormalizedDomain>,
    /// Sorted source indices cited by each channel.
    columns: Vec<Vec<u32>>,
}

impl CitationMatrix {
    /// Builds from column lists. Row indices are sorted and deduplicated.
    pub fn from_columns(
        channels: Vec<String>,
        sources: Vec<NormalizedDomain>,
        mut columns: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if columns.len() != channels.len() {
            return Err(Error::LengthMismatch {
                left: columns.len(),
                right: channels.len(),
            });
        }
        for col in &mut columns {
            col.sort_unstable();
            col.dedup();
            if col.last().is_some_and(|&r| r as usize >= sources.len()) {
                return Err(Error::InvalidParameter("row index out of range".into()));
            }
        }
        Ok(Self {
            channels,
            sources,
            columns,
        })
    }

    /// Builds from a dense 0/1 matrix (`dense[row][col]`), dropping nothing.
    pub fn from_dense(channels: Vec<String>, sources: Vec<NormalizedDomain>, dense: &[Vec<u8>]) -> Result<Self> {
        let mut columns = vec![Vec::new(); channels.len()];
        for (r, row) in dense.iter().enumerate() {
            if row.len() != channels.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: channels.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0 {
                    columns[c].push(r as u32);
                }
            }
        }
        Self::from_columns(channels, sources, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.sources.len()
    }

    pub fn n_cols(&self) -> usize {
        self.channels.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column(&self, c: usize) -> &[u32] {
        &self.columns[c]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        u8::from(self.columns[col].binary_search(&(row as u32)).is_ok())
    }

    /// Dense 0/1 column vector of one channel.
    pub fn column_vector(&self, c: usize) -> Vec<u8> {
        let mut v = vec![0; self.n_rows()];
        for &r in &self.columns[c] {
            v[r as usize] = 1;
        }
        v
    }

    /// Row-compressed view: sorted channel indices citing each source.
    pub fn rows(&self) -> Vec<Vec<u32>> {
        let mut rows = vec![Vec::new(); self.n_rows()];
        for (c, col) in self.columns.iter().enumerate() {
            for &r in col {
                rows[r as usize].push(c as u32);
            }
        }
        rows
    }

    /// Number of distinct channels citing each source.
    pub fn row_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.n_rows()];
        for col in &self.columns {
            for &r in col {
                sums[r as usize] += 1;
            }
        }
        sums
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0; self.n_cols()]; self.n_rows()];
        for (c, col) in self.columns.iter().enumerate() {
            for &r in col {
                dense[r as usize][c] = 1;
            }
        }
        dense
    }

    /// Keeps only the rows flagged in `keep`, renumbering the rest.
    pub fn retain_rows(&self, keep: &[bool]) -> CitationMatrix {
        let mut remap = vec![u32::MAX; self.n_rows()];
        let mut sources = Vec::new();
        for (r, s) in self.sources.iter().enumerate() {
            if keep[r] {
                remap[r] = sources.len() as u32;
                sources.push(s.clone());
            }
        }
        let columns = self
            .columns
            .iter()
            .map(|col| {
                col.iter()
                    .filter(|&&r| keep[r as usize])
                    .map(|&r| remap[r as usize])
                    .collect()
            })
            .collect();
        CitationMatrix {
            channels: self.channels.clone(),
            sources,
            columns,
        }
    }

    /// Coordinate-format text: a MatrixMarket header with the dimensions,
    /// then one `row col 1` line (1-based) per entry in column-major order.
    pub fn to_mtx(&self) -> String {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate integer general\n");
        out.push_str("% rows: sources, lexicographic; columns: channels, selection order\n");
        let _ = writeln!(out, "{} {} {}", self.n_rows(), self.n_cols(), self.nnz());
        for (c, col) in self.columns.iter().enumerate() {
            for &r in col {
                let _ = writeln!(out, "{} {} 1", r + 1, c + 1);
            }
        }
        out
    }

    /// Writes `<stem>.mtx`, `<stem>.rows.txt` and `<stem>.cols.txt`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let labels = |items: &mut dyn Iterator<Item = &str>| -> String { items.map(|s| format!("{s}\n")).collect() };
        let files = [
            (format!("{stem}.mtx"), self.to_mtx()),
            (
                format!("{stem}.rows.txt"),
                labels(&mut self.sources.iter().map(NormalizedDomain::as_str)),
            ),
            (
                format!("{stem}.cols.txt"),
                labels(&mut self.channels.iter().map(String::as_str)),
            ),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        }
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let read = |name: String| -> Result<(std::path::PathBuf, String)> {
            let path = dir.join(name);
            let text =
                std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            Ok((path, text))
        };
        let (mtx_path, mtx) = read(format!("{stem}.mtx"))?;
        let (_, rows) = read(format!("{stem}.rows.txt"))?;
        let (_, cols) = read(format!("{stem}.cols.txt"))?;
        let sources: Vec<_> = rows.lines().map(NormalizedDomain::from_normalized).collect();
        let channels: Vec<String> = cols.lines().map(str::to_owned).collect();
        Self::parse_mtx(&mtx, &mtx_path, channels, sources)
    }

    fn parse_mtx(mtx: &str, path: &Path, channels: Vec<String>, sources: Vec<NormalizedDomain>) -> Result<Self> {
        let mut lines = mtx.lines().filter(|l| !l.starts_with('%'));
        let dims: Vec<usize> = lines
            .next()
            .ok_or_else(|| Error::malformed(path, "missing size line"))?
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::malformed(path, "bad size line"))?;
        let [n_rows, n_cols, nnz] = dims[..] else {
            return Err(Error::malformed(path, "size line needs 3 numbers"));
        };
        if n_rows != sources.len() || n_cols != channels.len() {
            return Err(Error::malformed(path, "dimensions disagree with label files"));
        }
        let mut columns = vec![Vec::new(); n_cols];
        let mut seen = 0;
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            let (Some(Ok(r)), Some(Ok(c)), Some(Ok(1))) = (it.next(), it.next(), it.next()) else {
                return Err(Error::malformed(path, format!("bad entry {line:?}")));
            };
            if r == 0 || c == 0 || r > n_rows || c > n_cols {
                return Err(Error::malformed(path, format!("entry out of range {line:?}")));
            }
            columns[c - 1].push((r - 1) as u32);
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::malformed(path, "entry count disagrees with header"));
        }
        Self::from_columns(channels, sources, columns)
    }
}

/// Builds the citation matrix over the selected channels.
///
/// With `catalog_only`, rows are restricted to catalog domains. Sources no
/// selected channel cites never appear.
pub fn build_citation_matrix(selected: &[String], profiles: &ProfileSet, catalog_only: bool) -> Result<CitationMatrix> {
    if selected.is_empty() {
        return Err(Error::EmptyMatrix("no channels selected".into()));
    }
    let mut chosen = Vec::with_capacity(selected.len());
    for id in selected {
        let p = profiles
            .profiles
            .get(id)
            .ok_or_else(|| Error::InvalidParameter(format!("selected channel {id} has no profile")))?;
        chosen.push(p);
    }
    let sources: Vec<NormalizedDomain> = chosen
        .iter()
        .flat_map(|p| p.domain_counts.keys())
        .filter(|d| !catalog_only || profiles.is_catalog(d))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let index: HashMap<&NormalizedDomain, u32> = sources.iter().enumerate().map(|(i, d)| (d, i as u32)).collect();
    let columns = chosen
        .iter()
        .map(|p| p.domain_counts.keys().filter_map(|d| index.get(d).copied()).collect())
        .collect();
    CitationMatrix::from_columns(selected.to_vec(), sources, columns)
}

/// Removes the `n` sources cited by most channels (ties: smaller name
/// first). Returns the reduced matrix and the removed sources with their
/// channel counts, largest first. Columns are kept even if they become empty.
pub fn exclude_top_sources(
    matrix: &CitationMatrix,
    n: usize,
) -> Result<(CitationMatrix, Vec<(NormalizedDomain, usize)>)> {
    if n == 0 {
        return Ok((matrix.clone(), Vec::new()));
    }
    if n >= matrix.n_rows() {
        return Err(Error::ExcludeTooMany {
            requested: n,
            rows: matrix.n_rows(),
        });
    }
    let sums = matrix.row_sums();
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    order.sort_by(|&a, &b| {
        sums[b]
            .cmp(&sums[a])
            .then_with(|| matrix.sources[a].cmp(&matrix.sources[b]))
    });
    let mut keep = vec![true; matrix.n_rows()];
    let removed = order[..n]
        .iter()
        .map(|&r| {
            keep[r] = false;
            (matrix.sources[r].clone(), sums[r])
        })
        .collect();
    Ok((matrix.retain_rows(&keep), removed))
}
