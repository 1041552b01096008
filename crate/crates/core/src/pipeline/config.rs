//! TOML pipeline configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every section is optional; missing keys take their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FieldMapping;
use crate::layout::LayoutParams;
use crate::urls::ExpansionPolicy;

/// Environment variable that overrides `catalog.endpoint`.
pub const CATALOG_ENDPOINT_ENV: &str = "COALITION_CATALOG_ENDPOINT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputPaths,
    pub output: OutputSection,
    pub fields: FieldMapping,
    pub ingest: IngestSection,
    pub normalize: NormalizeSection,
    pub expand: ExpansionPolicy,
    pub catalog: CatalogSection,
    pub matrix: MatrixSection,
    pub couple: CoupleSection,
    pub communities: CommunitiesSection,
    pub layout: LayoutSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    /// NDJSON message dump.
    pub messages: Option<PathBuf>,
    /// NDJSON channel metadata.
    pub channels: Option<PathBuf>,
    /// Raw source URLs, one per line. When absent the catalog is harvested
    /// from `catalog.endpoint`.
    pub catalog: Option<PathBuf>,
    pub public_suffix_list: Option<PathBuf>,
    pub shorteners: Option<PathBuf>,
    pub exceptions: Option<PathBuf>,
    /// Previously resolved `original<TAB>final` pairs to seed the cache.
    pub expansion_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    /// Broadcast flag for channels whose record lacks one.
    pub assume_broadcast: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeSection {
    /// Keep the last two host labels instead of consulting the suffix list.
    pub naive_sld: bool,
    /// Also apply the private-domain section of the suffix list.
    pub include_private: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogSection {
    pub endpoint: Option<String>,
    pub page_size: usize,
    /// Dotted path of the homepage URL inside each result.
    pub url_field: String,
}

impl Default for CatalogSection {
    fn default() -> Self {
        Self {
            endpoint: None,
            page_size: 200,
            url_field: "homepage_url".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSection {
    /// Channels kept, ranked by catalog links.
    pub top_k: usize,
    /// Most-cited catalog sources dropped before coupling.
    pub exclude_top: usize,
}

impl Default for MatrixSection {
    fn default() -> Self {
        Self {
            top_k: 10_000,
            exclude_top: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleSection {
    pub min_bcf: u32,
    pub keep_isolates: bool,
    /// Skip sources cited by more channels than this.
    pub max_channels_per_source: Option<usize>,
}

impl Default for CoupleSection {
    fn default() -> Self {
        Self {
            min_bcf: 2,
            keep_isolates: false,
            max_channels_per_source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunitiesSection {
    pub seed: u64,
    pub resolution: f64,
    /// Communities below this node share are not main coalitions.
    pub min_share: f64,
}

impl Default for CommunitiesSection {
    fn default() -> Self {
        Self {
            seed: 42,
            resolution: 1.0,
            min_share: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub seed: u64,
    pub iterations: usize,
    pub scaling: f64,
    pub attraction: f64,
    pub gravity: f64,
    pub strong_gravity: bool,
    pub lin_log: bool,
    pub edge_weight_influence: f64,
    pub jitter_tolerance: f64,
    pub barnes_hut_theta: f64,
    pub barnes_hut_threshold: usize,
    pub max_displacement: f64,
    pub min_node_size: f64,
    pub max_node_size: f64,
}

impl Default for LayoutSection {
    fn default() -> Self {
        let p = LayoutParams::<f64>::default();
        Self {
            seed: 42,
            iterations: 1000,
            scaling: p.scaling,
            attraction: p.attraction,
            gravity: p.gravity,
            strong_gravity: p.strong_gravity,
            lin_log: p.lin_log,
            edge_weight_influence: p.edge_weight_influence,
            jitter_tolerance: p.jitter_tolerance,
            barnes_hut_theta: p.barnes_hut_theta,
            barnes_hut_threshold: p.barnes_hut_threshold,
            max_displacement: p.max_displacement,
            min_node_size: 4.0,
            max_node_size: 24.0,
        }
    }
}

impl LayoutSection {
    pub fn params(&self) -> LayoutParams<f64> {
        LayoutParams {
            scaling: self.scaling,
            attraction: self.attraction,
            gravity: self.gravity,
            strong_gravity: self.strong_gravity,
            lin_log: self.lin_log,
            edge_weight_influence: self.edge_weight_influence,
            jitter_tolerance: self.jitter_tolerance,
            barnes_hut_theta: self.barnes_hut_theta,
            barnes_hut_threshold: self.barnes_hut_threshold,
            max_displacement: self.max_displacement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Rows per frequency table.
    pub top_n: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { top_n: 50 }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub min_bcf: Option<u32>,
    pub top_k: Option<usize>,
    pub exclude_top: Option<usize>,
    pub assume_broadcast: Option<bool>,
    pub naive_sld: Option<bool>,
    pub catalog_endpoint: Option<String>,
}

impl PipelineConfig {
    /// Parses TOML, resolving relative paths against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_owned()]))?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(msgs) => {
                Error::Config(msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect())
            }
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.input;
        for p in [
            &mut i.messages,
            &mut i.channels,
            &mut i.catalog,
            &mut i.public_suffix_list,
            &mut i.shorteners,
            &mut i.exceptions,
            &mut i.expansion_cache,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.communities.seed = seed;
            self.layout.seed = seed;
        }
        if let Some(v) = o.min_bcf {
            self.couple.min_bcf = v;
        }
        if let Some(v) = o.top_k {
            self.matrix.top_k = v;
        }
        if let Some(v) = o.exclude_top {
            self.matrix.exclude_top = v;
        }
        if let Some(v) = o.assume_broadcast {
            self.ingest.assume_broadcast = v;
        }
        if let Some(v) = o.naive_sld {
            self.normalize.naive_sld = v;
        }
        if let Some(v) = &o.catalog_endpoint {
            self.catalog.endpoint = Some(v.clone());
        }
    }

    /// Checks every numeric range, reporting all offending keys at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, key: &str, rule: &str| {
            if !ok {
                bad.push(format!("{key} {rule}"));
            }
        };
        check(self.matrix.top_k >= 1, "matrix.top_k", "must be at least 1");
        check(self.couple.min_bcf >= 1, "couple.min_bcf", "must be at least 1");
        check(
            self.couple.max_channels_per_source != Some(0),
            "couple.max_channels_per_source",
            "must be at least 1",
        );
        let c = &self.communities;
        check(
            (0.0..1.0).contains(&c.min_share),
            "communities.min_share",
            "must be in [0, 1)",
        );
        check(
            c.resolution > 0.0 && c.resolution.is_finite(),
            "communities.resolution",
            "must be positive",
        );
        let l = &self.layout;
        check(l.iterations >= 1, "layout.iterations", "must be at least 1");
        for (key, v) in [
            ("layout.scaling", l.scaling),
            ("layout.attraction", l.attraction),
            ("layout.jitter_tolerance", l.jitter_tolerance),
            ("layout.barnes_hut_theta", l.barnes_hut_theta),
            ("layout.max_displacement", l.max_displacement),
            ("layout.min_node_size", l.min_node_size),
        ] {
            check(v > 0.0 && v.is_finite(), key, "must be positive");
        }
        check(
            l.gravity >= 0.0 && l.gravity.is_finite(),
            "layout.gravity",
            "must be non-negative",
        );
        check(
            l.edge_weight_influence >= 0.0 && l.edge_weight_influence.is_finite(),
            "layout.edge_weight_influence",
            "must be non-negative",
        );
        check(
            l.max_node_size >= l.min_node_size && l.max_node_size.is_finite(),
            "layout.max_node_size",
            "must be at least layout.min_node_size",
        );
        check(self.report.top_n >= 1, "report.top_n", "must be at least 1");
        let e = &self.expand;
        check(e.max_hops >= 1, "expand.max_hops", "must be at least 1");
        check(e.concurrency >= 1, "expand.concurrency", "must be at least 1");
        check(e.timeout_ms >= 1, "expand.timeout_ms", "must be at least 1");
        check(
            (1..=200).contains(&self.catalog.page_size),
            "catalog.page_size",
            "must be in 1..=200",
        );
        check(
            !self.catalog.url_field.is_empty(),
            "catalog.url_field",
            "must not be empty",
        );
        for f in self.fields.empty_fields() {
            check(false, &format!("fields.{f}"), "must not be empty");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}
