//! What each stage reads and writes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{PipelineConfig, Stage};
use crate::catalog::{Harvester, SourceCatalog};
use crate::communities::{coalition_summary, louvain, CommunityAssignment, LouvainParams};
use crate::coupling::{bcf_all_pairs_capped, build_graph, CouplingGraph};
use crate::error::{Error, Result};
use crate::ingest::{filter_broadcast, load_channels, stream_messages};
use crate::layout::{forceatlas2, LayoutPositions};
use crate::matrix::{build_citation_matrix, exclude_top_sources, select_top_channels, CitationMatrix, ProfileSet};
use crate::report::{
    bar_chart_svg, coalitions_csv, excluded_sources_csv, frequency_report, render_gexf, RunStats, Segment,
};
use crate::urls::{
    default_exceptions, default_shorteners, extract_urls, read_domain_list, ExpandedUrl, Expander, FailureReason,
    NormalizedDomain, Normalizer, RawUrl, SuffixList,
};

pub(super) const URLS: &str = "urls.tsv";
pub(super) const CHANNELS: &str = "channels.tsv";
pub(super) const EXTRACT_STATS: &str = "extract_stats.json";
pub(super) const EXPANDED: &str = "expanded.tsv";
pub(super) const EXPANSION_CACHE: &str = "expansion_cache.tsv";
pub(super) const EXPAND_STATS: &str = "expand_stats.json";
pub(super) const CATALOG_RAW: &str = "catalog_raw.txt";
pub(super) const CATALOG: &str = "catalog.txt";
pub(super) const CATALOG_STATS: &str = "catalog_stats.json";
pub(super) const PROFILES: &str = "profiles.tsv";
pub(super) const SELECTED: &str = "selected_channels.txt";
pub(super) const MATRIX_STEM: &str = "matrix";
pub(super) const COUPLING_STEM: &str = "coupling_matrix";
pub(super) const EXCLUDED: &str = "excluded_sources.csv";
pub(super) const MATRIX_STATS: &str = "matrix_stats.json";
pub(super) const BCF: &str = "bcf.tsv";
pub(super) const NODES: &str = "graph_nodes.tsv";
pub(super) const EDGES: &str = "graph_edges.tsv";
pub(super) const COMMUNITIES: &str = "communities.tsv";
pub(super) const COALITIONS: &str = "coalitions.csv";
pub(super) const POSITIONS: &str = "positions.tsv";
pub(super) const STATS: &str = "stats.json";
pub(super) const GEXF: &str = "graph.gexf";
pub(super) const CHART: &str = "top_domains.svg";

const COUPLING_FILES: [&str; 3] = [
    "coupling_matrix.mtx",
    "coupling_matrix.rows.txt",
    "coupling_matrix.cols.txt",
];

pub(super) struct Plan {
    /// Config key and path of every external input file.
    pub external: Vec<(String, PathBuf)>,
    /// Upstream artifacts with the stage producing them.
    pub upstream: Vec<(&'static str, Stage)>,
    pub params: Value,
}

fn optional_inputs(config: &PipelineConfig, keys: &[&str]) -> Vec<(String, PathBuf)> {
    let i = &config.input;
    keys.iter()
        .filter_map(|&k| {
            let p = match k {
                "public_suffix_list" => &i.public_suffix_list,
                "exceptions" => &i.exceptions,
                "shorteners" => &i.shorteners,
                "expansion_cache" => &i.expansion_cache,
                "catalog" => &i.catalog,
                _ => unreachable!("unknown input key {k}"),
            };
            p.clone().map(|p| (format!("input.{k}"), p))
        })
        .collect()
}

pub(super) fn plan(config: &PipelineConfig, stage: Stage) -> Plan {
    let c = config;
    let normalizing = ["public_suffix_list", "exceptions"];
    let (external, upstream, params) = match stage {
        Stage::Extract => {
            let external = [
                ("input.messages", &c.input.messages),
                ("input.channels", &c.input.channels),
            ]
            .into_iter()
            .filter_map(|(k, p)| p.clone().map(|p| (k.to_owned(), p)))
            .collect();
            (external, vec![], json!({"fields": c.fields, "ingest": c.ingest}))
        }
        Stage::Expand => (
            optional_inputs(
                c,
                &["public_suffix_list", "exceptions", "shorteners", "expansion_cache"],
            ),
            vec![(URLS, Stage::Extract)],
            json!({"expand": c.expand, "normalize": c.normalize}),
        ),
        Stage::Catalog => {
            let mut params = json!({"normalize": c.normalize});
            if c.input.catalog.is_none() {
                params["catalog"] = json!(c.catalog);
            }
            (
                optional_inputs(c, &["catalog", "public_suffix_list", "exceptions"]),
                vec![],
                params,
            )
        }
        Stage::Matrix => (
            optional_inputs(c, &normalizing),
            vec![(EXPANDED, Stage::Expand), (CATALOG, Stage::Catalog)],
            json!({"matrix": c.matrix, "normalize": c.normalize}),
        ),
        Stage::Couple => {
            let mut upstream: Vec<_> = COUPLING_FILES.iter().map(|f| (*f, Stage::Matrix)).collect();
            upstream.push((CHANNELS, Stage::Extract));
            (vec![], upstream, json!({"couple": c.couple}))
        }
        Stage::Communities => (
            vec![],
            vec![(NODES, Stage::Couple), (EDGES, Stage::Couple)],
            json!({"communities": c.communities}),
        ),
        Stage::Layout => (
            vec![],
            vec![(NODES, Stage::Couple), (EDGES, Stage::Couple)],
            json!({"layout": c.layout}),
        ),
        Stage::Report => (
            vec![],
            vec![
                (EXTRACT_STATS, Stage::Extract),
                (EXPAND_STATS, Stage::Expand),
                (CATALOG, Stage::Catalog),
                (CATALOG_STATS, Stage::Catalog),
                (PROFILES, Stage::Matrix),
                (MATRIX_STATS, Stage::Matrix),
                (NODES, Stage::Couple),
                (EDGES, Stage::Couple),
                (COMMUNITIES, Stage::Communities),
                (POSITIONS, Stage::Layout),
            ],
            json!({
                "report": c.report,
                "node_size": [c.layout.min_node_size, c.layout.max_node_size],
            }),
        ),
    };
    Plan {
        external,
        upstream,
        params,
    }
}

/// Executes `stage`, returning the names of the artifacts it wrote.
pub(super) fn run(config: &PipelineConfig, stage: Stage) -> Result<Vec<String>> {
    let ctx = Ctx {
        config,
        out: &config.output.dir,
    };
    match stage {
        Stage::Extract => ctx.extract(),
        Stage::Expand => ctx.expand(),
        Stage::Catalog => ctx.catalog(),
        Stage::Matrix => ctx.matrix(),
        Stage::Couple => ctx.couple(),
        Stage::Communities => ctx.communities(),
        Stage::Layout => ctx.layout(),
        Stage::Report => ctx.report(),
    }
}

/// Tabs and line breaks would corrupt TSV rows.
fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let p = path.to_owned();
    Ok(BufReader::new(file).lines().enumerate().skip(1).map(move |(i, l)| {
        l.map(|l| (i + 1, l))
            .map_err(|e| Error::io(format!("reading {}", p.display()), e))
    }))
}

fn write_counters(path: &Path, counters: &BTreeMap<&str, u64>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(counters).expect("counters serialise");
    s.push('\n');
    write(path, s)
}

fn read_counters(path: &Path) -> Result<BTreeMap<String, u64>> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::malformed(path, e.to_string()))
}

struct Ctx<'a> {
    config: &'a PipelineConfig,
    out: &'a Path,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn required(&self, key: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        value
            .clone()
            .ok_or_else(|| Error::Config(vec![format!("{key} must be set")]))
    }

    fn normalizer(&self) -> Result<Normalizer> {
        let i = &self.config.input;
        let include_private = self.config.normalize.include_private;
        let suffixes = match &i.public_suffix_list {
            Some(p) => SuffixList::parse(&read(p)?, include_private),
            None => SuffixList::bundled(include_private),
        };
        let exceptions = match &i.exceptions {
            Some(p) => read_domain_list(p)?,
            None => default_exceptions(),
        };
        Ok(Normalizer::new(suffixes, exceptions).naive(self.config.normalize.naive_sld))
    }

    fn extract(&self) -> Result<Vec<String>> {
        let c = self.config;
        let messages = self.required("input.messages", &c.input.messages)?;
        let channels_path = self.required("input.channels", &c.input.channels)?;
        let channels = load_channels(&channels_path, &c.fields, c.ingest.assume_broadcast)?;

        let mut ch = create(&self.path(CHANNELS))?;
        let io = |e| Error::io("writing channels.tsv", e);
        writeln!(ch, "channel_id\ttitle\tis_broadcast").map_err(io)?;
        for r in channels.channels.values() {
            writeln!(ch, "{}\t{}\t{}", clean(&r.channel_id), clean(&r.title), r.is_broadcast).map_err(io)?;
        }
        ch.flush().map_err(io)?;

        let mut urls_out = create(&self.path(URLS))?;
        let io = |e| Error::io("writing urls.tsv", e);
        writeln!(urls_out, "message_id\tchannel_id\turl").map_err(io)?;
        let mut stream = stream_messages(&messages, &c.fields)?;
        let mut read_error = None;
        let records = stream.by_ref().map_while(|r| r.map_err(|e| read_error = Some(e)).ok());
        let mut kept = filter_broadcast(records, &channels);
        let (mut with_url, mut n_urls) = (0u64, 0u64);
        let mut citing: BTreeSet<String> = BTreeSet::new();
        for m in kept.by_ref() {
            let found = extract_urls(&m.text);
            if found.is_empty() {
                continue;
            }
            with_url += 1;
            n_urls += found.len() as u64;
            if !citing.contains(&m.channel_id) {
                citing.insert(m.channel_id.clone());
            }
            let (mid, cid) = (clean(&m.message_id), clean(&m.channel_id));
            for u in found {
                writeln!(urls_out, "{mid}\t{cid}\t{u}").map_err(io)?;
            }
        }
        let filtered = kept.counts();
        if let Some(e) = read_error {
            return Err(e);
        }
        urls_out.flush().map_err(io)?;
        let lines = stream.counts();

        write_counters(
            &self.path(EXTRACT_STATS),
            &BTreeMap::from([
                ("message_lines_read", lines.lines_read),
                ("message_lines_skipped", lines.records_skipped),
                ("messages_total", lines.records_emitted),
                ("broadcast_messages", filtered.kept),
                ("non_broadcast_messages", filtered.non_broadcast),
                ("unknown_channel_messages", filtered.unknown_channel),
                ("messages_with_url", with_url),
                ("urls_extracted", n_urls),
                ("channels_with_urls", citing.len() as u64),
                ("channels_total", channels.len() as u64),
                ("broadcast_channels", channels.broadcast_count() as u64),
                ("channel_lines_skipped", channels.counts.records_skipped),
                ("channel_duplicates", channels.duplicates),
            ]),
        )?;
        Ok(vec![CHANNELS.into(), URLS.into(), EXTRACT_STATS.into()])
    }

    fn read_urls(&self) -> Result<impl Iterator<Item = Result<RawUrl>>> {
        let path = self.path(URLS);
        Ok(open_lines(&path)?.map(move |line| {
            let (n, line) = line?;
            let mut f = line.splitn(3, '\t');
            match (f.next(), f.next(), f.next()) {
                (Some(m), Some(c), Some(u)) => Ok(RawUrl {
                    value: u.to_owned(),
                    message_id: m.to_owned(),
                    channel_id: c.to_owned(),
                }),
                _ => Err(Error::malformed(&path, format!("line {n}: expected 3 fields"))),
            }
        }))
    }

    fn expand(&self) -> Result<Vec<String>> {
        let c = self.config;
        let shorteners: BTreeSet<NormalizedDomain> = match &c.input.shorteners {
            Some(p) => read_domain_list(p)?
                .into_iter()
                .map(|d| NormalizedDomain::from_normalized(d.to_ascii_lowercase()))
                .collect(),
            None => default_shorteners(),
        };

        // Merge the seed cache into the one kept in the output directory.
        let cache_path = self.path(EXPANSION_CACHE);
        let mut cached: BTreeMap<String, String> = BTreeMap::new();
        for source in [Some(cache_path.clone()), c.input.expansion_cache.clone()]
            .into_iter()
            .flatten()
        {
            if source.is_file() {
                for line in read(&source)?.lines() {
                    if let Some((o, f)) = line.split_once('\t') {
                        cached.entry(o.to_owned()).or_insert_with(|| f.to_owned());
                    }
                }
            }
        }
        let render =
            |m: &BTreeMap<String, String>| -> String { m.iter().map(|(o, f)| format!("{o}\t{f}\n")).collect() };
        write(&cache_path, render(&cached))?;

        let (expander, _) =
            Expander::new(shorteners, self.normalizer()?, c.expand.clone())?.with_cache_file(&cache_path)?;

        let mut unique: BTreeSet<String> = BTreeSet::new();
        for u in self.read_urls()? {
            let u = u?;
            if expander.is_shortener(&u.value) {
                unique.insert(u.value);
            }
        }
        let pending: Vec<RawUrl> = unique
            .iter()
            .map(|v| RawUrl {
                value: v.clone(),
                message_id: String::new(),
                channel_id: String::new(),
            })
            .collect();
        let resolved: HashMap<String, ExpandedUrl> = expander
            .expand_all(&pending)
            .into_iter()
            .map(|e| (e.original.value.clone(), e))
            .collect();
        expander.flush()?;
        drop(expander);

        // The journal appends in completion order; store it sorted.
        let mut merged: BTreeMap<String, String> = BTreeMap::new();
        for line in read(&cache_path)?.lines() {
            if let Some((o, f)) = line.split_once('\t') {
                merged.entry(o.to_owned()).or_insert_with(|| f.to_owned());
            }
        }
        write(&cache_path, render(&merged))?;

        let mut out = create(&self.path(EXPANDED))?;
        let io = |e| Error::io("writing expanded.tsv", e);
        writeln!(out, "message_id\tchannel_id\toriginal\tfinal\texpanded\treason").map_err(io)?;
        let mut counters: BTreeMap<&str, u64> = BTreeMap::from([
            ("urls", 0),
            ("shortener_urls", 0),
            ("unique_shortener_urls", unique.len() as u64),
            ("expanded_urls", 0),
        ]);
        let mut failures: BTreeMap<FailureReason, u64> = BTreeMap::new();
        for u in self.read_urls()? {
            let u = u?;
            *counters.get_mut("urls").expect("key") += 1;
            let (final_url, expanded, reason) = match resolved.get(&u.value) {
                Some(e) => {
                    *counters.get_mut("shortener_urls").expect("key") += 1;
                    if e.expanded {
                        *counters.get_mut("expanded_urls").expect("key") += 1;
                    } else {
                        *failures.entry(e.failure).or_default() += 1;
                    }
                    (e.final_url.as_str(), e.expanded, e.failure)
                }
                None => (u.value.as_str(), false, FailureReason::NotAShortener),
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                u.message_id,
                u.channel_id,
                u.value,
                clean(final_url),
                expanded,
                reason.as_str()
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)?;
        let failure_keys: Vec<(String, u64)> = failures
            .into_iter()
            .map(|(r, n)| (format!("expansion_failed_{}", r.as_str()), n))
            .collect();
        for (k, n) in &failure_keys {
            counters.insert(k.as_str(), *n);
        }
        write_counters(&self.path(EXPAND_STATS), &counters)?;
        Ok(vec![EXPANDED.into(), EXPANSION_CACHE.into(), EXPAND_STATS.into()])
    }

    fn catalog(&self) -> Result<Vec<String>> {
        let c = self.config;
        let normalizer = self.normalizer()?;
        let mut produced = Vec::new();
        let mut counters: BTreeMap<&str, u64> = BTreeMap::new();
        let (lines, provenance) = if let Some(path) = &c.input.catalog {
            let text = read(path)?;
            (
                text.lines().map(str::to_owned).collect::<Vec<_>>(),
                path.display().to_string(),
            )
        } else if let Some(endpoint) = &c.catalog.endpoint {
            let mut h = Harvester::new(endpoint.clone(), c.catalog.page_size);
            h.url_field = c.catalog.url_field.clone();
            h.proxy = c.expand.proxy.clone();
            let raw_path = self.path(CATALOG_RAW);
            let mut raw = create(&raw_path)?;
            let mut urls = Vec::new();
            let outcome = h.run(None, |u| {
                let u = clean(u);
                writeln!(raw, "{u}").map_err(|e| Error::io("writing catalog_raw.txt", e))?;
                urls.push(u);
                Ok(())
            })?;
            raw.flush().map_err(|e| Error::io("writing catalog_raw.txt", e))?;
            if !outcome.complete {
                return Err(Error::Network(format!(
                    "catalog harvest from {endpoint} stopped after {} pages; resume cursor {}",
                    outcome.pages,
                    outcome.next_cursor.as_deref().unwrap_or("*")
                )));
            }
            counters.insert("harvest_pages", outcome.pages as u64);
            counters.insert("harvest_retries", outcome.retries as u64);
            produced.push(CATALOG_RAW.to_owned());
            (urls, endpoint.clone())
        } else {
            return Err(Error::Config(vec![format!(
                "input.catalog or catalog.endpoint (or ${}) must be set",
                super::CATALOG_ENDPOINT_ENV
            )]));
        };
        let catalog = SourceCatalog::from_lines(lines.iter().map(String::as_str), &normalizer, provenance);
        counters.insert(
            "catalog_lines",
            lines.iter().filter(|l| !l.trim().is_empty()).count() as u64,
        );
        counters.insert("catalog_domains", catalog.len() as u64);
        counters.insert("catalog_skipped", catalog.skipped as u64);
        write(&self.path(CATALOG), catalog.to_file_string())?;
        write_counters(&self.path(CATALOG_STATS), &counters)?;
        produced.extend([CATALOG.to_owned(), CATALOG_STATS.to_owned()]);
        Ok(produced)
    }

    fn matrix(&self) -> Result<Vec<String>> {
        let c = self.config;
        let normalizer = self.normalizer()?;
        let catalog = SourceCatalog::read_normalized(self.path(CATALOG))?;
        let expanded_path = self.path(EXPANDED);
        let mut profiles = ProfileSet::default();
        let (mut classified, mut unparseable) = (0u64, 0u64);
        for line in open_lines(&expanded_path)? {
            let (n, line) = line?;
            let fields: Vec<&str> = line.split('\t').collect();
            let [_, channel, _, final_url, _, _] = fields[..] else {
                return Err(Error::malformed(&expanded_path, format!("line {n}: expected 6 fields")));
            };
            match normalizer.normalize(final_url) {
                Ok(domain) => {
                    let is_catalog = catalog.classify(&domain);
                    profiles.record(channel, domain, is_catalog);
                    classified += 1;
                }
                Err(_) => unparseable += 1,
            }
        }
        write(&self.path(PROFILES), profiles.to_tsv())?;

        let selected = select_top_channels(&profiles, c.matrix.top_k)?;
        write(
            &self.path(SELECTED),
            selected.iter().map(|s| format!("{s}\n")).collect::<String>(),
        )?;
        let full = build_citation_matrix(&selected, &profiles, false)?;
        full.write(self.out, MATRIX_STEM)?;
        let catalog_only = build_citation_matrix(&selected, &profiles, true)?;
        let (coupling, removed) = exclude_top_sources(&catalog_only, c.matrix.exclude_top)?;
        coupling.write(self.out, COUPLING_STEM)?;
        write(&self.path(EXCLUDED), excluded_sources_csv(&removed)?)?;

        write_counters(
            &self.path(MATRIX_STATS),
            &BTreeMap::from([
                ("urls_classified", classified),
                ("urls_unparseable", unparseable),
                ("channels_with_profiles", profiles.len() as u64),
                ("selected_channels", selected.len() as u64),
                ("distinct_sources", full.n_rows() as u64),
                ("matrix_nonzeros", full.nnz() as u64),
                ("catalog_sources_cited", catalog_only.n_rows() as u64),
                ("excluded_sources", removed.len() as u64),
                ("coupling_sources", coupling.n_rows() as u64),
            ]),
        )?;
        let mut produced = vec![PROFILES.to_owned(), SELECTED.to_owned()];
        for stem in [MATRIX_STEM, COUPLING_STEM] {
            for ext in ["mtx", "rows.txt", "cols.txt"] {
                produced.push(format!("{stem}.{ext}"));
            }
        }
        produced.extend([EXCLUDED.to_owned(), MATRIX_STATS.to_owned()]);
        Ok(produced)
    }

    fn titles(&self) -> Result<HashMap<String, String>> {
        let mut titles = HashMap::new();
        for line in open_lines(&self.path(CHANNELS))? {
            let (_, line) = line?;
            let mut f = line.split('\t');
            if let (Some(id), Some(title)) = (f.next(), f.next()) {
                titles.insert(id.to_owned(), title.to_owned());
            }
        }
        Ok(titles)
    }

    fn couple(&self) -> Result<Vec<String>> {
        let c = &self.config.couple;
        let matrix = CitationMatrix::read(self.out, COUPLING_STEM)?;
        let titles = self.titles()?;
        let weights = bcf_all_pairs_capped(&matrix, c.max_channels_per_source);
        write(&self.path(BCF), weights.to_tsv())?;
        let graph = build_graph(&weights, c.min_bcf, c.keep_isolates, |id| titles.get(id).cloned())?;
        write(&self.path(NODES), graph.nodes_tsv())?;
        write(&self.path(EDGES), graph.edges_tsv())?;
        Ok(vec![BCF.into(), NODES.into(), EDGES.into()])
    }

    fn graph(&self) -> Result<CouplingGraph> {
        let nodes = self.path(NODES);
        CouplingGraph::from_tsv(&read(&nodes)?, &read(&self.path(EDGES))?, &nodes)
    }

    fn communities(&self) -> Result<Vec<String>> {
        let c = &self.config.communities;
        let graph = self.graph()?;
        let assignment = if graph.is_empty() {
            CommunityAssignment::from_membership(&graph, &[], c.seed, c.resolution)?
        } else {
            let params = LouvainParams {
                resolution: c.resolution,
                seed: c.seed,
                ..LouvainParams::default()
            };
            louvain(&graph, &params)?
        };
        write(&self.path(COMMUNITIES), assignment.to_tsv(&graph))?;
        let coalitions = coalition_summary(&assignment, &graph, c.min_share)?;
        write(&self.path(COALITIONS), coalitions_csv(&coalitions)?)?;
        Ok(vec![COMMUNITIES.into(), COALITIONS.into()])
    }

    fn layout(&self) -> Result<Vec<String>> {
        let l = &self.config.layout;
        let graph = self.graph()?;
        let positions = if graph.is_empty() {
            LayoutPositions {
                positions: Vec::new(),
                iterations_run: 0,
                seed: l.seed,
            }
        } else {
            forceatlas2(&graph, l.iterations, &l.params(), l.seed)?
        };
        write(&self.path(POSITIONS), positions.to_tsv(&graph))?;
        Ok(vec![POSITIONS.into()])
    }

    fn report(&self) -> Result<Vec<String>> {
        let c = self.config;
        let profiles_path = self.path(PROFILES);
        let profiles = ProfileSet::from_tsv(&read(&profiles_path)?, &profiles_path)?;
        let catalog = SourceCatalog::read_normalized(self.path(CATALOG))?;
        let mut produced = Vec::new();
        for segment in Segment::ALL {
            let report = frequency_report(&profiles, &catalog, segment, c.report.top_n)?;
            let name = format!("frequency_{}.csv", segment.as_str());
            write(&self.path(&name), report.to_csv()?)?;
            produced.push(name);
            if segment == Segment::Combined {
                write(&self.path(CHART), bar_chart_svg(&report))?;
                produced.push(CHART.to_owned());
            }
        }

        let graph = self.graph()?;
        let communities_path = self.path(COMMUNITIES);
        let assignment: CommunityAssignment<f64> =
            CommunityAssignment::from_tsv(&read(&communities_path)?, &graph, &communities_path)?;
        let positions_path = self.path(POSITIONS);
        let positions: LayoutPositions<f64> =
            LayoutPositions::from_tsv(&read(&positions_path)?, &graph, &positions_path)?;
        let gexf = render_gexf(
            &graph,
            &assignment,
            &positions,
            c.layout.min_node_size,
            c.layout.max_node_size,
        )?;
        write(&self.path(GEXF), gexf)?;
        produced.push(GEXF.to_owned());

        let mut counters: BTreeMap<String, u64> = BTreeMap::new();
        for name in [EXTRACT_STATS, EXPAND_STATS, CATALOG_STATS, MATRIX_STATS] {
            counters.extend(read_counters(&self.path(name))?);
        }
        let mut take = |k: &str| counters.remove(k).unwrap_or(0);
        let mut stats = RunStats {
            messages_total: take("messages_total"),
            messages_with_url: take("messages_with_url"),
            channels_with_urls: take("channels_with_urls"),
            selected_channels: take("selected_channels"),
            distinct_sources: take("distinct_sources"),
            catalog_domains: take("catalog_domains"),
            extra: BTreeMap::new(),
        };
        stats.extra = counters;
        stats.set("graph_nodes", graph.n_nodes() as u64);
        stats.set("graph_edges", graph.n_edges() as u64);
        stats.set("communities", assignment.n_communities() as u64);
        let main = coalition_summary(&assignment, &graph, c.communities.min_share)?
            .iter()
            .filter(|r| r.main)
            .count();
        stats.set("main_coalitions", main as u64);
        write(&self.path(STATS), stats.to_json())?;
        produced.push(STATS.to_owned());
        Ok(produced)
    }
}
