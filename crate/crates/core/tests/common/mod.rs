//! Reference implementations shared by the integration tests. None of these
//! call into the library code they are used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use coalitions_core::{CitationMatrix, CouplingGraph, NormalizedDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

pub fn fixture_dir() -> PathBuf {
    workspace_root().join("fixtures/pipeline")
}

/// Dense 0/1 matrix with rows = sources and columns = channels.
pub fn random_dense(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> Vec<Vec<u8>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| u8::from(rng.random_bool(density))).collect())
        .collect()
}

pub fn matrix_from_dense(dense: &[Vec<u8>], cols: usize) -> CitationMatrix {
    let channels = (0..cols).map(|c| format!("ch{c:03}")).collect();
    let sources = (0..dense.len())
        .map(|r| NormalizedDomain::from_normalized(format!("s{r:04}.org")))
        .collect();
    CitationMatrix::from_dense(channels, sources, dense).unwrap()
}

/// Off-diagonal entries of AᵀA by the textbook triple loop.
pub fn dense_ata(dense: &[Vec<u8>], cols: usize) -> BTreeMap<(usize, usize), u64> {
    let mut out = BTreeMap::new();
    for a in 0..cols {
        for b in a + 1..cols {
            let s: u64 = dense.iter().map(|row| u64::from(row[a] * row[b])).sum();
            if s > 0 {
                out.insert((a, b), s);
            }
        }
    }
    out
}

/// `Q = 1/2m Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)` over the full
/// adjacency matrix.
pub fn modularity_by_definition(n: usize, edges: &[(usize, usize, f64)], membership: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, w) in edges {
        a[i][j] += w;
        a[j][i] += w;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if membership[i] == membership[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as a restricted growth string.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur.push(c);
            rec(i + 1, n, cur, max.max(c), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0];
    rec(1, n, &mut cur, 0, &mut out);
    out
}

/// Best modularity over all partitions.
pub fn exhaustive_best(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    all_partitions(n)
        .iter()
        .map(|p| modularity_by_definition(n, edges, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Adjusted Rand index (Hubert and Arabie).
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut ra: HashMap<usize, u64> = HashMap::new();
    let mut rb: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sa: f64 = ra.values().map(|&v| choose2(v)).sum();
    let sb: f64 = rb.values().map(|&v| choose2(v)).sum();
    let total = choose2(a.len() as u64);
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Planted partition: `groups` blocks of `size` nodes. Node ids sort in
/// block order, so node `i` belongs to block `i / size`.
pub fn planted_partition(groups: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> (CouplingGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = groups * size;
    let ids: Vec<String> = (0..n).map(|i| format!("n{i:04}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if i / size == j / size { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((ids[i].as_str(), ids[j].as_str(), 1));
            }
        }
    }
    let g = CouplingGraph::from_edges(edges, ids.iter().map(String::as_str), |_| None).unwrap();
    let truth = g
        .nodes
        .iter()
        .map(|v| v.id[1..].parse::<usize>().unwrap() / size)
        .collect();
    (g, truth)
}

pub fn graph_edges_f64(g: &CouplingGraph) -> Vec<(usize, usize, f64)> {
    g.edges.iter().map(|&(a, b, w)| (a, b, f64::from(w))).collect()
}

const GEXF_NS: &str = "http://www.gexf.net/1.2draft";
const VIZ_NS: &str = "http://www.gexf.net/1.2draft/viz";

/// Summary of a parsed GEXF document.
#[derive(Debug, Default)]
pub struct GexfSummary {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, f64)>,
    pub attributes: BTreeMap<String, BTreeMap<String, String>>,
}

/// Structural validation against the GEXF 1.2draft content model: element
/// placement and namespaces, required attributes, value types, id
/// uniqueness and edge endpoint references.
pub fn validate_gexf(doc: &str) -> Result<GexfSummary, String> {
    let xml = roxmltree::Document::parse(doc).map_err(|e| e.to_string())?;
    let root = xml.root_element();
    let is = |n: roxmltree::Node, name: &str| n.tag_name().namespace() == Some(GEXF_NS) && n.tag_name().name() == name;
    if !is(root, "gexf") {
        return Err("root element must be gexf in the 1.2draft namespace".into());
    }
    if root.attribute("version") != Some("1.2") {
        return Err("gexf version must be 1.2".into());
    }
    let children: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    let graph = match children.as_slice() {
        [meta, graph] if is(*meta, "meta") && is(*graph, "graph") => *graph,
        [graph] if is(*graph, "graph") => *graph,
        _ => return Err("gexf must contain optional meta followed by one graph".into()),
    };
    if let Some(t) = graph.attribute("defaultedgetype") {
        if !["directed", "undirected", "mutual"].contains(&t) {
            return Err(format!("bad defaultedgetype {t}"));
        }
    }
    if let Some(m) = graph.attribute("mode") {
        if !["static", "dynamic"].contains(&m) {
            return Err(format!("bad mode {m}"));
        }
    }
    let mut attr_types: HashMap<String, String> = HashMap::new();
    let mut summary = GexfSummary::default();
    let mut node_ids = HashSet::new();
    let mut edge_ids = HashSet::new();
    let mut seen_nodes = false;
    for section in graph.children().filter(|n| n.is_element()) {
        match section.tag_name().name() {
            "attributes" => {
                if seen_nodes {
                    return Err("attributes must precede nodes".into());
                }
                if !matches!(section.attribute("class"), Some("node" | "edge")) {
                    return Err("attributes needs class node or edge".into());
                }
                for a in section.children().filter(|n| n.is_element()) {
                    if !is(a, "attribute") {
                        return Err("attributes may only hold attribute elements".into());
                    }
                    let id = a.attribute("id").ok_or("attribute without id")?;
                    a.attribute("title").ok_or("attribute without title")?;
                    let ty = a.attribute("type").ok_or("attribute without type")?;
                    let allowed = [
                        "integer",
                        "long",
                        "double",
                        "float",
                        "boolean",
                        "liststring",
                        "string",
                        "anyURI",
                    ];
                    if !allowed.contains(&ty) {
                        return Err(format!("attribute type {ty} not allowed"));
                    }
                    attr_types.insert(id.to_owned(), ty.to_owned());
                }
            }
            "nodes" => {
                seen_nodes = true;
                for node in section.children().filter(|n| n.is_element()) {
                    if !is(node, "node") {
                        return Err("nodes may only hold node elements".into());
                    }
                    let id = node.attribute("id").ok_or("node without id")?;
                    if !node_ids.insert(id.to_owned()) {
                        return Err(format!("duplicate node id {id}"));
                    }
                    let mut values = BTreeMap::new();
                    for part in node.children().filter(|n| n.is_element()) {
                        let ns = part.tag_name().namespace();
                        match (ns, part.tag_name().name()) {
                            (Some(GEXF_NS), "attvalues") => {
                                for av in part.children().filter(|n| n.is_element()) {
                                    let key = av.attribute("for").ok_or("attvalue without for")?;
                                    let value = av.attribute("value").ok_or("attvalue without value")?;
                                    let ty = attr_types.get(key).ok_or(format!("attvalue for undeclared {key}"))?;
                                    let ok = match ty.as_str() {
                                        "integer" | "long" => value.parse::<i64>().is_ok(),
                                        "double" | "float" => value.parse::<f64>().is_ok(),
                                        "boolean" => value == "true" || value == "false",
                                        _ => true,
                                    };
                                    if !ok {
                                        return Err(format!("value {value:?} is not {ty}"));
                                    }
                                    values.insert(key.to_owned(), value.to_owned());
                                }
                            }
                            (Some(VIZ_NS), "color") => {
                                for ch in ["r", "g", "b"] {
                                    part.attribute(ch)
                                        .and_then(|v| v.parse::<u8>().ok())
                                        .ok_or(format!("color {ch} must be 0-255"))?;
                                }
                            }
                            (Some(VIZ_NS), "position") => {
                                for axis in ["x", "y"] {
                                    let v: f64 = part
                                        .attribute(axis)
                                        .and_then(|v| v.parse().ok())
                                        .ok_or(format!("position {axis} must be a float"))?;
                                    if !v.is_finite() {
                                        return Err("non-finite position".into());
                                    }
                                }
                            }
                            (Some(VIZ_NS), "size") => {
                                let v: f64 = part
                                    .attribute("value")
                                    .and_then(|v| v.parse().ok())
                                    .ok_or("size must be a float")?;
                                if v < 0.0 {
                                    return Err("negative size".into());
                                }
                            }
                            (Some(VIZ_NS), "shape") | (Some(GEXF_NS), "spells" | "parents" | "nodes" | "edges") => {}
                            (_, other) => return Err(format!("unexpected node child {other}")),
                        }
                    }
                    summary.nodes.push(id.to_owned());
                    summary.attributes.insert(id.to_owned(), values);
                }
            }
            "edges" => {
                for edge in section.children().filter(|n| n.is_element()) {
                    if !is(edge, "edge") {
                        return Err("edges may only hold edge elements".into());
                    }
                    let id = edge.attribute("id").ok_or("edge without id")?;
                    if !edge_ids.insert(id.to_owned()) {
                        return Err(format!("duplicate edge id {id}"));
                    }
                    let s = edge.attribute("source").ok_or("edge without source")?;
                    let t = edge.attribute("target").ok_or("edge without target")?;
                    if !node_ids.contains(s) || !node_ids.contains(t) {
                        return Err(format!("edge {id} references a missing node"));
                    }
                    let w: f64 = edge
                        .attribute("weight")
                        .unwrap_or("1")
                        .parse()
                        .map_err(|_| format!("edge {id} weight is not a float"))?;
                    summary.edges.push((s.to_owned(), t.to_owned(), w));
                }
            }
            other => return Err(format!("unexpected graph child {other}")),
        }
    }
    Ok(summary)
}

/// Deterministic corpus of messy URLs: mixed-case schemes and hosts,
/// credentials, ports, trailing dots, multi-label suffixes, IDN hosts, IP
/// literals, exception hosts, queries and fragments.
pub fn url_corpus(n: usize, seed: u64) -> Vec<String> {
    const SUFFIXES: &[&str] = &[
        "com",
        "org",
        "net",
        "edu",
        "gov",
        "io",
        "de",
        "fr",
        "ru",
        "co.uk",
        "org.uk",
        "ac.uk",
        "ac.jp",
        "co.jp",
        "com.au",
        "gov.au",
        "com.br",
        "k12.ak.us",
        "github.io",
        "blogspot.com",
        "ck",
        "kawasaki.jp",
    ];
    const WORDS: &[&str] = &[
        "www",
        "news",
        "journals",
        "elsevier",
        "nature",
        "m",
        "blog",
        "data",
        "cdn",
        "x1",
        "open-access",
        "pubs",
        "science",
        "archive",
        "api",
        "en",
        "portal",
        "a",
        "b2",
    ];
    const SPECIAL: &[&str] = &[
        "books.google.com",
        "sites.google.com",
        "scholar.google.com",
        "docs.google.com",
        "drive.google.com",
        "play.google.com",
        "127.0.0.1",
        "[::1]",
        "bücher.de",
        "пример.рф",
        "www.city.kawasaki.jp",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| xs[rng.random_range(0..xs.len())];
    (0..n)
        .map(|_| {
            let scheme = pick(&mut rng, &["http", "https", "HTTP", "hTTps"]);
            let host = if rng.random_bool(0.15) {
                pick(&mut rng, SPECIAL).to_owned()
            } else {
                let depth = rng.random_range(1..4);
                let mut labels: Vec<&str> = (0..depth).map(|_| pick(&mut rng, WORDS)).collect();
                labels.push(pick(&mut rng, SUFFIXES));
                labels.join(".")
            };
            let host = if rng.random_bool(0.2) {
                host.to_uppercase()
            } else {
                host
            };
            let dot = if rng.random_bool(0.05) && !host.starts_with('[') {
                "."
            } else {
                ""
            };
            let creds = if rng.random_bool(0.05) { "user:pw@" } else { "" };
            let port = if rng.random_bool(0.1) {
                format!(":{}", rng.random_range(1..65535))
            } else {
                String::new()
            };
            let path: String = (0..rng.random_range(0..4))
                .map(|_| format!("/{}", pick(&mut rng, WORDS)))
                .collect();
            let query = if rng.random_bool(0.2) { "?utm_source=x&id=3" } else { "" };
            let frag = if rng.random_bool(0.1) { "#sec" } else { "" };
            format!("{scheme}://{creds}{host}{dot}{port}{path}{query}{frag}")
        })
        .collect()
}

/// Shortener hosts used by [`redirect_server`].
pub const MOCK_SHORTENERS: [&str; 4] = ["short.test", "loop.test", "dead.test", "slow.test"];

/// Scripted redirect scenarios:
/// - `short.test/chain`: three hops (relative, absolute, absolute) to
///   `http://dest.test/article`
/// - `short.test/head`: refuses HEAD, redirects on GET
/// - `loop.test/a` and `/b`: redirect to each other forever
/// - `dead.test/gone`: 404, `dead.test/boom`: 500
/// - `slow.test/x`: answers after 1.5 s
pub fn redirect_server() -> coalitions_core::mockserver::MockServer {
    use coalitions_core::mockserver::{MockResponse, MockServer};
    use std::time::Duration;
    MockServer::builder()
        .route("short.test", "/chain", MockResponse::redirect(301, "/chain2"))
        .route(
            "short.test",
            "/chain2",
            MockResponse::redirect(302, "http://mid.test/hop"),
        )
        .route(
            "mid.test",
            "/hop",
            MockResponse::redirect(307, "http://dest.test/article"),
        )
        .route("dest.test", "/article", MockResponse::ok("content"))
        .route("short.test", "/head", MockResponse::status(405))
        .route(
            "short.test",
            "/head",
            MockResponse::redirect(302, "http://dest.test/other"),
        )
        .route("dest.test", "/other", MockResponse::ok("other"))
        .route("loop.test", "/a", MockResponse::redirect(302, "/b"))
        .route("loop.test", "/b", MockResponse::redirect(302, "/a"))
        .route("dead.test", "/gone", MockResponse::status(404))
        .route("dead.test", "/boom", MockResponse::status(500))
        .route(
            "slow.test",
            "/x",
            MockResponse::redirect(301, "http://dest.test/article").delayed(Duration::from_millis(1500)),
        )
        .start()
        .unwrap()
}

pub fn mock_expander(
    server: &coalitions_core::mockserver::MockServer,
    max_hops: u32,
    politeness_ms: u64,
) -> coalitions_core::urls::Expander {
    use coalitions_core::urls::{Expander, ExpansionPolicy};
    let policy = ExpansionPolicy {
        proxy: Some(server.url()),
        politeness_ms,
        timeout_ms: 500,
        max_hops,
        concurrency: 4,
        offline: false,
    };
    let shorteners = MOCK_SHORTENERS
        .iter()
        .map(|s| NormalizedDomain::from_normalized(*s))
        .collect();
    Expander::new(shorteners, coalitions_core::Normalizer::with_defaults(), policy).unwrap()
}

pub fn raw_url(url: &str) -> coalitions_core::urls::RawUrl {
    coalitions_core::urls::RawUrl {
        value: url.to_owned(),
        message_id: "m1".into(),
        channel_id: "c1".into(),
    }
}

/// The bundled fixture config writing into `out`.
pub fn fixture_config(out: &Path) -> coalitions_core::pipeline::PipelineConfig {
    let mut c = coalitions_core::pipeline::PipelineConfig::load(fixture_dir().join("config.toml")).unwrap();
    c.output.dir = out.to_owned();
    c
}

/// Names of golden artifacts that are missing from `out` or differ from it
/// byte for byte.
pub fn golden_mismatches(out: &Path) -> Vec<String> {
    let golden = fixture_dir().join("golden");
    let mut names: Vec<_> = std::fs::read_dir(&golden)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.len() >= 30, "golden set incomplete");
    names
        .into_iter()
        .filter(|n| std::fs::read(golden.join(n)).ok() != std::fs::read(out.join(n)).ok())
        .collect()
}

/// Differences between `out` and the artifacts recomputed by the
/// independent Python oracle (fixtures/oracles/pipeline_oracle.py).
pub fn oracle_mismatches(out: &Path) -> Vec<String> {
    let oracle = fixture_dir().join("oracle");
    let mut bad = Vec::new();
    for entry in std::fs::read_dir(&oracle).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name == "counters.json" {
            continue;
        }
        if std::fs::read(oracle.join(&name)).ok() != std::fs::read(out.join(&name)).ok() {
            bad.push(name);
        }
    }
    let counters: BTreeMap<String, u64> =
        serde_json::from_str(&std::fs::read_to_string(oracle.join("counters.json")).unwrap()).unwrap();
    let stats: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    for (key, want) in &counters {
        if stats.get(key).and_then(|v| v.as_u64()) != Some(*want) {
            bad.push(format!("stats.json:{key}"));
        }
    }
    bad
}
