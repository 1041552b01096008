#!/usr/bin/env python3
"""Independent recount of the end-to-end fixture.

Recomputes every artifact that follows from counting alone (extracted links,
catalog, channel profiles, channel selection, source exclusion, coupling
frequencies, thresholded edges, frequency tables, run counters) with the
Python standard library plus tldextract's bundled public-suffix snapshot, and
writes them to fixtures/pipeline/oracle/ in the pipeline's file formats.

Usage: python3 fixtures/oracles/pipeline_oracle.py
"""

import csv
import io
import json
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections import Counter, defaultdict
from itertools import combinations
from pathlib import Path
from urllib.parse import urlsplit

import tldextract

HERE = Path(__file__).resolve().parent
FIXTURE = HERE.parent / "pipeline"
OUT = FIXTURE / "oracle"

EXCEPTIONS = {
    "books.google.com",
    "sites.google.com",
    "scholar.google.com",
    "docs.google.com",
    "drive.google.com",
}
SHORTENERS = {"bit.ly", "goo.gl", "goog.le"}
EXTRACT = tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None, include_psl_private_domains=False)


def find_urls(text):
    found = []
    for m in re.finditer(r"https?://[^\s<>]+", text, flags=re.IGNORECASE):
        url = m.group(0).rstrip(".,;:)]}\"'")
        rest = url.split("://", 1)[1]
        if rest and rest[0] not in "/?#":
            found.append(url)
    return found


def domain_of(url):
    host = (urlsplit(url).hostname or "").rstrip(".").lower()
    if host in EXCEPTIONS:
        return host
    parts = EXTRACT(host)
    return parts.top_domain_under_public_suffix or host


def main():
    config = tomllib.loads((FIXTURE / "config.toml").read_text())
    top_k = config.get("matrix", {}).get("top_k", 10000)
    exclude_top = config.get("matrix", {}).get("exclude_top", 5)
    min_bcf = config.get("couple", {}).get("min_bcf", 2)
    top_n = config.get("report", {}).get("top_n", 50)

    broadcast = {}
    for line in (FIXTURE / "channels.ndjson").read_text().splitlines():
        rec = json.loads(line)
        broadcast.setdefault(str(rec["id"]), bool(rec.get("broadcast", False)))

    seed = {}
    for line in (FIXTURE / "expansion_seed.tsv").read_text().splitlines():
        original, final = line.split("\t")
        seed[original] = final

    counters = Counter()
    url_rows = []
    citing = set()
    for line in (FIXTURE / "messages.ndjson").read_text().splitlines():
        rec = json.loads(line)
        counters["messages_total"] += 1
        cid = str(rec["to_id"]["channel_id"])
        if not broadcast.get(cid, False):
            counters["non_broadcast_messages" if cid in broadcast else "unknown_channel_messages"] += 1
            continue
        counters["broadcast_messages"] += 1
        urls = find_urls(rec.get("message", ""))
        if urls:
            counters["messages_with_url"] += 1
            citing.add(cid)
        for u in urls:
            url_rows.append((str(rec["id"]), cid, u))
    counters["channels_with_urls"] = len(citing)

    catalog_lines = [l.strip() for l in (FIXTURE / "catalog_urls.txt").read_text().splitlines() if l.strip()]
    catalog = {domain_of(u) for u in catalog_lines}

    counts = defaultdict(Counter)
    for _, cid, u in url_rows:
        final = u
        if domain_of(u) in SHORTENERS:
            counters["shortener_urls"] += 1
            if u in seed:
                final = seed[u]
                counters["expanded_urls"] += 1
        counts[cid][domain_of(final)] += 1

    catalog_total = {c: sum(n for d, n in dc.items() if d in catalog) for c, dc in counts.items()}
    selected = sorted(counts, key=lambda c: (-catalog_total[c], c))[:top_k]

    all_sources = sorted({d for c in selected for d in counts[c]})
    cat_sources = [d for d in all_sources if d in catalog]
    row_sum = {d: sum(1 for c in selected if d in counts[c]) for d in cat_sources}
    excluded = sorted(cat_sources, key=lambda d: (-row_sum[d], d))[:exclude_top]
    kept = set(cat_sources) - set(excluded)

    bcf = {}
    for a, b in combinations(sorted(selected), 2):
        shared = len(set(counts[a]) & set(counts[b]) & kept)
        if shared:
            bcf[(a, b)] = shared

    OUT.mkdir(exist_ok=True)
    (OUT / "urls.tsv").write_text("message_id\tchannel_id\turl\n" + "".join(f"{m}\t{c}\t{u}\n" for m, c, u in url_rows))
    (OUT / "catalog.txt").write_text("".join(f"{d}\n" for d in sorted(catalog)))
    prof = "channel_id\tdomain\tcount\tis_catalog\n"
    for c in sorted(counts):
        for d in sorted(counts[c]):
            prof += f"{c}\t{d}\t{counts[c][d]}\t{int(d in catalog)}\n"
    (OUT / "profiles.tsv").write_text(prof)
    (OUT / "selected_channels.txt").write_text("".join(f"{c}\n" for c in selected))
    (OUT / "excluded_sources.csv").write_text(
        "rank,domain,channel_count\n" + "".join(f"{i},{d},{row_sum[d]}\n" for i, d in enumerate(excluded, 1))
    )
    (OUT / "bcf.tsv").write_text("".join(f"{a}\t{b}\t{w}\n" for (a, b), w in sorted(bcf.items())))
    (OUT / "graph_edges.tsv").write_text(
        "".join(f"{a}\t{b}\t{w}\n" for (a, b), w in sorted(bcf.items()) if w >= min_bcf)
    )

    tally = {}
    for c in counts:
        for d, n in counts[c].items():
            ch, links = tally.get(d, (0, 0))
            tally[d] = (ch + 1, links + n)
    ranked = sorted(tally, key=lambda d: (-tally[d][0], d))
    segments = {
        "combined": ranked,
        "catalog_only": [d for d in ranked if d in catalog],
        "non_catalog_only": [d for d in ranked if d not in catalog],
    }
    for name, doms in segments.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "domain", "channel_count", "link_total", "is_catalog"])
        for i, d in enumerate(doms[:top_n], 1):
            w.writerow([i, d, tally[d][0], tally[d][1], str(d in catalog).lower()])
        (OUT / f"frequency_{name}.csv").write_text(buf.getvalue())

    counters["selected_channels"] = len(selected)
    counters["distinct_sources"] = len(all_sources)
    counters["catalog_domains"] = len(catalog)
    counters["graph_edges"] = sum(1 for w in bcf.values() if w >= min_bcf)
    counters["graph_nodes"] = len({c for (a, b), w in bcf.items() if w >= min_bcf for c in (a, b)})
    (OUT / "counters.json").write_text(json.dumps(dict(sorted(counters.items())), indent=2) + "\n")


if __name__ == "__main__":
    main()
