#!/usr/bin/env python3
"""Slow, in-memory reference implementation of `wdcs extract`.

Used to produce the golden expectations under
crates/cli/tests/fixtures/golden/expected/. It shares no code or data with the
Rust implementation: the relation mapping is transcribed here independently.

    python3 tools/reference_extract.py crates/cli/tests/fixtures/golden
"""

import json
import sys
import unicodedata
from pathlib import Path

THRESHOLD = 1e-6
LANGUAGE = "en"

FORWARD = {
    "P1889": "/r/DistinctFrom",
    "P461": "/r/Antonym",
    "P460": "/r/Synonym",
    "P1382": "/r/SimilarTo",
    "P138": "/r/DerivedFrom",
    "P1074": "/r/DerivedFrom",
    "P31": "/r/IsA",
    "P279": "/r/IsA",
    "P1647": "/r/IsA",
    "P361": "/r/PartOf",
    "P186": "/r/MadeOf",
    "P360": "/r/MadeOf",
    "P366": "/r/UsedFor",
    "P1535": "/r/UsedFor",
    "P462": "/r/HasProperty",
    "P1552": "/r/HasProperty",
    "P1963": "/r/HasProperty",
    "P1687": "/r/HasProperty",
    "P21": "/r/HasProperty",
    "P1542": "/r/Causes",
    "P780": "/r/Causes",
    "P155": "/r/HasPrerequisite",
    "P1269": "/r/HasContext",
    "P425": "/r/HasContext",
    "P1995": "/r/HasContext",
    "P921": "/r/HasContext",
    "P2094": "/r/HasContext",
    "P136": "/r/HasContext",
    "P2579": "/r/HasContext",
    "P101": "/r/HasContext",
    "P689": "/r/HasContext",
    "P180": "/r/HasContext",
    "P641": "/r/HasContext",
    "P1659": "/r/RelatedTo",
    "P1629": "/r/RelatedTo",
}
INVERSE = {
    "P527": "/r/PartOf",
    "P2670": "/r/PartOf",
    "P2354": "/r/MadeOf",
    "P1056": "/r/CreatedBy",
    "P2283": "/r/UsedFor",
    "P828": "/r/Causes",
    "P156": "/r/HasPrerequisite",
    "P3095": "/r/HasContext",
}
BLACKLIST = {"P681", "P2548", "P680", "P682", "P816", "P2302"}
LABELS = {
    "/r/DistinctFrom": "distinct from",
    "/r/Antonym": "antonym",
    "/r/Synonym": "synonym",
    "/r/SimilarTo": "similar to",
    "/r/DerivedFrom": "derived from",
    "/r/IsA": "is a",
    "/r/PartOf": "part of",
    "/r/MadeOf": "made of",
    "/r/CreatedBy": "created by",
    "/r/UsedFor": "used for",
    "/r/HasProperty": "has property",
    "/r/Causes": "causes",
    "/r/HasPrerequisite": "has prerequisite",
    "/r/HasContext": "has context",
    "/r/RelatedTo": "related to",
}
CSKG_HEADER = [
    "id", "node1", "relation", "node2", "node1;label", "node2;label",
    "relation;label", "relation;dimension", "source", "sentence",
]


def unescape(cell):
    out, i = [], 0
    while i < len(cell):
        c = cell[i]
        if c == "\\" and i + 1 < len(cell):
            nxt = cell[i + 1]
            table = {"t": "\t", "n": "\n", "r": "\r", "\\": "\\"}
            if nxt in table:
                out.append(table[nxt])
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)


def escape(value):
    return (value.replace("\\", "\\\\").replace("\t", "\\t")
            .replace("\n", "\\n").replace("\r", "\\r"))


def read_rows(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    header = lines[0].rstrip("\r").split("\t")
    rows = []
    for line in lines[1:]:
        line = line.rstrip("\r")
        if line == "":
            continue
        cells = line.split("\t")
        rows.append(cells if len(cells) == len(header) else None)
    return header, rows


def split_list(value):
    items, cur, i = [], "", 0
    while i < len(value):
        if value[i] == "\\" and i + 1 < len(value) and value[i + 1] == "|":
            cur += "|"
            i += 2
        elif value[i] == "|":
            items.append(cur)
            cur = ""
            i += 1
        else:
            cur += value[i]
            i += 1
    items.append(cur)
    return items


def english_labels(value):
    found = []
    for item in split_list(value):
        item = item.strip()
        lang = None
        text = item
        if item.startswith("'") and "'@" in item[1:]:
            at = item.rindex("'@")
            text = item[1:at].replace("\\'", "'")
            lang = item[at + 2:]
        elif len(item) >= 2 and item[0] == '"' and item[-1] == '"':
            text = item[1:-1].replace('\\"', '"')
        text = text.strip()
        if text and (lang is None or lang == LANGUAGE):
            found.append(text)
    return "|".join(found) if found else None


def load_labels(path):
    header, rows = read_rows(path)
    id_col, label_col = header.index("id"), header.index("label")
    labels = {}
    for cells in rows:
        if cells is None or cells[id_col] == "":
            continue
        node = unescape(cells[id_col])
        label = english_labels(unescape(cells[label_col]))
        if label is None:
            labels.pop(node, None)
        else:
            labels[node] = label
    return labels


def load_frequencies(path):
    freq = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        term, value = line.split("\t")
        if n == 0 and term == "term":
            continue
        key = term.strip().lower()
        freq[key] = max(freq.get(key, 0.0), float(value))
    return freq


def primary(label):
    return label.split("|")[0]


def is_concept(label):
    if not label:
        return False
    text = primary(label)
    if not text or unicodedata.category(text[0]) != "Ll":
        return False
    return all(unicodedata.category(c) not in ("Lu", "Lt") for c in text)


def ascii_tokens(text):
    token, tokens = "", []
    for c in text:
        if c in " \t\n\r\x0c":
            if token:
                tokens.append(token)
            token = ""
        else:
            token += c
    if token:
        tokens.append(token)
    return tokens


def frequency(label, freq):
    phrase = primary(label).strip().lower()
    if phrase in freq:
        return freq[phrase]
    tokens = ascii_tokens(phrase)
    if not tokens or any(t not in freq for t in tokens):
        return 0.0
    return min(freq[t] for t in tokens)


def is_common(label, freq):
    return label is not None and frequency(label, freq) >= THRESHOLD


def main(root):
    root = Path(root)
    labels = load_labels(root / "nodes.tsv")
    freq = load_frequencies(root / "freq.tsv")
    header, rows = read_rows(root / "edges.tsv")
    rel_col = header.index("label") if "label" in header else header.index("relation")
    n1_col, n2_col = header.index("node1"), header.index("node2")

    edges = []
    for cells in rows:
        if cells is None:
            continue
        n1, rel, n2 = (unescape(cells[c]) for c in (n1_col, rel_col, n2_col))
        if n1 and rel and n2:
            edges.append((n1, rel, n2))

    concept = [e for e in edges if is_concept(labels.get(e[0])) and is_concept(labels.get(e[2]))]
    common = [e for e in concept if is_common(labels.get(e[0]), freq) and is_common(labels.get(e[2]), freq)]
    blacklist = set()
    for n1, rel, n2 in common:
        if rel in BLACKLIST:
            blacklist.update((n1, n2))

    mapped, unmapped, blacklisted_rel = [], 0, 0
    for n1, rel, n2 in common:
        if rel in FORWARD:
            mapped.append(((n1, FORWARD[rel], n2), (rel, n1, n2)))
        elif rel in INVERSE:
            mapped.append(((n2, INVERSE[rel], n1), (rel, n1, n2)))
        elif rel in BLACKLIST:
            blacklisted_rel += 1
        else:
            unmapped += 1
    kept = [m for m in mapped if m[0][0] not in blacklist and m[0][2] not in blacklist]

    groups = {}
    for triple, statement in kept:
        groups.setdefault(triple, []).append(statement)

    def base_id(triple):
        n1, rel, n2 = triple
        return f"{n1}-{rel.rsplit('/', 1)[-1].lower()}-{n2}"

    ordered = sorted(groups, key=lambda t: (base_id(t), t))
    out_rows, prov_rows = [], []
    last, collisions = None, 0
    for triple in ordered:
        base = base_id(triple)
        if base == last:
            collisions += 1
            edge_id = f"{base}-{collisions:04d}"
        else:
            last, collisions, edge_id = base, 0, base
        n1, rel, n2 = triple
        out_rows.append([edge_id, n1, rel, n2, labels.get(n1, ""), labels.get(n2, ""),
                         LABELS[rel], "", "WD", ""])
        for statement in sorted(groups[triple]):
            prov_rows.append([edge_id, *statement])

    expected = root / "expected"
    expected.mkdir(exist_ok=True)
    with open(expected / "cskg.tsv", "w", encoding="utf-8", newline="") as f:
        f.write("\t".join(CSKG_HEADER) + "\n")
        for row in out_rows:
            f.write("\t".join(escape(c) for c in row) + "\n")
    with open(expected / "cskg.provenance.tsv", "w", encoding="utf-8", newline="") as f:
        f.write("final_edge_id\toriginal_property\toriginal_node1\toriginal_node2\n")
        for row in prov_rows:
            f.write("\t".join(escape(c) for c in row) + "\n")
    counts = {
        "stages": {
            "input": len(edges),
            "after_concept_filter": len(concept),
            "after_commonness_filter": len(common),
            "after_mapping": len(mapped),
            "after_blacklist": len(kept),
            "after_dedup": len(groups),
        },
        "dropped": {
            "unmapped_relation": unmapped,
            "blacklist_relation": blacklisted_rel,
            "blacklisted_node": len(mapped) - len(kept),
        },
        "blacklist_size": len(blacklist),
        "malformed_edge_rows": len(rows) - len(edges),
    }
    with open(expected / "report_counts.json", "w", encoding="utf-8") as f:
        json.dump(counts, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/cli/tests/fixtures/golden")
