#!/usr/bin/env python3
"""Download the Cora citation dataset and convert it to the repo format.

Needs network access; run once, then commit data/cora/. The library
itself never downloads anything.

    python scripts/fetch_cora.py [--dest data/cora] [--url ...]

Source archive layout (cora.content / cora.cites):
  cora.content  <paper_id> <1433 binary word flags> <class_label>
  cora.cites    <cited_paper_id> <citing_paper_id>

Node ids follow the row order of cora.content; class ids are assigned
by sorting the label strings. Self-citations are dropped and duplicate
citations (either direction) are merged, which yields 2708 nodes, 5278
undirected edges, 1433 features and 7 classes.
"""
import argparse
import io
import json
import os
import tarfile
import urllib.request

DEFAULT_URL = "https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz"


def fetch_archive(url):
    print(f"downloading {url} ...")
    with urllib.request.urlopen(url) as resp:
        return resp.read()


def convert(content_text, cites_text, dest):
    node_ids = []
    features = []
    raw_labels = []
    for line in content_text.strip().splitlines():
        parts = line.split()
        node_ids.append(parts[0])
        features.append(parts[1:-1])
        raw_labels.append(parts[-1])
    index = {pid: i for i, pid in enumerate(node_ids)}
    classes = sorted(set(raw_labels))
    labels = [classes.index(lbl) for lbl in raw_labels]

    edges = set()
    skipped = 0
    for line in cites_text.strip().splitlines():
        a, b = line.split()
        if a not in index or b not in index:
            skipped += 1
            continue
        i, j = index[a], index[b]
        if i == j:
            skipped += 1
            continue
        edges.add((min(i, j), max(i, j)))

    os.makedirs(dest, exist_ok=True)
    with open(os.path.join(dest, "edges.txt"), "w", encoding="utf-8") as fh:
        for i, j in sorted(edges):
            fh.write(f"{i} {j}\n")
    with open(os.path.join(dest, "features.txt"), "w", encoding="utf-8") as fh:
        for row in features:
            fh.write(" ".join(row) + "\n")
    with open(os.path.join(dest, "labels.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(str(l) for l in labels) + "\n")
    with open(os.path.join(dest, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump({"name": "cora", "C": len(classes),
                   "d": len(features[0])}, fh)
    print(f"wrote {len(node_ids)} nodes, {len(edges)} undirected edges, "
          f"{len(classes)} classes to {dest} ({skipped} citation lines skipped)")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dest", default="data/cora")
    ap.add_argument("--url", default=DEFAULT_URL)
    args = ap.parse_args()

    blob = fetch_archive(args.url)
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        members = {os.path.basename(m.name): m for m in tar.getmembers()
                   if m.isfile()}
        content = tar.extractfile(members["cora.content"]).read().decode()
        cites = tar.extractfile(members["cora.cites"]).read().decode()
    convert(content, cites, args.dest)


if __name__ == "__main__":
    main()
