#!/usr/bin/env python3
"""Build the desk corpus and every dataset derived from it.

Produces, under --out-dir:
  clusters.jsonl        equivalence clusters (with per-file manifest)
  pairs.tsv             all ordered in-cluster pairs
  triplets.tsv          anchor/positive/negative triplets
  derivations.jsonl     step chains with injected mistakes
  selection.jsonl       7-candidate selection tests
  train_clusters.jsonl / test_clusters.jsonl
"""

import argparse
import sys
from importlib.resources import files

from egen.cli import main as egen


def run(*argv: str) -> None:
    rc = egen(list(argv))
    if rc != 0:
        sys.exit(rc)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out/desk")
    ap.add_argument("--templates", default=str(files("egen") / "data" / "templates" / "desk.txt"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--triplets", type=int, default=20_000)
    ap.add_argument("--selection-tests", type=int, default=500)
    args = ap.parse_args()

    out = args.out_dir
    clusters = f"{out}/clusters.jsonl"
    engine = [
        "--rules", "full", "--iterations", "7", "--max-enodes", "2000",
        "--token-limit", "25", "--max-rewrites", "100", "--seed", str(args.seed),
    ]
    run("corpus", "--templates", args.templates, "--out-dir", out,
        "--jobs", str(args.jobs), *engine)
    run("pairs", "--clusters", clusters, "--out", f"{out}/pairs.tsv")
    run("triplets", "--clusters", clusters, "--out", f"{out}/triplets.tsv",
        "--count", str(args.triplets), "--seed", str(args.seed))
    run("derive", "--clusters", clusters, "--out", f"{out}/derivations.jsonl",
        "--steps", "4..8", "--mistake-prob", "0.2", "--rules", "full",
        "--seed", str(args.seed))
    run("select-tests", "--clusters", clusters, "--out", f"{out}/selection.jsonl",
        "--count", str(args.selection_tests), "--seed", str(args.seed))
    run("split", "--clusters", clusters, "--test-fraction", "0.2",
        "--out-dir", out, "--seed", str(args.seed))
    run("verify", "--clusters", clusters, "--seed", str(args.seed + 1))


if __name__ == "__main__":
    main()
