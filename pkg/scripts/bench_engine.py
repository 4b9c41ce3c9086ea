#!/usr/bin/env python3
"""Time saturation and enumeration across engine profiles.

Sweeps iteration and rewrite budgets over the desk seed templates and prints
a markdown table of mean per-seed cost, so budget changes can be judged
before a full corpus build.
"""

import argparse
import time
from importlib.resources import files

from egen.corpus import instantiate_templates, load_templates
from egen.egraph import EGraph, SaturationLimits, saturate
from egen.grammar import EnumerationLimits, enumerate_rewrites, extract_grammar
from egen.rules import load_library

PROFILES = [
    ("fast", SaturationLimits(5, 1000), EnumerationLimits(15, 50)),
    ("desk", SaturationLimits(7, 2000), EnumerationLimits(25, 100)),
    ("wide", SaturationLimits(9, 4000), EnumerationLimits(25, 200)),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--templates", default=str(files("egen") / "data" / "templates" / "desk.txt"))
    ap.add_argument("--limit", type=int, default=25, help="seeds to time per profile")
    args = ap.parse_args()

    seeds = instantiate_templates(load_templates(args.templates), (1, 4), 5000)
    seeds = seeds[: args.limit]
    rules = load_library("full")

    print(f"| profile | seeds | saturation ms/seed | extraction s/seed | rewrites/seed |")
    print(f"|---------|------:|-------------------:|------------------:|--------------:|")
    for name, sat_limits, enum_limits in PROFILES:
        sat_s = enum_s = 0.0
        rewrites = 0
        for seed in seeds:
            g = EGraph()
            root = g.add_expression(seed)
            t0 = time.perf_counter()
            saturate(g, rules, sat_limits)
            sat_s += time.perf_counter() - t0
            t0 = time.perf_counter()
            result = enumerate_rewrites(extract_grammar(g, root), enum_limits)
            enum_s += time.perf_counter() - t0
            rewrites += len(result.rewrites)
        n = len(seeds)
        print(
            f"| {name} | {n} | {1000 * sat_s / n:.1f} | {enum_s / n:.3f} "
            f"| {rewrites / n:.1f} |"
        )


if __name__ == "__main__":
    main()
