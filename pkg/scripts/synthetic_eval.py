#!/usr/bin/env python3
"""Run the full embedding-evaluation battery against synthetic oracle vectors.

Given a clusters.jsonl (or a generated toy corpus), draw near-orthogonal
cluster embeddings, then score k-means clustering, top-k retrieval,
threshold mistake detection (calibrated on a held-out batch), and
offset-analogy accuracy. This is the ceiling an ideal encoder could reach;
real encoders trained on pairs.tsv/triplets.tsv are scored the same way.
"""

import argparse
import json

from egen.corpus import Cluster, read_clusters
from egen.evaluation import (
    algebra_accuracy,
    clustering_accuracy,
    compute_threshold,
    kmeans,
    make_synthetic_algebra_tests,
    make_synthetic_mistake_derivations,
    mistake_detection_report,
    retrieval_accuracy,
    synthetic_oracle_embeddings,
)


def toy_corpus(n_clusters: int, size: int) -> list[Cluster]:
    return [
        Cluster(i, f"c{i}m0", [f"c{i}m{j}" for j in range(size)], {})
        for i in range(n_clusters)
    ]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--clusters", help="clusters.jsonl (default: 20x10 toy corpus)")
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--sigma", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=5, help="retrieval depth")
    ap.add_argument("--derivations", type=int, default=50)
    ap.add_argument("--algebra-tests", type=int, default=20)
    args = ap.parse_args()

    clusters = read_clusters(args.clusters) if args.clusters else toy_corpus(20, 10)
    table = synthetic_oracle_embeddings(clusters, args.dim, args.sigma, args.seed)

    labels = kmeans(table, len(clusters), seed=args.seed)
    calib = make_synthetic_mistake_derivations(
        clusters, table, rng_seed=args.seed + 1, count=args.derivations
    )
    threshold = compute_threshold(calib, table)
    evaled = make_synthetic_mistake_derivations(
        clusters, table, rng_seed=args.seed + 2, count=args.derivations,
        min_correct_sim=threshold.t + 1e-9,
    )
    mistakes = mistake_detection_report(evaled, table, threshold)

    print(json.dumps({
        "clusters": len(clusters),
        "expressions": len(table),
        "dim": args.dim,
        "sigma": args.sigma,
        "kmeans_accuracy": clustering_accuracy(labels, clusters),
        "retrieval_accuracy": retrieval_accuracy(table, clusters, args.k),
        "mistake_threshold": threshold.t,
        "mistake_f1": mistakes["mistake"]["f1"],
        "algebra_accuracy": algebra_accuracy(
            make_synthetic_algebra_tests(clusters, args.seed, args.algebra_tests), table
        ),
    }, indent=2))


if __name__ == "__main__":
    main()
