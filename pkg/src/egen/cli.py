"""Command-line interface: the corpus pipeline as deterministic subcommands.

Machine-readable results go to stdout as JSON; one-line human summaries go to
stderr.  Every file-producing command writes a `<file>.manifest.json` sibling
recording the tool version, the effective configuration and its hash, plus
wall-clock timing isolated under a "timing" key (so byte-comparing outputs
across runs only needs that key ignored — data files contain no timing).

Exit codes: 0 success, 1 validation/usage error, 2 unexpected runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from .egraph import EGraph, SaturationLimits, saturate
from .exprs import ExprError, parse, to_prefix
from .grammar import EnumerationLimits, GrammarError, enumerate_rewrites, extract_grammar
from .rules import RuleError, load_library


@dataclass(frozen=True)
class RunConfig:
    rules: str = "full"
    templates: str = ""
    seed: int = 0
    out_dir: str = "."
    jobs: int = 1
    iterations: int = 30
    max_enodes: int = 50_000
    time_budget_s: float = 600.0
    token_limit: int = 25
    max_rewrites: int = 200
    int_span: str = "1..4"
    cap: int = 5000
    audit: bool = True

    def sat_limits(self) -> SaturationLimits:
        return SaturationLimits(self.iterations, self.max_enodes, self.time_budget_s)

    def enum_limits(self) -> EnumerationLimits:
        return EnumerationLimits(self.token_limit, self.max_rewrites, self.time_budget_s)

    def span(self) -> tuple[int, int]:
        lo, sep, hi = self.int_span.partition("..")
        if not sep:
            raise ValueError(f"bad int span {self.int_span!r} (want a..b)")
        return int(lo), int(hi)


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _emit(obj: dict) -> None:
    print(json.dumps(obj, indent=2))


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _manifest(path: Path, config: dict, extra: Optional[dict] = None, timing: Optional[dict] = None) -> None:
    payload: dict = {
        "version": __version__,
        "config_hash": config_hash(config),
        "config": config,
    }
    if extra:
        payload.update(extra)
    if timing is not None:
        payload["timing"] = timing
    corpus_mod.write_manifest(path, payload)


_BOOL_TRUE = ("1", "true", "yes", "on")


def _load_config_file(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        cfg[key.strip()] = value.strip()
    return cfg


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Fold command-line flags over --config file entries over defaults."""
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    defaults = RunConfig()
    values: dict = {}
    for name, default in asdict(defaults).items():
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
        elif name in file_cfg:
            raw = file_cfg[name]
            if isinstance(default, bool):
                values[name] = raw.lower() in _BOOL_TRUE
            else:
                values[name] = type(default)(raw)
        else:
            values[name] = default
    unknown = set(file_cfg) - set(asdict(defaults))
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):  # noqa: D102
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rules", help="rule library name or path (default: full)")
    p.add_argument("--iterations", type=int, help="saturation iteration limit")
    p.add_argument("--max-enodes", type=int, dest="max_enodes", help="saturation e-node limit")
    p.add_argument("--time-budget", type=float, dest="time_budget_s", help="per-seed seconds")
    p.add_argument("--token-limit", type=int, dest="token_limit", help="rewrite token limit")
    p.add_argument("--max-rewrites", type=int, dest="max_rewrites", help="rewrites per seed")
    p.add_argument("--config", help="key=value config file (flags take precedence)")
    p.add_argument("--seed", type=int, help="rng seed (default 0)")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_saturate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    rules = load_library(cfg.rules)
    g = EGraph()
    root = g.add_expression(parse(args.expr))
    report = saturate(g, rules, cfg.sat_limits())
    grammar = extract_grammar(g, root)
    out = {
        "expr": to_prefix(parse(args.expr)),
        "report": report.to_dict(include_timing=False),
        "grammar": grammar.dump().splitlines(),
        "timing": {"elapsed_s": report.elapsed_s},
    }
    _emit(out)
    _note(
        f"stop={report.stop_reason} iterations={report.iterations} "
        f"enodes={report.enodes} eclasses={report.eclasses}"
    )
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    rules = load_library(cfg.rules)
    build = corpus_mod.build_cluster(
        args.expr,
        rules,
        cfg.sat_limits(),
        cfg.enum_limits(),
        rng_seed=cfg.seed,
        audit=cfg.audit,
        rules_name=cfg.rules,
    )
    c = build.cluster
    _emit(
        {
            "cluster": json.loads(c.to_json()),
            "timing": {"saturation_s": build.saturation_s, "enumeration_s": build.enumeration_s},
        }
    )
    _note(f"cluster size={len(c.exprs)} seed={c.seed!r}")
    return 0


def _collect_seeds(cfg: RunConfig, expr_list: Optional[str]) -> list:
    seeds = []
    if cfg.templates and cfg.templates != "none":
        templates = corpus_mod.load_templates(cfg.templates)
        seeds.extend(corpus_mod.instantiate_templates(templates, cfg.span(), cfg.cap))
    if expr_list:
        for line in Path(expr_list).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                seeds.append(parse(line))
    if not seeds:
        raise ValueError("no seeds: provide --templates and/or --expr-list")
    return seeds


def cmd_corpus(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    seeds = _collect_seeds(cfg, args.expr_list)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    build = corpus_mod.build_corpus(
        seeds,
        cfg.rules,
        cfg.sat_limits(),
        cfg.enum_limits(),
        corpus_seed=cfg.seed,
        jobs=cfg.jobs,
        audit=cfg.audit,
    )
    timing = dict(build.timing)
    timing["total_s"] = time.perf_counter() - t0
    path = out_dir / "clusters.jsonl"
    config = asdict(cfg)
    stats = corpus_mod.corpus_stats(build.clusters)
    corpus_mod.write_clusters(build.clusters, path)
    _manifest(path, config, {"stats": stats}, timing)
    _emit({"clusters": str(path), "stats": stats, "timing": timing})
    _note(
        f"wrote {stats['clusters']} clusters ({stats['exprs']} expressions, "
        f"avg {stats['avg_cluster_size']:.1f}) to {path}"
    )
    return 0


def cmd_pairs(args: argparse.Namespace) -> int:
    clusters = corpus_mod.read_clusters(args.clusters)
    out = Path(args.out)
    count = corpus_mod.write_pairs(clusters, out)
    config = {"clusters": str(args.clusters), "out": str(out)}
    _manifest(out, config, {"pairs": count})
    _emit({"pairs": count, "out": str(out)})
    _note(f"wrote {count} pairs to {out}")
    return 0


def cmd_triplets(args: argparse.Namespace) -> int:
    clusters = corpus_mod.read_clusters(args.clusters)
    triplets = corpus_mod.make_triplets(clusters, args.seed or 0, args.count)
    out = Path(args.out)
    corpus_mod.write_triplets(triplets, out)
    config = {"clusters": str(args.clusters), "out": str(out), "count": args.count, "seed": args.seed or 0}
    _manifest(out, config, {"triplets": len(triplets)})
    _emit({"triplets": len(triplets), "out": str(out)})
    _note(f"wrote {len(triplets)} triplets to {out}")
    return 0


def cmd_derive(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    clusters = corpus_mod.read_clusters(args.clusters)
    rules = load_library(cfg.rules)
    lo, sep, hi = args.steps.partition("..")
    if not sep:
        raise ValueError(f"bad --steps {args.steps!r} (want a..b)")
    batch = corpus_mod.generate_derivations(
        clusters,
        rules,
        rng_seed=cfg.seed,
        steps_range=(int(lo), int(hi)),
        mistake_prob=args.mistake_prob,
        limit=args.limit,
    )
    out = Path(args.out)
    corpus_mod.write_derivations(batch.derivations, out)
    config = {
        "clusters": str(args.clusters),
        "rules": cfg.rules,
        "steps": args.steps,
        "mistake_prob": args.mistake_prob,
        "seed": cfg.seed,
    }
    n_steps = sum(len(d.steps) - 1 for d in batch.derivations)
    n_mistakes = sum(len(d.mistakes) for d in batch.derivations)
    stats = {
        "derivations": len(batch.derivations),
        "transitions": n_steps,
        "mistakes": n_mistakes,
        "skipped_seeds": batch.skipped,
    }
    _manifest(out, config, {"stats": stats})
    _emit({"out": str(out), "stats": stats})
    _note(f"wrote {len(batch.derivations)} derivations ({n_mistakes}/{n_steps} mistakes)")
    return 0


def cmd_select_tests(args: argparse.Namespace) -> int:
    clusters = corpus_mod.read_clusters(args.clusters)
    tests = corpus_mod.make_selection_tests(clusters, args.seed or 0, args.count)
    out = Path(args.out)
    corpus_mod.write_selection_tests(tests, out)
    config = {"clusters": str(args.clusters), "count": args.count, "seed": args.seed or 0}
    _manifest(out, config, {"tests": len(tests)})
    _emit({"tests": len(tests), "out": str(out)})
    _note(f"wrote {len(tests)} selection tests to {out}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    clusters = corpus_mod.read_clusters(args.clusters)
    train, test = corpus_mod.split_train_test(clusters, args.test_fraction, args.seed or 0)
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train_clusters.jsonl"
    test_path = out_dir / "test_clusters.jsonl"
    corpus_mod.write_clusters(train, train_path)
    corpus_mod.write_clusters(test, test_path)
    config = {
        "clusters": str(args.clusters),
        "test_fraction": args.test_fraction,
        "seed": args.seed or 0,
    }
    _manifest(train_path, config, {"clusters": len(train)})
    _manifest(test_path, config, {"clusters": len(test)})
    _emit(
        {
            "train": {"path": str(train_path), "clusters": len(train)},
            "test": {"path": str(test_path), "clusters": len(test)},
        }
    )
    _note(f"split {len(clusters)} clusters into {len(train)} train / {len(test)} test")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    clusters = corpus_mod.read_clusters(args.clusters)
    report = corpus_mod.verify_clusters(clusters, args.seed or 0)
    _emit(report)
    _note(
        f"verified {report['exprs']} expressions in {report['clusters']} clusters: "
        f"pass rate {report['pass_rate']:.4f}"
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    seeds = _collect_seeds(cfg, args.expr_list)
    build = corpus_mod.build_corpus(
        seeds,
        cfg.rules,
        cfg.sat_limits(),
        cfg.enum_limits(),
        corpus_seed=cfg.seed,
        jobs=cfg.jobs,
        audit=False,
    )
    timing = {
        "mean_saturation_ms": build.timing["saturation_s_mean"] * 1000.0,
        "mean_extraction_s": build.timing["enumeration_s_mean"],
        "total_s": build.timing["saturation_s_total"] + build.timing["enumeration_s_total"],
    }
    _emit({"seeds": len(seeds), "errors": build.errors, "timing": timing})
    _note(
        f"{len(seeds)} seeds: saturation {timing['mean_saturation_ms']:.1f} ms/seed, "
        f"extraction {timing['mean_extraction_s']:.3f} s/seed"
    )
    return 0


def cmd_synth_embed(args: argparse.Namespace) -> int:
    clusters = corpus_mod.read_clusters(args.clusters)
    table = eval_mod.synthetic_oracle_embeddings(
        clusters, args.dim, args.sigma, args.seed or 0
    )
    out = Path(args.out)
    table.save(out)
    config = {
        "clusters": str(args.clusters),
        "dim": args.dim,
        "sigma": args.sigma,
        "seed": args.seed or 0,
    }
    _manifest(out, config, {"vectors": len(table)})
    _emit({"out": str(out), "vectors": len(table), "dim": args.dim})
    _note(f"wrote {len(table)} synthetic vectors to {out}")
    return 0


def cmd_eval_kmeans(args: argparse.Namespace) -> int:
    table = eval_mod.EmbeddingTable.load(args.embeddings)
    clusters = corpus_mod.read_clusters(args.clusters)
    k = args.k or len(clusters)
    labels = eval_mod.kmeans(table, k, seed=args.seed or 0)
    acc = eval_mod.clustering_accuracy(labels, clusters, weighted=args.weighted)
    _emit({"clustering_accuracy": acc, "k": k, "expressions": len(table), "weighted": args.weighted})
    _note(f"k-means accuracy {acc:.4f} (k={k})")
    return 0


def cmd_eval_retrieve(args: argparse.Namespace) -> int:
    table = eval_mod.EmbeddingTable.load(args.embeddings)
    clusters = corpus_mod.read_clusters(args.clusters)
    acc = eval_mod.retrieval_accuracy(table, clusters, args.k)
    _emit({"retrieval_accuracy": acc, "k": args.k})
    _note(f"retrieval accuracy {acc:.4f} at k={args.k}")
    return 0


def cmd_eval_mistakes(args: argparse.Namespace) -> int:
    table = eval_mod.EmbeddingTable.load(args.embeddings)
    derivations = corpus_mod.read_derivations(args.derivations)
    if args.threshold is not None:
        threshold = eval_mod.MistakeThreshold(args.threshold)
    else:
        threshold = eval_mod.compute_threshold(derivations, table)
    report = eval_mod.mistake_detection_report(derivations, table, threshold)
    report["derivations_skipped"] = threshold.derivations_skipped
    _emit(report)
    _note(
        f"mistake F1 {report['mistake']['f1']:.4f} at threshold {report['threshold']:.6f}"
    )
    return 0


def cmd_eval_algebra(args: argparse.Namespace) -> int:
    table = eval_mod.EmbeddingTable.load(args.embeddings)
    tests = eval_mod.read_algebra_tests(args.tests)
    acc = eval_mod.algebra_accuracy(tests, table)
    _emit({"algebra_accuracy": acc, "tests": len(tests)})
    _note(f"embedding-algebra accuracy {acc:.4f} over {len(tests)} tests")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="egen", description=__doc__)
    parser.add_argument("--version", action="version", version=f"egen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saturate", help="saturate one expression, dump report + grammar")
    p.add_argument("--expr", required=True)
    _add_engine_flags(p)
    p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("cluster", help="build one equivalence cluster")
    p.add_argument("--expr", required=True)
    p.add_argument("--no-audit", dest="audit", action="store_const", const=False)
    _add_engine_flags(p)
    p.set_defaults(func=cmd_cluster, audit=None)

    p = sub.add_parser("corpus", help="templates/expressions -> clusters.jsonl")
    p.add_argument("--templates", help="template file, or 'none'")
    p.add_argument("--expr-list", dest="expr_list", help="file of seed expressions")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel seed builders")
    p.add_argument("--cap", type=int, help="max seeds after template expansion")
    p.add_argument("--int-span", dest="int_span", help="default {int} range a..b")
    p.add_argument("--no-audit", dest="audit", action="store_const", const=False)
    _add_engine_flags(p)
    p.set_defaults(func=cmd_corpus, audit=None)

    p = sub.add_parser("pairs", help="clusters.jsonl -> pairs.tsv")
    p.add_argument("--clusters", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("triplets", help="clusters.jsonl -> triplets.tsv")
    p.add_argument("--clusters", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_triplets)

    p = sub.add_parser("derive", help="clusters.jsonl -> derivations.jsonl")
    p.add_argument("--clusters", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", default="4..8", help="chain length range a..b")
    p.add_argument("--mistake-prob", dest="mistake_prob", type=float, default=0.2)
    p.add_argument("--limit", type=int, help="derive from the first N clusters only")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("select-tests", help="clusters.jsonl -> selection.jsonl")
    p.add_argument("--clusters", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_select_tests)

    p = sub.add_parser("split", help="cluster-level train/test split")
    p.add_argument("--clusters", required=True)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, required=True)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("verify", help="numeric re-audit of a clusters.jsonl")
    p.add_argument("--clusters", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="mean saturation/extraction timing per seed")
    p.add_argument("--templates", help="template file, or 'none'")
    p.add_argument("--expr-list", dest="expr_list", help="file of seed expressions")
    p.add_argument("--jobs", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--int-span", dest="int_span")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth-embed", help="clusters.jsonl -> synthetic embeddings.tsv")
    p.add_argument("--clusters", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth_embed)

    p = sub.add_parser("eval", help="embedding evaluation tasks")
    esub = p.add_subparsers(dest="task", required=True)

    q = esub.add_parser("kmeans", help="clustering accuracy over a corpus")
    q.add_argument("--embeddings", required=True)
    q.add_argument("--clusters", required=True)
    q.add_argument("--k", type=int, help="cluster count (default: number of truth clusters)")
    q.add_argument("--weighted", action="store_true", help="member-weighted mean")
    q.add_argument("--seed", type=int)
    q.set_defaults(func=cmd_eval_kmeans)

    q = esub.add_parser("retrieve", help="top-k retrieval accuracy")
    q.add_argument("--embeddings", required=True)
    q.add_argument("--clusters", required=True)
    q.add_argument("--k", type=int, default=5)
    q.set_defaults(func=cmd_eval_retrieve)

    q = esub.add_parser("mistakes", help="threshold mistake detection report")
    q.add_argument("--embeddings", required=True)
    q.add_argument("--derivations", required=True)
    q.add_argument("--threshold", type=float, help="override the computed threshold")
    q.set_defaults(func=cmd_eval_mistakes)

    q = esub.add_parser("algebra", help="analogy accuracy over algebra tests")
    q.add_argument("--embeddings", required=True)
    q.add_argument("--tests", required=True)
    q.set_defaults(func=cmd_eval_algebra)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        ExprError,
        RuleError,
        GrammarError,
        corpus_mod.CorpusError,
        eval_mod.EvalError,
        FileNotFoundError,
        IsADirectoryError,
        PermissionError,
        ValueError,
    ) as exc:
        _note(f"error: {exc}")
        return 1
    except Exception as exc:  # noqa: BLE001 — runtime failures get exit code 2
        _note(f"runtime error: {type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
