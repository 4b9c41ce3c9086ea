"""Corpus factory: templates → seeds → equivalence clusters → datasets.

The pipeline is seed-deterministic end to end: every randomized stage takes
an explicit integer seed, per-seed generators are derived as
`corpus_seed * 1_000_003 + index`, and no emitted file contains wall-clock
values (timing lives only in manifests, under a dedicated "timing" key), so
identical inputs reproduce byte-identical artifacts.

File formats:
  clusters.jsonl    {"cluster_id": int, "seed": str, "exprs": [str], "meta": {}}
  pairs.tsv         src<TAB>tgt
  triplets.tsv      anchor<TAB>pos<TAB>neg
  derivations.jsonl {"id": int, "steps": [str], "mistakes": [int]}
  selection.jsonl   {"query": str, "candidates": [str x7], "answer": int}
  templates.txt     one s-expression template per line, '#' comments
"""

from __future__ import annotations

import bisect
import itertools
import json
import random
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

from . import __version__
from .egraph import EGraph, SaturationLimits, saturate
from .exprs import (
    Expr,
    Int,
    NoMutableSite,
    OPERATORS,
    Operator,
    mutate,
    parse,
    parse_sexpr,
    replace_subexpression,
    subexpressions,
    to_prefix,
    token_count,
)
from .grammar import EnumerationLimits, enumerate_rewrites, extract_grammar
from .oracle import (
    DEFAULT_POLICY,
    OraclePolicy,
    confirm_different,
    confirm_equivalent,
)
from .rules import RewriteRule, instantiate, load_library, match_expr

SEED_STRIDE = 1_000_003


class CorpusError(ValueError):
    pass


class TemplateSyntaxError(CorpusError):
    pass


class InsufficientClusters(CorpusError):
    pass


class ClusterTooSmall(CorpusError):
    pass


class NoApplicableRule(CorpusError):
    pass


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

#: `{aop}` expands over the four basic binary arithmetic operators.
AOP_CHOICES = ("+", "-", "*", "/")

_PLACEHOLDER_RE = re.compile(r"\{(aop|fop|int)(?::([^{}]+))?\}\Z")
_DEFAULT_INT_SPAN = (1, 4)


def _fop_choices(category: Optional[str]) -> tuple[str, ...]:
    names = tuple(
        op.name
        for op in OPERATORS.values()
        if op.arity == 1 and (category is None or op.category == category)
    )
    if not names:
        raise TemplateSyntaxError(f"no unary operator in category {category!r}")
    return names


def _placeholder_choices(token: str, int_span: tuple[int, int]) -> Optional[tuple[str, ...]]:
    """Expansion domain for a placeholder token, or None for ordinary tokens."""
    m = _PLACEHOLDER_RE.match(token)
    if m is None:
        if token.startswith("{") or token.endswith("}"):
            raise TemplateSyntaxError(f"malformed placeholder {token!r}")
        return None
    kind, arg = m.group(1), m.group(2)
    if kind == "aop":
        if arg is not None:
            raise TemplateSyntaxError("{aop} takes no argument")
        return AOP_CHOICES
    if kind == "fop":
        return _fop_choices(arg)
    if arg is None:
        lo, hi = int_span
    else:
        rm = re.match(r"(-?\d+)\.\.(-?\d+)\Z", arg)
        if rm is None:
            raise TemplateSyntaxError(f"bad int range in {token!r} (want {{int:a..b}})")
        lo, hi = int(rm.group(1)), int(rm.group(2))
    if lo > hi:
        raise TemplateSyntaxError(f"empty int range in {token!r}")
    return tuple(str(v) for v in range(lo, hi + 1))


def expand_template(
    template: str,
    int_span: tuple[int, int] = _DEFAULT_INT_SPAN,
    variables: Sequence[str] = ("x",),
) -> list[Expr]:
    """All instantiations of one template, in deterministic Cartesian order."""
    tokens = template.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise TemplateSyntaxError("empty template")
    domains: list[tuple[str, ...]] = []
    slots: list[int] = []
    for i, tok in enumerate(tokens):
        choices = _placeholder_choices(tok, int_span)
        if choices is not None:
            slots.append(i)
            domains.append(choices)
    out: list[Expr] = []
    for combo in itertools.product(*domains):
        filled = list(tokens)
        for pos, value in zip(slots, combo):
            filled[pos] = value
        text = " ".join(filled)
        try:
            out.append(parse_sexpr(text, variables))
        except ValueError as exc:
            raise TemplateSyntaxError(f"template {template!r}: {exc}") from exc
    return out


def instantiate_templates(
    templates: Sequence[str],
    int_span: tuple[int, int] = _DEFAULT_INT_SPAN,
    cap: int = 5000,
    variables: Sequence[str] = ("x",),
) -> list[Expr]:
    """Expand templates in order, deduplicate by prefix string, truncate at cap."""
    if cap < 1:
        raise ValueError("cap must be positive")
    seen: set[str] = set()
    out: list[Expr] = []
    for template in templates:
        for expr in expand_template(template, int_span, variables):
            key = to_prefix(expr)
            if key in seen:
                continue
            seen.add(key)
            out.append(expr)
            if len(out) >= cap:
                return out
    return out


def load_templates(path: Union[str, Path]) -> list[str]:
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


# ---------------------------------------------------------------------------
# Clusters
# ---------------------------------------------------------------------------


@dataclass
class Cluster:
    cluster_id: int
    seed: str
    exprs: list[str]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        obj = {
            "cluster_id": self.cluster_id,
            "seed": self.seed,
            "exprs": self.exprs,
            "meta": self.meta,
        }
        return json.dumps(obj, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Cluster":
        obj = json.loads(line)
        return cls(obj["cluster_id"], obj["seed"], list(obj["exprs"]), dict(obj.get("meta", {})))


@dataclass
class ClusterBuild:
    cluster: Cluster
    saturation_s: float
    enumeration_s: float


def _ordered_insert(rewrites: list[str], item: str, max_count: int) -> None:
    """Insert `item` at its (token count, lexicographic) position, keeping the
    list within max_count by dropping from the tail (never `item` itself)."""
    keys = [(s.count(" "), s) for s in rewrites]
    pos = bisect.bisect_left(keys, (item.count(" "), item))
    rewrites.insert(pos, item)
    while len(rewrites) > max_count:
        drop = len(rewrites) - 1
        if rewrites[drop] == item:
            drop -= 1
        rewrites.pop(drop)


def build_cluster(
    seed: Union[Expr, str],
    rules: Sequence[RewriteRule],
    sat_limits: SaturationLimits = SaturationLimits(),
    enum_limits: EnumerationLimits = EnumerationLimits(),
    rng_seed: int = 0,
    audit: bool = True,
    cluster_id: int = 0,
    rules_name: str = "",
    policy: OraclePolicy = DEFAULT_POLICY,
) -> ClusterBuild:
    """Saturate one seed, enumerate its class, audit, and package a Cluster.

    Saturation/extraction failures are recorded under meta["error"] and yield
    a singleton cluster rather than an exception, so corpus batches never
    abort on one bad seed.  The enumeration budget is whatever the shared
    per-seed budget leaves after saturation.
    """
    seed_expr = parse(seed) if isinstance(seed, str) else seed
    seed_str = to_prefix(seed_expr)
    meta: dict = {"rules": rules_name}
    sat_s = 0.0
    enum_s = 0.0
    rewrites = [seed_str]
    try:
        g = EGraph()
        root = g.add_expression(seed_expr)
        t0 = time.perf_counter()
        report = saturate(g, rules, sat_limits)
        sat_s = time.perf_counter() - t0
        meta.update(
            iterations=report.iterations,
            enodes=report.enodes,
            eclasses=report.eclasses,
            stop_reason=report.stop_reason,
        )
        t1 = time.perf_counter()
        grammar = extract_grammar(g, root)
        remaining = max(1.0, enum_limits.time_budget_s - sat_s)
        result = enumerate_rewrites(
            grammar,
            EnumerationLimits(
                token_limit=enum_limits.token_limit,
                max_rewrites=enum_limits.max_rewrites,
                time_budget_s=remaining,
            ),
        )
        enum_s = time.perf_counter() - t1
        rewrites = list(result.rewrites)
        meta["enum_stop"] = result.stop_reason
        if seed_str not in rewrites:
            _ordered_insert(rewrites, seed_str, enum_limits.max_rewrites)
    except Exception as exc:  # noqa: BLE001 — recorded, never aborts the batch
        meta["error"] = f"{type(exc).__name__}: {exc}"
        rewrites = [seed_str]
    meta["raw_rewrites"] = len(rewrites)
    if audit and "error" not in meta:
        rng = random.Random(rng_seed)
        kept = []
        dropped = []
        for s in rewrites:
            if s == seed_str or confirm_equivalent(seed_expr, parse(s), rng, policy):
                kept.append(s)
            else:
                dropped.append(s)
        meta["audit_dropped"] = len(dropped)
        if dropped:
            meta["dropped_examples"] = dropped[:5]
        rewrites = kept
    cluster = Cluster(cluster_id=cluster_id, seed=seed_str, exprs=rewrites, meta=meta)
    return ClusterBuild(cluster, sat_s, enum_s)


@lru_cache(maxsize=None)
def _rules_cached(source: str) -> tuple[RewriteRule, ...]:
    return tuple(load_library(source))


def _cluster_worker(args: tuple) -> ClusterBuild:
    (idx, seed_str, rules_source, sat_limits, enum_limits, rng_seed, audit) = args
    return build_cluster(
        seed_str,
        _rules_cached(rules_source),
        sat_limits,
        enum_limits,
        rng_seed=rng_seed,
        audit=audit,
        cluster_id=idx,
        rules_name=rules_source,
    )


@dataclass
class CorpusBuild:
    clusters: list[Cluster]
    timing: dict
    errors: int


def dedup_clusters(clusters: Sequence[Cluster]) -> list[Cluster]:
    """Make cluster member sets globally disjoint (first cluster wins).

    Equivalent seeds saturate to overlapping member sets; a shared string
    would leak across a cluster-granular train/test split.  A cluster whose
    seed was already claimed is dropped entirely (it is a semantic duplicate);
    otherwise only the already-seen members are removed.  Surviving clusters
    are renumbered densely.
    """
    seen: set[str] = set()
    out: list[Cluster] = []
    for c in clusters:
        if c.seed in seen:
            continue
        kept = [s for s in c.exprs if s not in seen]
        removed = len(c.exprs) - len(kept)
        meta = dict(c.meta)
        if removed:
            meta["dedup_dropped"] = removed
        seen.update(kept)
        out.append(Cluster(len(out), c.seed, kept, meta))
    return out


def build_corpus(
    seeds: Sequence[Union[Expr, str]],
    rules_source: str,
    sat_limits: SaturationLimits = SaturationLimits(),
    enum_limits: EnumerationLimits = EnumerationLimits(),
    corpus_seed: int = 0,
    jobs: int = 1,
    audit: bool = True,
    dedup: bool = True,
) -> CorpusBuild:
    """Build one cluster per seed (in order); `jobs` > 1 fans out processes."""
    seed_strs = [to_prefix(parse(s)) if isinstance(s, str) else to_prefix(s) for s in seeds]
    tasks = [
        (i, s, rules_source, sat_limits, enum_limits, corpus_seed * SEED_STRIDE + i, audit)
        for i, s in enumerate(seed_strs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            builds = list(pool.map(_cluster_worker, tasks))
    else:
        builds = [_cluster_worker(t) for t in tasks]
    clusters = [b.cluster for b in builds]
    if dedup:
        clusters = dedup_clusters(clusters)
    n = max(1, len(builds))
    timing = {
        "saturation_s_total": sum(b.saturation_s for b in builds),
        "enumeration_s_total": sum(b.enumeration_s for b in builds),
        "saturation_s_mean": sum(b.saturation_s for b in builds) / n,
        "enumeration_s_mean": sum(b.enumeration_s for b in builds) / n,
    }
    errors = sum(1 for c in clusters if "error" in c.meta)
    return CorpusBuild(clusters, timing, errors)


# ---------------------------------------------------------------------------
# Emission and statistics
# ---------------------------------------------------------------------------


def corpus_stats(clusters: Sequence[Cluster]) -> dict:
    """Cluster counts, mean size, and operator histogram over all members."""
    sizes = [len(c.exprs) for c in clusters]
    hist = {name: 0 for name in OPERATORS}
    for c in clusters:
        for s in c.exprs:
            for tok in s.split():
                if tok in hist:
                    hist[tok] += 1
    return {
        "clusters": len(clusters),
        "exprs": sum(sizes),
        "avg_cluster_size": (sum(sizes) / len(sizes)) if sizes else 0.0,
        "min_cluster_size": min(sizes) if sizes else 0,
        "max_cluster_size": max(sizes) if sizes else 0,
        "audit_dropped": sum(c.meta.get("audit_dropped", 0) for c in clusters),
        "errors": sum(1 for c in clusters if "error" in c.meta),
        "operator_histogram": hist,
    }


def write_clusters(clusters: Sequence[Cluster], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in clusters:
            fh.write(c.to_json() + "\n")


def read_clusters(path: Union[str, Path]) -> list[Cluster]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(Cluster.from_json(line))
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusError(f"{path}:{i}: bad cluster record: {exc}") from exc
    return out


def write_manifest(data_path: Union[str, Path], payload: dict) -> Path:
    """Write `<file>.manifest.json` next to a data file and return its path."""
    mpath = Path(str(data_path) + ".manifest.json")
    with open(mpath, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return mpath


def emit_corpus(
    clusters: Sequence[Cluster],
    path: Union[str, Path],
    config: Optional[dict] = None,
    timing: Optional[dict] = None,
) -> dict:
    """Write clusters.jsonl plus its manifest sibling; return the manifest."""
    write_clusters(clusters, path)
    manifest: dict = {"version": __version__, "stats": corpus_stats(clusters)}
    if config is not None:
        manifest["config"] = config
    if timing is not None:
        manifest["timing"] = timing
    write_manifest(path, manifest)
    return manifest


# ---------------------------------------------------------------------------
# Pairs and triplets
# ---------------------------------------------------------------------------


def make_pairs(clusters: Sequence[Cluster]) -> Iterator[tuple[str, str]]:
    """All ordered pairs of distinct members within each cluster: n(n-1) each."""
    for c in clusters:
        yield from itertools.permutations(c.exprs, 2)


def write_pairs(clusters: Sequence[Cluster], path: Union[str, Path]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in make_pairs(clusters):
            fh.write(f"{a}\t{b}\n")
            count += 1
    return count


def make_triplets(
    clusters: Sequence[Cluster], rng_seed: int, count: int
) -> list[tuple[str, str, str]]:
    """(anchor, positive, negative): same-cluster positives, foreign negatives."""
    donors = [c for c in clusters if len(c.exprs) >= 2]
    if not donors or len(clusters) < 2:
        raise InsufficientClusters(
            "triplets need >= 2 clusters and >= 1 cluster with >= 2 members"
        )
    rng = random.Random(rng_seed)
    out = []
    for _ in range(count):
        c = donors[rng.randrange(len(donors))]
        anchor, positive = rng.sample(c.exprs, 2)
        while True:
            other = clusters[rng.randrange(len(clusters))]
            if other.cluster_id != c.cluster_id and other.exprs:
                break
        negative = other.exprs[rng.randrange(len(other.exprs))]
        out.append((anchor, positive, negative))
    return out


def write_triplets(triplets: Sequence[tuple[str, str, str]], path: Union[str, Path]) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a, p, n in triplets:
            fh.write(f"{a}\t{p}\t{n}\n")
    return len(triplets)


# ---------------------------------------------------------------------------
# Derivations
# ---------------------------------------------------------------------------


@dataclass
class Derivation:
    id: int
    steps: list[str]
    mistakes: list[int]  # index k flags the transition steps[k-1] -> steps[k]

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "steps": self.steps, "mistakes": self.mistakes},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "Derivation":
        obj = json.loads(line)
        return cls(obj["id"], list(obj["steps"]), list(obj["mistakes"]))


#: Derivation steps larger than this are not worth chaining further.
MAX_STEP_TOKENS = 40


def applicable_rewrites(
    e: Expr, rules: Sequence[RewriteRule], max_tokens: int = MAX_STEP_TOKENS
) -> list[tuple[int, str, Expr]]:
    """All (site index, rule name, result) single-rule rewrites of `e`."""
    out = []
    for i, sub in enumerate(subexpressions(e)):
        for rule in rules:
            binds = match_expr(rule.lhs, sub)
            if binds is None:
                continue
            candidate = replace_subexpression(e, i, instantiate(rule.rhs, binds))
            if candidate != e and token_count(candidate) <= max_tokens:
                out.append((i, rule.name, candidate))
    return out


@dataclass
class DerivationBatch:
    derivations: list[Derivation]
    skipped: int


def generate_derivations(
    clusters: Sequence[Cluster],
    rules: Sequence[RewriteRule],
    rng_seed: int = 0,
    steps_range: tuple[int, int] = (4, 8),
    mistake_prob: float = 0.2,
    limit: Optional[int] = None,
    policy: OraclePolicy = DEFAULT_POLICY,
) -> DerivationBatch:
    """One derivation chain per cluster seed, with oracle-verified transitions.

    Each correct transition applies one applicable rule at one subterm, chosen
    at random and confirmed equivalent; with probability `mistake_prob` the
    step is instead a mutation confirmed non-equivalent (resampled up to 10
    times, falling back to a correct step when mutation cannot break
    equivalence).  A chain that dead-ends early is kept at its achieved
    length; seeds where no verified first step exists are skipped.
    """
    if not rules:
        raise NoApplicableRule("empty rule list")
    rng = random.Random(rng_seed)
    selected = clusters if limit is None else clusters[:limit]
    derivations: list[Derivation] = []
    skipped = 0
    for c in selected:
        cur = parse(c.seed)
        steps = [c.seed]
        mistakes: list[int] = []
        n_steps = rng.randint(*steps_range)
        for k in range(1, n_steps + 1):
            nxt: Optional[Expr] = None
            is_mistake = False
            if rng.random() < mistake_prob:
                for _ in range(10):
                    try:
                        cand = mutate(cur, rng)
                    except NoMutableSite:
                        break
                    if confirm_different(cur, cand, rng, policy):
                        nxt, is_mistake = cand, True
                        break
            if nxt is None:
                options = applicable_rewrites(cur, rules)
                order = list(range(len(options)))
                rng.shuffle(order)
                # visit new expressions first so chains don't ping-pong
                seen_steps = set(steps)
                order.sort(key=lambda i: to_prefix(options[i][2]) in seen_steps)
                for i in order[:25]:
                    _, _, cand = options[i]
                    if confirm_equivalent(cur, cand, rng, policy):
                        nxt = cand
                        break
            if nxt is None:
                break
            cur = nxt
            steps.append(to_prefix(cur))
            if is_mistake:
                mistakes.append(k)
        if len(steps) < 2:
            skipped += 1
            continue
        derivations.append(Derivation(len(derivations), steps, mistakes))
    return DerivationBatch(derivations, skipped)


def write_derivations(derivations: Sequence[Derivation], path: Union[str, Path]) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in derivations:
            fh.write(d.to_json() + "\n")
    return len(derivations)


def read_derivations(path: Union[str, Path]) -> list[Derivation]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(Derivation.from_json(line))
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusError(f"{path}:{i}: bad derivation record: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Selection tests
# ---------------------------------------------------------------------------


@dataclass
class SelectionTest:
    query: str
    candidates: list[str]  # exactly 7, shuffled
    answer: int  # index of the equivalent candidate

    def to_json(self) -> str:
        return json.dumps(
            {"query": self.query, "candidates": self.candidates, "answer": self.answer},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "SelectionTest":
        obj = json.loads(line)
        return cls(obj["query"], list(obj["candidates"]), obj["answer"])


def make_selection_tests(
    clusters: Sequence[Cluster],
    rng_seed: int = 0,
    count: int = 10,
    policy: OraclePolicy = DEFAULT_POLICY,
) -> list[SelectionTest]:
    """7-way multiple choice: 1 equivalent answer + 3 query-derived and
    3 answer-derived single-node mutations, each verified non-equivalent."""
    eligible = [c for c in clusters if len(set(c.exprs)) >= 2]
    if not eligible:
        raise ClusterTooSmall("no cluster has two distinct members")
    rng = random.Random(rng_seed)
    tests: list[SelectionTest] = []
    attempts = 0
    while len(tests) < count and attempts < count * 50:
        attempts += 1
        c = eligible[rng.randrange(len(eligible))]
        query, answer = rng.sample(c.exprs, 2)
        if query == answer:
            continue
        query_expr, answer_expr = parse(query), parse(answer)
        distractors: list[str] = []
        ok = True
        for parent in (query_expr, query_expr, query_expr, answer_expr, answer_expr, answer_expr):
            found = None
            for _ in range(10):
                try:
                    cand = mutate(parent, rng)
                except NoMutableSite:
                    break
                s = to_prefix(cand)
                if s == query or s == answer or s in distractors:
                    continue
                if confirm_different(query_expr, cand, rng, policy):
                    found = s
                    break
            if found is None:
                ok = False
                break
            distractors.append(found)
        if not ok:
            continue
        candidates = [answer] + distractors
        rng.shuffle(candidates)
        tests.append(SelectionTest(query, candidates, candidates.index(answer)))
    if len(tests) < count:
        raise ClusterTooSmall(f"could only construct {len(tests)} of {count} tests")
    return tests


def write_selection_tests(tests: Sequence[SelectionTest], path: Union[str, Path]) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tests:
            fh.write(t.to_json() + "\n")
    return len(tests)


def read_selection_tests(path: Union[str, Path]) -> list[SelectionTest]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(SelectionTest.from_json(line))
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusError(f"{path}:{i}: bad selection record: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Split and verification
# ---------------------------------------------------------------------------


def split_train_test(
    clusters: Sequence[Cluster], test_fraction: float, rng_seed: int = 0
) -> tuple[list[Cluster], list[Cluster]]:
    """Cluster-granular split: no expression can appear on both sides."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    if len(clusters) < 2:
        raise InsufficientClusters("need >= 2 clusters to split")
    rng = random.Random(rng_seed)
    order = list(range(len(clusters)))
    rng.shuffle(order)
    n_test = min(len(clusters) - 1, max(1, round(len(clusters) * test_fraction)))
    test_idx = set(order[:n_test])
    train = [c for i, c in enumerate(clusters) if i not in test_idx]
    test = [c for i, c in enumerate(clusters) if i in test_idx]
    return train, test


def verify_clusters(
    clusters: Sequence[Cluster],
    rng_seed: int = 0,
    policy: OraclePolicy = DEFAULT_POLICY,
) -> dict:
    """Independent numeric re-audit of every member against its cluster seed."""
    failures: list[dict] = []
    total = 0
    for c in clusters:
        seed_expr = parse(c.seed)
        rng = random.Random(rng_seed * SEED_STRIDE + c.cluster_id)
        for s in c.exprs:
            total += 1
            if s == c.seed:
                continue
            if not confirm_equivalent(seed_expr, parse(s), rng, policy):
                failures.append({"cluster_id": c.cluster_id, "expr": s})
    return {
        "clusters": len(clusters),
        "exprs": total,
        "failures": failures,
        "pass_rate": 1.0 if total == 0 else (total - len(failures)) / total,
    }
