"""Embedding-space evaluation: clustering, retrieval, mistake detection,
and embedding algebra over expression → vector tables.

Cosine similarity and the mistake threshold are computed in plain sequential
Python arithmetic so results are bit-for-bit reproducible against a
straightforward re-implementation.  K-means uses numpy internally but is
fully deterministic under its seed.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .corpus import Derivation


class EvalError(ValueError):
    pass


class DimensionMismatch(EvalError):
    pass


class MalformedLine(EvalError):
    pass


class NonFiniteComponent(EvalError):
    pass


class ZeroVector(EvalError):
    pass


class KTooLarge(EvalError):
    pass


class MissingEmbedding(EvalError):
    pass


class AllDerivationsSkipped(EvalError):
    pass


class EmptyCandidatePool(EvalError):
    pass


class DimensionTooSmall(EvalError):
    pass


Vector = tuple[float, ...]


# ---------------------------------------------------------------------------
# Embedding tables
# ---------------------------------------------------------------------------


class EmbeddingTable:
    """Ordered mapping from prefix-expression strings to fixed-dim vectors."""

    def __init__(self, dimension: int) -> None:
        if dimension < 1:
            raise DimensionMismatch("dimension must be >= 1")
        self.dimension = dimension
        self._vectors: dict[str, Vector] = {}

    def add(self, expr: str, vector: Sequence[float]) -> None:
        vec = tuple(float(v) for v in vector)
        if len(vec) != self.dimension:
            raise DimensionMismatch(
                f"vector for {expr!r} has {len(vec)} components, want {self.dimension}"
            )
        if any(not math.isfinite(v) for v in vec):
            raise NonFiniteComponent(f"non-finite component in vector for {expr!r}")
        self._vectors[expr] = vec

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, expr: str) -> bool:
        return expr in self._vectors

    def __getitem__(self, expr: str) -> Vector:
        try:
            return self._vectors[expr]
        except KeyError:
            raise MissingEmbedding(f"no embedding for {expr!r}") from None

    def keys(self) -> list[str]:
        return list(self._vectors)

    def items(self) -> list[tuple[str, Vector]]:
        return list(self._vectors.items())

    def save(self, path: Union[str, Path]) -> None:
        """`expr<TAB>v1,v2,...` per line; shortest-round-trip float formatting."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for expr, vec in self._vectors.items():
                fh.write(expr + "\t" + ",".join(repr(v) for v in vec) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EmbeddingTable":
        table: Optional[EmbeddingTable] = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line:
                    continue
                expr, tab, packed = line.partition("\t")
                if not tab or not expr:
                    raise MalformedLine(f"{path}:{lineno}: expected 'expr<TAB>v1,v2,...'")
                try:
                    vec = [float(tok) for tok in packed.split(",")]
                except ValueError as exc:
                    raise MalformedLine(f"{path}:{lineno}: {exc}") from exc
                if any(not math.isfinite(v) for v in vec):
                    raise NonFiniteComponent(f"{path}:{lineno}: non-finite component")
                if table is None:
                    table = cls(len(vec))
                if len(vec) != table.dimension:
                    raise DimensionMismatch(
                        f"{path}:{lineno}: {len(vec)} components, want {table.dimension}"
                    )
                table._vectors[expr] = tuple(vec)
        if table is None:
            raise MalformedLine(f"{path}: empty embedding file")
        return table


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """u.v / (|u||v|), plain sequential arithmetic."""
    if len(u) != len(v):
        raise DimensionMismatch(f"dimension {len(u)} vs {len(v)}")
    dot = 0.0
    uu = 0.0
    vv = 0.0
    for a, b in zip(u, v):
        dot += a * b
        uu += a * a
        vv += b * b
    if uu == 0.0 or vv == 0.0:
        raise ZeroVector("cosine similarity undefined for the zero vector")
    return dot / math.sqrt(uu * vv)


# ---------------------------------------------------------------------------
# K-means clustering
# ---------------------------------------------------------------------------


def kmeans(
    table: EmbeddingTable, k: int, seed: int = 0, max_iters: int = 300
) -> dict[str, int]:
    """Lloyd's algorithm with k-means++ seeding; deterministic under seed."""
    n = len(table)
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} outside 1..{n}")
    exprs = table.keys()
    X = np.array([table[e] for e in exprs], dtype=np.float64)
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(n)]
    d2 = np.sum((X - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centroids[j]) ** 2, axis=1))

    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        dists = np.sum((X[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_assign = np.argmin(dists, axis=1)
        # re-seat empty clusters on the currently worst-fit points
        point_d = dists[np.arange(n), new_assign]
        for j in range(k):
            if not np.any(new_assign == j):
                idx = int(np.argmax(point_d))
                centroids[j] = X[idx]
                new_assign[idx] = j
                point_d[idx] = -1.0
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = X[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
    return {e: int(a) for e, a in zip(exprs, assign)}


def _member_lists(clusters: Iterable) -> list[list[str]]:
    """Accept Cluster-like objects (with .exprs) or plain string collections."""
    out = []
    for c in clusters:
        members = list(getattr(c, "exprs", c))
        out.append(members)
    return out


def clustering_accuracy(
    predicted: Mapping[str, int],
    truth_clusters: Iterable,
    weighted: bool = False,
) -> float:
    """Majority-vote label mapping, then per-cluster accuracy.

    Each predicted label maps to the ground-truth cluster contributing most of
    its members (ties: lowest cluster index).  acc_i is the fraction of
    cluster i's members whose mapped label is i; the result is the unweighted
    mean of acc_i, or the member-weighted mean when `weighted` is set.
    """
    truth = _member_lists(truth_clusters)
    votes: dict[int, dict[int, int]] = {}
    for ti, members in enumerate(truth):
        for m in members:
            if m not in predicted:
                raise MissingEmbedding(f"no predicted label for {m!r}")
            tally = votes.setdefault(predicted[m], {})
            tally[ti] = tally.get(ti, 0) + 1
    mapping = {
        label: min(tally, key=lambda ti: (-tally[ti], ti)) for label, tally in votes.items()
    }
    accs = []
    sizes = []
    for ti, members in enumerate(truth):
        hit = sum(1 for m in members if mapping[predicted[m]] == ti)
        accs.append(hit / len(members) if members else 0.0)
        sizes.append(len(members))
    if not accs:
        return 0.0
    if weighted:
        total = sum(sizes)
        return sum(a * s for a, s in zip(accs, sizes)) / total if total else 0.0
    return sum(accs) / len(accs)


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------


def retrieve_topk(
    query: Union[str, Sequence[float]],
    table: EmbeddingTable,
    k: int,
) -> list[tuple[str, float]]:
    """Top-k table entries by cosine similarity, excluding the query entry;
    ties broken by ascending expression string."""
    if isinstance(query, str):
        qvec = table[query]
        exclude = query
    else:
        qvec = tuple(float(v) for v in query)
        exclude = None
    pool = [e for e in table.keys() if e != exclude]
    if k < 1 or k > len(pool):
        raise KTooLarge(f"k={k} outside 1..{len(pool)}")
    scored = [(e, cosine_similarity(qvec, table[e])) for e in pool]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def retrieval_accuracy(table: EmbeddingTable, truth_clusters: Iterable, k: int) -> float:
    """Mean over queries of the top-k fraction sharing the query's cluster."""
    truth = _member_lists(truth_clusters)
    cluster_of: dict[str, int] = {}
    for ti, members in enumerate(truth):
        for m in members:
            cluster_of[m] = ti
    fractions = []
    for expr, ti in cluster_of.items():
        hits = retrieve_topk(expr, table, k)
        same = sum(1 for e, _ in hits if cluster_of.get(e) == ti)
        fractions.append(same / k)
    if not fractions:
        return 0.0
    return sum(fractions) / len(fractions)


# ---------------------------------------------------------------------------
# Mistake detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MistakeThreshold:
    t: float
    derivations_used: int = 0
    derivations_skipped: int = 0


def _transition_sims(d: Derivation, table: EmbeddingTable) -> list[float]:
    return [
        cosine_similarity(table[d.steps[i - 1]], table[d.steps[i]])
        for i in range(1, len(d.steps))
    ]


def compute_threshold(
    derivations: Sequence[Derivation], table: EmbeddingTable
) -> MistakeThreshold:
    """Mean over derivations of the minimum correct-transition similarity.

    Transitions at recorded mistake indices are excluded; derivations left
    with no correct transition are skipped (and counted).
    """
    minima = []
    skipped = 0
    for d in derivations:
        sims = _transition_sims(d, table)
        bad = set(d.mistakes)
        correct = [s for i, s in enumerate(sims, start=1) if i not in bad]
        if not correct:
            skipped += 1
            continue
        minima.append(min(correct))
    if not minima:
        raise AllDerivationsSkipped("every derivation lacked a correct transition")
    t = sum(minima) / len(minima)
    return MistakeThreshold(t, derivations_used=len(minima), derivations_skipped=skipped)


def detect_mistakes(
    d: Derivation, table: EmbeddingTable, threshold: Union[float, MistakeThreshold]
) -> list[int]:
    """Transition indices whose similarity falls strictly below the threshold."""
    t = threshold.t if isinstance(threshold, MistakeThreshold) else float(threshold)
    sims = _transition_sims(d, table)
    return [i for i, s in enumerate(sims, start=1) if s < t]


def _prf(tp: int, fp: int, fn: int) -> dict[str, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def mistake_detection_report(
    derivations: Sequence[Derivation],
    table: EmbeddingTable,
    threshold: Union[float, MistakeThreshold],
) -> dict:
    """Precision/recall/F1 for both the mistake and the no-mistake class."""
    tp = fp = fn = tn = 0
    for d in derivations:
        flagged = set(detect_mistakes(d, table, threshold))
        actual = set(d.mistakes)
        for i in range(1, len(d.steps)):
            if i in flagged and i in actual:
                tp += 1
            elif i in flagged:
                fp += 1
            elif i in actual:
                fn += 1
            else:
                tn += 1
    t = threshold.t if isinstance(threshold, MistakeThreshold) else float(threshold)
    return {
        "threshold": t,
        "transitions": tp + fp + fn + tn,
        "mistake": {**_prf(tp, fp, fn), "support": tp + fn},
        "no_mistake": {**_prf(tn, fn, fp), "support": tn + fp},
    }


# ---------------------------------------------------------------------------
# Embedding algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraTest:
    """Analogy x1 : y1 :: x2 : y_gt, solved by nearest neighbor to
    -v(x1) + v(y1) + v(x2) over the table minus the exclusion set."""

    x1: str
    y1: str
    x2: str
    y_gt: str
    exclusion: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "x1": self.x1,
                "y1": self.y1,
                "x2": self.x2,
                "y_gt": self.y_gt,
                "exclude": list(self.exclusion),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "AlgebraTest":
        obj = json.loads(line)
        return cls(
            obj["x1"], obj["y1"], obj["x2"], obj["y_gt"], tuple(obj.get("exclude", ()))
        )


def embedding_algebra(test: AlgebraTest, table: EmbeddingTable) -> str:
    """Predicted completion: cosine-argmax candidate, lexicographic tiebreak."""
    v1, w1, v2 = table[test.x1], table[test.y1], table[test.x2]
    target = tuple(-a + b + c for a, b, c in zip(v1, w1, v2))
    banned = set(test.exclusion) | {test.x1, test.y1, test.x2}
    pool = [e for e in table.keys() if e not in banned]
    if not pool:
        raise EmptyCandidatePool("every table entry is excluded")
    best = None
    best_key = None
    for e in pool:
        key = (-cosine_similarity(target, table[e]), e)
        if best_key is None or key < best_key:
            best, best_key = e, key
    return best


def algebra_accuracy(tests: Sequence[AlgebraTest], table: EmbeddingTable) -> float:
    if not tests:
        return 0.0
    hits = sum(1 for t in tests if embedding_algebra(t, table) == t.y_gt)
    return hits / len(tests)


def write_algebra_tests(tests: Sequence[AlgebraTest], path: Union[str, Path]) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tests:
            fh.write(t.to_json() + "\n")
    return len(tests)


def read_algebra_tests(path: Union[str, Path]) -> list[AlgebraTest]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(AlgebraTest.from_json(line))
            except (json.JSONDecodeError, KeyError) as exc:
                raise EvalError(f"{path}:{i}: bad algebra record: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Synthetic oracle embeddings and derived test sets
# ---------------------------------------------------------------------------


def synthetic_oracle_embeddings(
    clusters: Iterable,
    dimension: int,
    noise_sigma: float = 0.01,
    seed: int = 0,
) -> EmbeddingTable:
    """Idealized embeddings: cluster i's members sit on unit basis vector i
    plus gaussian noise, renormalized — inter-cluster cosine ≈ 0, intra ≈ 1."""
    lists = _member_lists(clusters)
    if dimension < len(lists):
        raise DimensionTooSmall(
            f"dimension {dimension} < {len(lists)} clusters (orthogonal construction)"
        )
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dimension)
    for ci, members in enumerate(lists):
        centroid = np.zeros(dimension)
        centroid[ci] = 1.0
        for m in members:
            while True:
                vec = centroid + rng.normal(0.0, noise_sigma, dimension)
                norm = float(np.linalg.norm(vec))
                if norm > 1e-9:
                    break
            table.add(m, (vec / norm).tolist())
    return table


def make_synthetic_algebra_tests(
    clusters: Iterable, rng_seed: int = 0, count: int = 20
) -> list[AlgebraTest]:
    """Analogies that hold exactly in the synthetic space: x1,y1 share one
    cluster (their difference vanishes), x2,y_gt share another; the exclusion
    set is x2's cluster minus the answer, making y_gt the unique optimum."""
    lists = [ms for ms in _member_lists(clusters) if len(ms) >= 2]
    if len(lists) < 2:
        raise EvalError("need >= 2 clusters with >= 2 members")
    rng = random.Random(rng_seed)
    tests = []
    for _ in range(count):
        ca, cb = rng.sample(range(len(lists)), 2)
        x1, y1 = rng.sample(lists[ca], 2)
        x2, y_gt = rng.sample(lists[cb], 2)
        exclusion = tuple(s for s in lists[cb] if s != y_gt)
        tests.append(AlgebraTest(x1, y1, x2, y_gt, exclusion))
    return tests


def make_synthetic_mistake_derivations(
    clusters: Iterable,
    table: EmbeddingTable,
    rng_seed: int = 0,
    count: int = 50,
    steps_range: tuple[int, int] = (4, 8),
    mistake_prob: float = 0.2,
    min_correct_sim: Optional[float] = None,
) -> list[Derivation]:
    """Derivations over cluster members: correct transitions stay within the
    current cluster, mistake transitions jump to another cluster (and the
    chain continues there, as a wrong-but-consistent derivation would).

    `min_correct_sim` restricts correct transitions to pairs whose similarity
    exceeds it — used to evaluate detection with a threshold calibrated on a
    separate batch, so threshold noise cannot flag correct steps.
    """
    lists = [ms for ms in _member_lists(clusters) if len(ms) >= 2]
    if len(lists) < 2:
        raise EvalError("need >= 2 clusters with >= 2 members")
    rng = random.Random(rng_seed)
    out = []
    for di in range(count):
        ci = rng.randrange(len(lists))
        cur = lists[ci][rng.randrange(len(lists[ci]))]
        steps = [cur]
        mistakes: list[int] = []
        n_steps = rng.randint(*steps_range)
        for k in range(1, n_steps + 1):
            # first transition is always correct so the threshold is computable
            if k > 1 and rng.random() < mistake_prob:
                cj = rng.randrange(len(lists) - 1)
                if cj >= ci:
                    cj += 1
                ci = cj
                cur = lists[ci][rng.randrange(len(lists[ci]))]
                mistakes.append(k)
            else:
                mates = [m for m in lists[ci] if m != cur]
                if min_correct_sim is not None:
                    high = [
                        m
                        for m in mates
                        if cosine_similarity(table[cur], table[m]) > min_correct_sim
                    ]
                    mates = high or [
                        max(mates, key=lambda m: cosine_similarity(table[cur], table[m]))
                    ]
                cur = mates[rng.randrange(len(mates))]
            steps.append(cur)
        out.append(Derivation(di, steps, mistakes))
    return out
