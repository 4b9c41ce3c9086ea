"""E-graphs: equivalence classes of expression nodes with congruence closure.

An e-node is a tuple (head, child_class, ...) where head is an operator token
or a leaf token ("x", "8", "pi") and the children are e-class ids.  E-class
ids are canonicalized through a union-find; hash-consing maps each canonical
e-node to its class so structurally identical nodes are stored once.

Saturation applies a rule set in match-then-apply batches: every rule is
matched against the pre-iteration graph, then all right-hand sides are
instantiated and unioned, then congruence is restored by a single rebuild.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

from .exprs import Const, Expr, Int, Op, Var
from .rules import Pattern, PatternVar, RewriteRule

ENode = tuple  # (head, *child_ids)


class EGraphError(ValueError):
    pass


class NodeLimitExceeded(EGraphError):
    pass


def leaf_head(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Int):
        return str(e.value)
    if isinstance(e, Const):
        return e.name
    raise TypeError(f"not a leaf: {e!r}")


class EGraph:
    """E-classes of e-nodes under union-find with deferred congruence repair.

    Class node sets are kept as insertion-ordered dicts so every traversal
    order is deterministic across runs regardless of hash randomization.
    """

    def __init__(self, max_nodes: Optional[int] = None) -> None:
        self._parent: list[int] = []
        self._rank: list[int] = []
        self.classes: dict[int, dict[ENode, None]] = {}
        self.hashcons: dict[ENode, int] = {}
        self.dirty = False
        self.max_nodes = max_nodes
        self.created = 0  # monotone count of e-nodes ever created
        self.unions = 0  # monotone count of effective unions

    # -- union-find -------------------------------------------------------

    def find(self, cid: int) -> int:
        parent = self._parent
        while parent[cid] != cid:
            parent[cid] = parent[parent[cid]]
            cid = parent[cid]
        return cid

    def _fresh_class(self) -> int:
        cid = len(self._parent)
        self._parent.append(cid)
        self._rank.append(0)
        return cid

    def union(self, a: int, b: int) -> int:
        """Merge two e-classes; the rank winner keeps its id."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        elif self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._parent[rb] = ra
        self.classes[ra].update(self.classes.pop(rb))
        self.unions += 1
        self.dirty = True
        return ra

    # -- nodes ------------------------------------------------------------

    def _canon(self, node: ENode) -> ENode:
        if len(node) == 1:
            return node
        return (node[0],) + tuple(self.find(c) for c in node[1:])

    def add_enode(self, head: str, children: Sequence[int] = ()) -> int:
        node = (head,) + tuple(self.find(c) for c in children)
        hit = self.hashcons.get(node)
        if hit is not None:
            return self.find(hit)
        if self.max_nodes is not None and len(self.hashcons) >= self.max_nodes:
            raise NodeLimitExceeded(f"e-node limit {self.max_nodes} reached")
        cid = self._fresh_class()
        self.classes[cid] = {node: None}
        self.hashcons[node] = cid
        self.created += 1
        return cid

    def add_expression(self, e: Expr) -> int:
        if isinstance(e, Op):
            children = [self.add_expression(a) for a in e.args]
            return self.add_enode(e.op, children)
        return self.add_enode(leaf_head(e))

    @property
    def num_enodes(self) -> int:
        return len(self.hashcons)

    @property
    def num_eclasses(self) -> int:
        return len(self.classes)

    def enodes(self) -> Iterator[tuple[int, ENode]]:
        for cid, nodes in self.classes.items():
            for node in nodes:
                yield cid, node

    # -- congruence -------------------------------------------------------

    def rebuild(self) -> None:
        """Restore hash-consing and congruence after unions.

        Repeats whole-graph passes until a pass performs no union: simple,
        visibly correct, and fast enough at corpus scale.
        """
        if not self.dirty:
            return
        while True:
            changed = False
            seen: dict[ENode, int] = {}
            for cid in list(self.classes.keys()):
                if self.find(cid) != cid:
                    continue  # merged away earlier in this pass
                nodes = {self._canon(n): None for n in self.classes[cid]}
                self.classes[cid] = nodes
                # snapshot: union() below may merge nodes into this very dict
                for node in list(nodes):
                    other = seen.get(node)
                    if other is None:
                        seen[node] = cid
                    elif self.find(other) != self.find(cid):
                        self.union(other, cid)
                        changed = True
            if not changed:
                break
        self.hashcons = {}
        for cid, nodes in self.classes.items():
            canon_nodes = {self._canon(n): None for n in nodes}
            self.classes[cid] = canon_nodes
            for node in canon_nodes:
                self.hashcons[node] = cid
        self.dirty = False

    def audit(self) -> None:
        """O(n^2) structural audit used by tests; raises on any violation."""
        assert not self.dirty, "audit requires a rebuilt graph"
        all_nodes = []
        for cid, nodes in self.classes.items():
            assert self.find(cid) == cid, f"class {cid} is not canonical"
            for node in nodes:
                assert self._canon(node) == node, f"stale node {node} in e{cid}"
                for child in node[1:]:
                    assert self.find(child) in self.classes, f"dangling child in {node}"
                all_nodes.append((cid, node))
        # hash-consing: a canonical node appears in exactly one class
        for i, (ca, na) in enumerate(all_nodes):
            assert na in self.hashcons, f"node {na} missing from hashcons"
            assert self.find(self.hashcons[na]) == ca, f"hashcons points {na} elsewhere"
            for cb, nb in all_nodes[i + 1 :]:
                if na == nb:
                    assert ca == cb, f"node {na} appears in e{ca} and e{cb}"
        # congruence: same head and find-equal children => same class
        for i, (ca, na) in enumerate(all_nodes):
            for cb, nb in all_nodes[i + 1 :]:
                if na[0] == nb[0] and len(na) == len(nb):
                    if all(self.find(x) == self.find(y) for x, y in zip(na[1:], nb[1:])):
                        assert ca == cb, f"congruence violation: {na} vs {nb}"

    def dump(self) -> str:
        """One line per e-class: 'e<k>: [node, ...]', classes by canonical id,
        nodes lexicographically."""
        lines = []
        for cid in sorted(self.classes):
            reprs = sorted(_node_repr(n) for n in self.classes[cid])
            lines.append(f"e{cid}: [{', '.join(reprs)}]")
        return "\n".join(lines)

    # -- e-matching ---------------------------------------------------------

    def ematch(self, pattern: Pattern) -> list[tuple[int, dict[str, int]]]:
        """All (e-class, bindings) pairs where pattern matches some node.

        Bindings map pattern-variable names to canonical e-class ids; a
        variable used twice must bind find-equal classes.
        """
        self.rebuild()
        out: list[tuple[int, dict[str, int]]] = []
        for cid in self.classes:
            for binds in self._match_class(pattern, cid, {}):
                out.append((cid, binds))
        return out

    def _match_class(self, p: Pattern, cid: int, binds: dict[str, int]) -> Iterator[dict[str, int]]:
        if isinstance(p, PatternVar):
            bound = binds.get(p.name)
            root = self.find(cid)
            if bound is None:
                new = dict(binds)
                new[p.name] = root
                yield new
            elif bound == root:
                yield binds
            return
        if isinstance(p, Op):
            want_len = len(p.args) + 1
            for node in self.classes[cid]:
                if node[0] == p.op and len(node) == want_len:
                    yield from self._match_args(p.args, node[1:], 0, binds)
            return
        if (leaf_head(p),) in self.classes[cid]:
            yield binds

    def _match_args(
        self,
        patterns: tuple,
        children: tuple,
        i: int,
        binds: dict[str, int],
    ) -> Iterator[dict[str, int]]:
        if i == len(patterns):
            yield binds
            return
        for extended in self._match_class(patterns[i], children[i], binds):
            yield from self._match_args(patterns, children, i + 1, extended)


def _node_repr(node: ENode) -> str:
    if len(node) == 1:
        return node[0]
    return f"{node[0]}({','.join(f'e{c}' for c in node[1:])})"


def add_pattern(g: EGraph, p: Pattern, binds: dict[str, int]) -> int:
    """Instantiate a pattern into the graph under class-id bindings."""
    if isinstance(p, PatternVar):
        return g.find(binds[p.name])
    if isinstance(p, Op):
        children = [add_pattern(g, a, binds) for a in p.args]
        return g.add_enode(p.op, children)
    return g.add_enode(leaf_head(p))


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SaturationLimits:
    max_iterations: int = 30
    max_enodes: int = 50_000
    time_budget_s: float = 600.0


@dataclass
class SaturationReport:
    iterations: int
    enodes: int
    eclasses: int
    stop_reason: str  # saturated | iter-limit | node-limit | time-limit
    rule_counts: dict[str, int]
    elapsed_s: float

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "iterations": self.iterations,
            "enodes": self.enodes,
            "eclasses": self.eclasses,
            "stop_reason": self.stop_reason,
            "rule_counts": dict(self.rule_counts),
        }
        if include_timing:
            out["elapsed_s"] = self.elapsed_s
        return out


def saturate(
    g: EGraph,
    rules: Sequence[RewriteRule],
    limits: Optional[SaturationLimits] = None,
) -> SaturationReport:
    """Run match-then-apply iterations until saturation or a limit.

    Within an iteration every rule is matched against the same pre-iteration
    graph, then all matches are instantiated.  The node limit is checked
    between rule batches, so the final graph may overshoot by at most one
    batch.  Rule counts tally instantiated matches.
    """
    limits = limits or SaturationLimits()
    t0 = time.perf_counter()
    g.rebuild()
    rule_counts = {r.name: 0 for r in rules}
    stop = "iter-limit"
    iterations = 0
    while iterations < limits.max_iterations:
        if time.perf_counter() - t0 > limits.time_budget_s:
            stop = "time-limit"
            break
        matches = [(rule, g.ematch(rule.lhs)) for rule in rules]
        created_before = g.created
        unions_before = g.unions
        limited = False
        for rule, found in matches:
            for cid, binds in found:
                rid = add_pattern(g, rule.rhs, binds)
                rule_counts[rule.name] += 1
                if g.find(rid) != g.find(cid):
                    g.union(rid, cid)
            if g.num_enodes > limits.max_enodes:
                limited = True
                break
            if time.perf_counter() - t0 > limits.time_budget_s:
                stop = "time-limit"
                limited = True
                break
        g.rebuild()
        iterations += 1
        if limited:
            if stop != "time-limit":
                stop = "node-limit"
            break
        if g.created == created_before and g.unions == unions_before:
            stop = "saturated"
            break
    return SaturationReport(
        iterations=iterations,
        enodes=g.num_enodes,
        eclasses=g.num_eclasses,
        stop_reason=stop,
        rule_counts=rule_counts,
        elapsed_s=time.perf_counter() - t0,
    )
