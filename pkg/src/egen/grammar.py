"""Grammar extraction from e-graphs and ordered enumeration of rewrites.

Every e-class reachable from the root becomes a nonterminal; every e-node in
it becomes a production emitting the node's head token followed by the
expansions of its child classes.  Enumeration lists complete prefix-notation
token strings ordered by (token count, lexicographic), which makes output
deterministic and cheap to truncate.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Optional

from .egraph import EGraph


class GrammarError(ValueError):
    pass


class EmptyClass(GrammarError):
    """An e-class with no e-nodes reached extraction — a corrupted graph."""


@dataclass(frozen=True)
class Production:
    """One e-node viewed as a grammar production: emit symbol, expand children."""

    symbol: str
    children: tuple[int, ...] = ()


@dataclass
class Grammar:
    """Context-free grammar whose nonterminals are e-class ids."""

    root: int
    productions: dict[int, list[Production]]

    def nonterminals(self) -> list[int]:
        return list(self.productions)

    def size(self) -> int:
        return sum(len(ps) for ps in self.productions.values())

    def dump(self) -> str:
        """One `e<k> -> alt | alt` line per nonterminal, root first (BFS order)."""
        lines = []
        for cid, prods in self.productions.items():
            alts = " | ".join(
                " ".join((p.symbol,) + tuple(f"e{c}" for c in p.children)) for p in prods
            )
            lines.append(f"e{cid} -> {alts}")
        return "\n".join(lines)


def extract_grammar(g: EGraph, root: int) -> Grammar:
    """Extract the grammar of everything equivalent to `root`'s e-class.

    Nonterminals are visited breadth-first from the root; productions within
    a class are ordered leaves-first, then by symbol, then by child ids, so
    extraction is independent of e-graph insertion history.
    """
    g.rebuild()
    start = g.find(root)
    productions: dict[int, list[Production]] = {}
    queue = [start]
    while queue:
        cid = queue.pop(0)
        if cid in productions:
            continue
        if not g.classes.get(cid):
            raise EmptyClass(f"e-class e{cid} has no e-nodes")
        prods = sorted(
            (Production(node[0], node[1:]) for node in g.classes[cid]),
            key=lambda p: (1 if p.children else 0, p.symbol, p.children),
        )
        productions[cid] = prods
        for p in prods:
            for child in p.children:
                if child not in productions:
                    queue.append(child)
    return Grammar(root=start, productions=productions)


def min_token_counts(grammar: Grammar) -> dict[int, float]:
    """Fewest tokens derivable from each nonterminal (inf if none terminates).

    Computed by relaxing `mt[c] = min over productions of 1 + sum mt[child]`
    to a fixpoint; e-graph cycles make classes self-referential, so plain
    recursion would not terminate.
    """
    mt: dict[int, float] = {cid: math.inf for cid in grammar.productions}
    changed = True
    while changed:
        changed = False
        for cid, prods in grammar.productions.items():
            for p in prods:
                cost = 1 + sum(mt[c] for c in p.children)
                if cost < mt[cid]:
                    mt[cid] = cost
                    changed = True
    return mt


@dataclass(frozen=True)
class EnumerationLimits:
    token_limit: int = 25
    max_rewrites: int = 200
    time_budget_s: float = 600.0

    def __post_init__(self) -> None:
        if self.token_limit < 1:
            raise ValueError("token_limit must be >= 1")
        if self.max_rewrites < 1:
            raise ValueError("max_rewrites must be >= 1")


@dataclass
class EnumerationResult:
    rewrites: list[str]
    stop_reason: str  # exhausted | max-rewrites | time-limit
    elapsed_s: float


def enumerate_rewrites(
    grammar: Grammar,
    limits: Optional[EnumerationLimits] = None,
) -> EnumerationResult:
    """Enumerate distinct rewrites in exact (token count, lexicographic) order.

    Best-first search over partial derivations.  A state is the pair
    (emitted tokens, stack of classes still to expand); its heap key is
    (shortest completable length, emitted, stack).  Expanding a state never
    decreases any key component, so the first complete state popped is always
    the global minimum among all strings not yet emitted — outputs stream in
    sorted order and truncation at max_rewrites keeps an exact prefix.
    """
    limits = limits or EnumerationLimits()
    t0 = time.perf_counter()
    mt = min_token_counts(grammar)
    out: list[str] = []
    stop = "exhausted"
    root_bound = mt[grammar.root]
    if root_bound > limits.token_limit:
        return EnumerationResult(out, stop, time.perf_counter() - t0)

    start = ((), (grammar.root,))
    heap: list[tuple[float, tuple, tuple]] = [(root_bound, *start)]
    seen: set[tuple[tuple, tuple]] = {start}
    while heap:
        if time.perf_counter() - t0 > limits.time_budget_s:
            stop = "time-limit"
            break
        bound, emitted, remaining = heapq.heappop(heap)
        if not remaining:
            out.append(" ".join(emitted))
            if len(out) >= limits.max_rewrites:
                stop = "max-rewrites"
                break
            continue
        cls, rest = remaining[0], remaining[1:]
        rest_cost = len(emitted) + sum(mt[c] for c in rest)
        for p in grammar.productions[cls]:
            child_bound = rest_cost + 1 + sum(mt[c] for c in p.children)
            if child_bound > limits.token_limit:
                continue
            state = (emitted + (p.symbol,), p.children + rest)
            if state in seen:
                continue
            seen.add(state)
            heapq.heappush(heap, (child_bound, *state))
    return EnumerationResult(out, stop, time.perf_counter() - t0)
