"""Rewrite rules over expression patterns.

A pattern is an expression tree that may additionally contain ?-prefixed
pattern variables at leaf positions.  Rule files hold one rule per line:

    name: <lhs-sexpr> => <rhs-sexpr>

'#'-prefixed lines are comments.  Growth-only rules are flagged by comment
lines of the form "# expansive: name1 name2 ..." so callers can isolate
them.  Builtin libraries are addressable by name; the EGEN_RULES_DIR
environment variable prepends a user directory to the lookup path.
"""

from __future__ import annotations

import math
import os
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .exprs import (
    Assignment,
    Const,
    Expr,
    Int,
    Op,
    OPERATORS,
    UnknownToken,
    Var,
    contains_diff,
    evaluate,
    free_variables,
)


class RuleError(ValueError):
    pass


class RuleSyntaxError(RuleError):
    pass


class UnboundRhsVariable(RuleError):
    pass


class DuplicateRuleName(RuleError):
    pass


@dataclass(frozen=True)
class PatternVar:
    name: str  # stored without the leading '?'


Pattern = Union[Expr, PatternVar]


@dataclass(frozen=True)
class RewriteRule:
    name: str
    lhs: Pattern
    rhs: Pattern


_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.\-]*\Z")


def parse_pattern(text: str, variables: Sequence[str] = ("x",)) -> Pattern:
    """Parse an s-expression pattern; ?name leaves become pattern variables."""
    toks = text.replace("(", " ( ").replace(")", " ) ").split()
    if not toks:
        raise RuleSyntaxError("empty pattern")
    pos = 0

    def leaf(tok: str) -> Pattern:
        if tok.startswith("?"):
            if len(tok) < 2:
                raise RuleSyntaxError("pattern variable with empty name")
            return PatternVar(tok[1:])
        if re.match(r"-?\d+\Z", tok):
            return Int(int(tok))
        if tok in ("pi", "e"):
            return Const(tok)
        if tok in variables:
            return Var(tok)
        raise RuleSyntaxError(f"unknown pattern token {tok!r}")

    def walk() -> Pattern:
        nonlocal pos
        if pos >= len(toks):
            raise RuleSyntaxError("pattern ended unexpectedly")
        tok = toks[pos]
        pos += 1
        if tok == ")":
            raise RuleSyntaxError("unexpected ')'")
        if tok != "(":
            return leaf(tok)
        if pos >= len(toks):
            raise RuleSyntaxError("pattern ended after '('")
        head = toks[pos]
        pos += 1
        operator = OPERATORS.get(head)
        if operator is None:
            raise RuleSyntaxError(f"expected an operator after '(', got {head!r}")
        args = []
        while pos < len(toks) and toks[pos] != ")":
            args.append(walk())
        if pos >= len(toks):
            raise RuleSyntaxError(f"missing ')' for operator {head!r}")
        pos += 1
        if len(args) != operator.arity:
            raise RuleSyntaxError(
                f"operator {head!r} expects {operator.arity} argument(s), got {len(args)}"
            )
        return Op(head, tuple(args))

    p = walk()
    if pos != len(toks):
        raise RuleSyntaxError(f"trailing tokens in pattern: {' '.join(toks[pos:])!r}")
    return p


def pattern_vars(p: Pattern) -> set[str]:
    if isinstance(p, PatternVar):
        return {p.name}
    if isinstance(p, Op):
        out: set[str] = set()
        for a in p.args:
            out |= pattern_vars(a)
        return out
    return set()


def instantiate(p: Pattern, bindings: Mapping[str, Expr]) -> Expr:
    """Substitute pattern variables with concrete expressions."""
    if isinstance(p, PatternVar):
        return bindings[p.name]
    if isinstance(p, Op):
        return Op(p.op, tuple(instantiate(a, bindings) for a in p.args))
    return p


def match_expr(p: Pattern, e: Expr, bindings: Optional[dict[str, Expr]] = None) -> Optional[dict[str, Expr]]:
    """Syntactic match of a pattern against a concrete expression.

    Returns the (extended) bindings on success, None on failure.  A pattern
    variable occurring twice must bind structurally equal subtrees.
    """
    if bindings is None:
        bindings = {}
    if isinstance(p, PatternVar):
        bound = bindings.get(p.name)
        if bound is None:
            out = dict(bindings)
            out[p.name] = e
            return out
        return bindings if bound == e else None
    if isinstance(p, Op):
        if not isinstance(e, Op) or e.op != p.op:
            return None
        for pa, ea in zip(p.args, e.args):
            bindings = match_expr(pa, ea, bindings)  # type: ignore[assignment]
            if bindings is None:
                return None
        return bindings
    return bindings if p == e else None


def parse_rule(line: str) -> RewriteRule:
    if ":" not in line:
        raise RuleSyntaxError(f"missing ':' in rule line {line!r}")
    name, _, body = line.partition(":")
    name = name.strip()
    if not _NAME_RE.match(name):
        raise RuleSyntaxError(f"bad rule name {name!r}")
    if "=>" not in body:
        raise RuleSyntaxError(f"missing '=>' in rule {name!r}")
    lhs_text, _, rhs_text = body.partition("=>")
    lhs = parse_pattern(lhs_text.strip())
    rhs = parse_pattern(rhs_text.strip())
    extra = pattern_vars(rhs) - pattern_vars(lhs)
    if extra:
        raise UnboundRhsVariable(
            f"rule {name!r} uses unbound variable(s) on the right-hand side: "
            + ", ".join(sorted(extra))
        )
    return RewriteRule(name, lhs, rhs)


_BUILTIN_DIR = Path(__file__).parent / "data" / "rules"

_EXPANSIVE_RE = re.compile(r"#\s*expansive:\s*(.*)")


def _resolve_library(name_or_path: Union[str, Path]) -> Path:
    p = Path(name_or_path)
    if p.suffix == ".rules" or p.exists():
        if not p.exists():
            raise FileNotFoundError(f"rule file not found: {p}")
        return p
    env_dir = os.environ.get("EGEN_RULES_DIR")
    if env_dir:
        candidate = Path(env_dir) / f"{name_or_path}.rules"
        if candidate.exists():
            return candidate
    candidate = _BUILTIN_DIR / f"{name_or_path}.rules"
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"no rule library named {name_or_path!r}")


def load_library(name_or_path: Union[str, Path]) -> list[RewriteRule]:
    """Load a rule library by builtin name, EGEN_RULES_DIR name, or path."""
    path = _resolve_library(name_or_path)
    rules: list[RewriteRule] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rule = parse_rule(line)
        except RuleError as err:
            raise type(err)(f"{path.name}:{lineno}: {err}") from None
        if rule.name in seen:
            raise DuplicateRuleName(f"{path.name}:{lineno}: duplicate rule name {rule.name!r}")
        seen.add(rule.name)
        rules.append(rule)
    return rules


def expansive_names(name_or_path: Union[str, Path]) -> frozenset[str]:
    """Rule names flagged '# expansive:' in the library file."""
    path = _resolve_library(name_or_path)
    names: set[str] = set()
    for raw in path.read_text().splitlines():
        m = _EXPANSIVE_RE.match(raw.strip())
        if m:
            names.update(m.group(1).split())
    return frozenset(names)


# ---------------------------------------------------------------------------
# Numeric self-test
# ---------------------------------------------------------------------------

# Sampling profiles for substitution values.  A rule passes the sweep if some
# profile yields enough defined pairs; narrow-domain operators (asech wants
# (0, 1], acoth wants |x| > 1) have no common profile, hence the list.
_PROFILES: list[list[tuple[float, float]]] = [
    [(-3.0, 3.0), (0.1, 2.5), (-2.5, -0.1), (0.5, 1.5)],
    [(0.05, 0.95), (0.1, 0.9), (0.2, 0.8), (0.3, 0.7)],
    [(1.1, 3.5), (1.2, 4.0), (-3.5, -1.1), (2.0, 6.0)],
    [(0.1, 3.0), (0.2, 2.0), (0.5, 4.0), (1.0, 5.0)],
]


@dataclass
class SoundnessResult:
    rule: str
    defined_ratio: float
    max_rel_err: float
    violations: int
    profile: int

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.defined_ratio >= 0.5


def _agree(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def check_rule_soundness(
    rule: RewriteRule,
    rng: Union[int, random.Random] = 0,
    samples: int = 200,
    tol: float = 1e-6,
) -> SoundnessResult:
    """Numeric sweep: instantiate pattern variables with random values or
    random linear forms in x, then compare both sides at random x points.

    Both sides must agree within tol (relative) whenever both are defined,
    and at least half the substitutions must produce a defined pair under
    the best sampling profile.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    # d/dx is evaluated by central differences, whose truncation error grows
    # with the third derivative; capping observed magnitudes (and shrinking
    # the step) keeps that error well under the comparison tolerance.
    has_diff = contains_diff_pattern(rule.lhs) or contains_diff_pattern(rule.rhs)
    strict_limit = 3e2 if has_diff else 1e6
    h = 1e-6 if has_diff else 1e-5
    names = sorted(pattern_vars(rule.lhs))
    best: Optional[SoundnessResult] = None
    for prof_idx, ranges in enumerate(_PROFILES):
        defined = 0
        violations = 0
        max_err = 0.0
        for i in range(samples):
            lo, hi = ranges[i % len(ranges)]
            bindings: dict[str, Expr] = {}
            assign: dict[str, float] = {}
            for name in names:
                if rng.random() < 0.4:
                    # linear form keeps derivative rules from degenerating to 0 = 0
                    c = rng.uniform(0.3, 2.0) * rng.choice((-1.0, 1.0))
                    d = rng.uniform(lo, hi)
                    bindings[name] = parse_pattern_linear(c, d)
                else:
                    fresh = f"_{name}"
                    bindings[name] = Var(fresh)
                    assign[fresh] = rng.uniform(lo, hi)
            lhs = instantiate(rule.lhs, bindings)
            rhs = instantiate(rule.rhs, bindings)
            assign["x"] = rng.uniform(lo, hi)
            point = Assignment(assign, h=h)
            va = evaluate(lhs, point)
            vb = evaluate(rhs, point)
            if va is None or vb is None:
                continue
            if abs(va) > strict_limit or abs(vb) > strict_limit:
                continue
            defined += 1
            err = abs(va - vb) / max(1.0, abs(va), abs(vb))
            max_err = max(max_err, err)
            if not _agree(va, vb, tol):
                violations += 1
        result = SoundnessResult(rule.name, defined / samples, max_err, violations, prof_idx)
        if violations:
            return result
        if best is None or result.defined_ratio > best.defined_ratio:
            best = result
        if best.defined_ratio >= 0.5:
            return best
    assert best is not None
    return best


def parse_pattern_linear(c: float, d: float) -> Expr:
    """A small linear form c*x + d with float-free construction.

    Coefficients are snapped to halves so the tree stays in the integer
    vocabulary: k/2 * x + m/2 written with division by 2.
    """
    ck = max(1, min(9, round(abs(c) * 2)))
    dk = max(-9, min(9, round(d * 2)))
    cx = Op("/", (Op("*", (Int(int(math.copysign(ck, c))), Var("x"))), Int(2)))
    if dk == 0:
        return cx
    return Op("+", (cx, Op("/", (Int(dk), Int(2)))))


def contains_diff_pattern(p: Pattern) -> bool:
    if isinstance(p, Op):
        return p.op == "d/dx" or any(contains_diff_pattern(a) for a in p.args)
    return False
