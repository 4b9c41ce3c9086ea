"""Expression trees over a fixed math vocabulary.

Expressions are immutable trees built from binary arithmetic operators, a
derivative operator ``d/dx``, unary function families (logarithm, trig,
inverse trig, hyperbolic, inverse hyperbolic), integer literals, named
variables, and the constant leaves ``pi`` and ``e``.  The exponential is not
a distinct operator: exp(u) is spelled ``pow e u``.

The canonical textual form is whitespace-separated prefix notation
("- + x 8 8").  A parenthesized s-expression form "(- (+ x 8) 8)" is accepted
on input and auto-detected by a leading "(".

This module also provides the numeric evaluation oracle (IEEE double
semantics with an Undefined result for domain errors, division by zero,
non-finite values, and magnitudes above 1e12; ``d/dx`` is evaluated by
central finite differences) and single-node syntactic mutation used to
manufacture near-miss expressions.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Sequence, Union

CATEGORIES = (
    "arithmetic",
    "log-exp",
    "trig",
    "inv-trig",
    "hyperbolic",
    "inv-hyperbolic",
    "calculus",
)


@dataclass(frozen=True)
class Operator:
    name: str
    arity: int
    category: str


def _ops(names: str, arity: int, category: str) -> list[Operator]:
    return [Operator(n, arity, category) for n in names.split()]


_REGISTRY = (
    _ops("+ - * / pow", 2, "arithmetic")
    + _ops("abs sqrt", 1, "arithmetic")
    + _ops("d/dx", 1, "calculus")
    + _ops("ln", 1, "log-exp")
    + _ops("sin cos tan csc sec cot", 1, "trig")
    + _ops("asin acos atan acsc asec acot", 1, "inv-trig")
    + _ops("sinh cosh tanh csch sech coth", 1, "hyperbolic")
    + _ops("asinh acosh atanh acsch asech acoth", 1, "inv-hyperbolic")
)

#: Parseable operator tokens (33 of them).
OPERATORS: dict[str, Operator] = {op.name: op for op in _REGISTRY}

#: Full operator inventory (34 rows): every parseable token plus exp, which
#: contributes no token of its own because exp(u) is encoded as pow(e, u).
OPERATOR_COVERAGE: tuple[Operator, ...] = tuple(_REGISTRY) + (
    Operator("exp", 1, "log-exp"),
)

UNARY_OPERATORS = tuple(op.name for op in _REGISTRY if op.arity == 1)
BINARY_OPERATORS = tuple(op.name for op in _REGISTRY if op.arity == 2)

CONSTANTS: dict[str, float] = {"pi": math.pi, "e": math.e}

#: The variable the derivative operator differentiates with respect to.
DIFF_VARIABLE = "x"

#: Results whose magnitude exceeds this are treated as Undefined.
MAGNITUDE_LIMIT = 1e12

_INT_RE = re.compile(r"-?\d+\Z")


class ExprError(ValueError):
    """Base class for expression-layer failures."""


class UnknownToken(ExprError):
    pass


class ArityUnderflow(ExprError):
    pass


class TrailingTokens(ExprError):
    pass


class UnboundVariable(ExprError):
    pass


class NoMutableSite(ExprError):
    pass


@dataclass(frozen=True)
class Op:
    op: str
    args: "tuple[Expr, ...]"

    def __post_init__(self) -> None:
        operator = OPERATORS.get(self.op)
        if operator is None:
            raise UnknownToken(f"unknown operator {self.op!r}")
        if len(self.args) != operator.arity:
            raise ArityUnderflow(
                f"operator {self.op!r} expects {operator.arity} "
                f"argument(s), got {len(self.args)}"
            )


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


Expr = Union[Op, Var, Int, Const]


def exp_of(u: Expr) -> Op:
    """The encoded exponential: exp(u) as pow(e, u)."""
    return Op("pow", (Const("e"), u))


# ---------------------------------------------------------------------------
# Parsing and printing
# ---------------------------------------------------------------------------


def _leaf(token: str, variables: Sequence[str]) -> Expr:
    if _INT_RE.match(token):
        return Int(int(token))
    if token in CONSTANTS:
        return Const(token)
    if token in variables:
        return Var(token)
    raise UnknownToken(f"unknown token {token!r}")


def parse_prefix(tokens: Union[str, Sequence[str]], variables: Sequence[str] = ("x",)) -> Expr:
    """Parse a whitespace-separated prefix token stream into an expression.

    Raises UnknownToken, ArityUnderflow (stream ends mid-expression), or
    TrailingTokens (tokens remain after a complete expression).
    """
    toks = tokens.split() if isinstance(tokens, str) else list(tokens)
    if not toks:
        raise ArityUnderflow("empty token stream")
    pos = 0

    def walk() -> Expr:
        nonlocal pos
        if pos >= len(toks):
            raise ArityUnderflow("token stream ended inside an expression")
        tok = toks[pos]
        pos += 1
        operator = OPERATORS.get(tok)
        if operator is not None:
            args = tuple(walk() for _ in range(operator.arity))
            return Op(tok, args)
        return _leaf(tok, variables)

    expr = walk()
    if pos != len(toks):
        raise TrailingTokens(
            f"{len(toks) - pos} token(s) left after a complete expression: "
            f"{' '.join(toks[pos:])!r}"
        )
    return expr


def parse_sexpr(text: str, variables: Sequence[str] = ("x",)) -> Expr:
    """Parse a parenthesized s-expression like "(- (+ x 8) 8)"."""
    toks = text.replace("(", " ( ").replace(")", " ) ").split()
    if not toks:
        raise ArityUnderflow("empty input")
    pos = 0

    def walk() -> Expr:
        nonlocal pos
        if pos >= len(toks):
            raise ArityUnderflow("input ended inside an expression")
        tok = toks[pos]
        pos += 1
        if tok == ")":
            raise TrailingTokens("unexpected ')'")
        if tok != "(":
            return _leaf(tok, variables)
        if pos >= len(toks):
            raise ArityUnderflow("input ended after '('")
        head = toks[pos]
        pos += 1
        operator = OPERATORS.get(head)
        if operator is None:
            raise UnknownToken(f"expected an operator after '(', got {head!r}")
        args = []
        while pos < len(toks) and toks[pos] != ")":
            args.append(walk())
        if pos >= len(toks):
            raise ArityUnderflow(f"missing ')' for operator {head!r}")
        pos += 1  # consume ")"
        if len(args) != operator.arity:
            raise ArityUnderflow(
                f"operator {head!r} expects {operator.arity} argument(s), got {len(args)}"
            )
        return Op(head, tuple(args))

    expr = walk()
    if pos != len(toks):
        raise TrailingTokens(f"{len(toks) - pos} token(s) left: {' '.join(toks[pos:])!r}")
    return expr


def parse(text: str, variables: Sequence[str] = ("x",)) -> Expr:
    """Parse either notation; s-expressions are detected by a leading '('."""
    if text.lstrip().startswith("("):
        return parse_sexpr(text, variables)
    return parse_prefix(text, variables)


def prefix_tokens(e: Expr) -> list[str]:
    out: list[str] = []

    def walk(node: Expr) -> None:
        if isinstance(node, Op):
            out.append(node.op)
            for a in node.args:
                walk(a)
        elif isinstance(node, Var):
            out.append(node.name)
        elif isinstance(node, Int):
            out.append(str(node.value))
        else:
            out.append(node.name)

    walk(e)
    return out


def to_prefix(e: Expr) -> str:
    return " ".join(prefix_tokens(e))


def token_count(e: Expr) -> int:
    if isinstance(e, Op):
        return 1 + sum(token_count(a) for a in e.args)
    return 1


def subexpressions(e: Expr) -> Iterator[Expr]:
    """Preorder iterator over all nodes of the tree."""
    yield e
    if isinstance(e, Op):
        for a in e.args:
            yield from subexpressions(a)


def free_variables(e: Expr) -> set[str]:
    """Variable names the oracle needs bound to evaluate e.

    d/dx counts as a use of the differentiation variable even when its body
    does not mention it.
    """
    out: set[str] = set()
    for node in subexpressions(e):
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Op) and node.op == "d/dx":
            out.add(DIFF_VARIABLE)
    return out


def contains_diff(e: Expr) -> bool:
    return any(isinstance(n, Op) and n.op == "d/dx" for n in subexpressions(e))


# ---------------------------------------------------------------------------
# Numeric evaluation oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Assignment:
    """Variable bindings plus the finite-difference step for d/dx."""

    values: Mapping[str, float]
    h: float = 1e-5

    def __post_init__(self) -> None:
        if not (self.h > 0):
            raise ValueError(f"finite-difference step must be positive, got {self.h}")

    def with_value(self, name: str, value: float) -> "Assignment":
        merged = dict(self.values)
        merged[name] = value
        return Assignment(merged, self.h)


class _Undefined(Exception):
    """Internal control flow: the subtree has no defined IEEE value."""


_APPLY = {
    "+": lambda x, y: x + y,
    "-": lambda x, y: x - y,
    "*": lambda x, y: x * y,
    "/": lambda x, y: x / y,
    "pow": math.pow,
    "abs": math.fabs,
    "sqrt": math.sqrt,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "csc": lambda x: 1.0 / math.sin(x),
    "sec": lambda x: 1.0 / math.cos(x),
    "cot": lambda x: math.cos(x) / math.sin(x),
    "asin": math.asin,
    "acos": math.acos,
    "atan": math.atan,
    "acsc": lambda x: math.asin(1.0 / x),
    "asec": lambda x: math.acos(1.0 / x),
    "acot": lambda x: math.atan(1.0 / x),
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "csch": lambda x: 1.0 / math.sinh(x),
    "sech": lambda x: 1.0 / math.cosh(x),
    "coth": lambda x: math.cosh(x) / math.sinh(x),
    "asinh": math.asinh,
    "acosh": math.acosh,
    "atanh": math.atanh,
    "acsch": lambda x: math.asinh(1.0 / x),
    "asech": lambda x: math.acosh(1.0 / x),
    "acoth": lambda x: math.atanh(1.0 / x),
}


def _check(v: float) -> float:
    if not math.isfinite(v) or abs(v) > MAGNITUDE_LIMIT:
        raise _Undefined
    return v


def _eval(e: Expr, a: Assignment) -> float:
    if isinstance(e, Int):
        return float(e.value)
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return _check(float(a.values[e.name]))
        except KeyError:
            raise UnboundVariable(f"variable {e.name!r} is unbound") from None
    if e.op == "d/dx":
        if DIFF_VARIABLE not in a.values:
            raise UnboundVariable(f"variable {DIFF_VARIABLE!r} is unbound")
        x0 = float(a.values[DIFF_VARIABLE])
        hi = _eval(e.args[0], a.with_value(DIFF_VARIABLE, x0 + a.h))
        lo = _eval(e.args[0], a.with_value(DIFF_VARIABLE, x0 - a.h))
        return _check((hi - lo) / (2.0 * a.h))
    vals = [_eval(arg, a) for arg in e.args]
    try:
        v = _APPLY[e.op](*vals)
    except (ValueError, OverflowError, ZeroDivisionError):
        raise _Undefined from None
    return _check(v)


def evaluate(e: Expr, assignment: Union[Assignment, Mapping[str, float], None] = None) -> Optional[float]:
    """Evaluate e, returning a float or None for an Undefined result.

    Undefined covers division by zero, domain errors, non-finite values, and
    magnitudes above MAGNITUDE_LIMIT at any node.  Unbound variables raise
    UnboundVariable instead (that is a caller bug, not a numeric condition).
    """
    if assignment is None:
        assignment = Assignment({})
    elif not isinstance(assignment, Assignment):
        assignment = Assignment(assignment)
    try:
        return _eval(e, assignment)
    except _Undefined:
        return None


# ---------------------------------------------------------------------------
# Single-node mutation
# ---------------------------------------------------------------------------

MUTATION_MODES = ("operator-swap", "numeral-edit")

#: Default literal pool for numeral edits: [-9, 9] without 0.
DEFAULT_INT_RANGE = (-9, 9)


def _int_choices(value: int, int_range: tuple[int, int]) -> list[int]:
    lo, hi = int_range
    return [v for v in range(lo, hi + 1) if v != 0 and v != value]


def replace_subexpression(e: Expr, index: int, replacement: Expr) -> Expr:
    """Rebuild `e` with the subexpression at preorder position `index`
    (the order of `subexpressions`) replaced by `replacement`."""
    counter = -1

    def walk(node: Expr) -> Expr:
        nonlocal counter
        counter += 1
        if counter == index:
            return replacement
        if isinstance(node, Op):
            return Op(node.op, tuple(walk(a) for a in node.args))
        return node

    return walk(e)


_replace_at = replace_subexpression


def mutate(
    e: Expr,
    rng: Union[int, random.Random],
    mode: Optional[str] = None,
    int_range: tuple[int, int] = DEFAULT_INT_RANGE,
) -> Expr:
    """Change exactly one node: swap an operator for a same-arity one, or
    replace an integer literal with a different one from int_range.

    With mode=None a feasible mode is chosen at random.  Raises NoMutableSite
    when the requested mode (or either mode) has no applicable node.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    if mode is not None and mode not in MUTATION_MODES:
        raise ValueError(f"unknown mutation mode {mode!r}")
    nodes = list(subexpressions(e))
    same_arity = {1: UNARY_OPERATORS, 2: BINARY_OPERATORS}
    op_sites = [
        i
        for i, n in enumerate(nodes)
        if isinstance(n, Op) and len(same_arity[OPERATORS[n.op].arity]) > 1
    ]
    int_sites = [
        i
        for i, n in enumerate(nodes)
        if isinstance(n, Int) and _int_choices(n.value, int_range)
    ]
    if mode is None:
        feasible = [m for m, sites in zip(MUTATION_MODES, (op_sites, int_sites)) if sites]
        if not feasible:
            raise NoMutableSite("expression has no operator or numeral to change")
        mode = rng.choice(feasible)
    sites = op_sites if mode == "operator-swap" else int_sites
    if not sites:
        raise NoMutableSite(f"no site for mode {mode!r}")
    index = rng.choice(sites)
    target = nodes[index]
    if mode == "operator-swap":
        assert isinstance(target, Op)
        pool = [n for n in same_arity[OPERATORS[target.op].arity] if n != target.op]
        replacement: Expr = Op(rng.choice(pool), target.args)
    else:
        assert isinstance(target, Int)
        replacement = Int(rng.choice(_int_choices(target.value, int_range)))
    return _replace_at(e, index, replacement)
