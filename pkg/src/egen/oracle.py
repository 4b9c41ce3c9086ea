"""Numeric equivalence oracle for expression pairs.

Two expressions are compared by evaluating both at random assignments drawn
from a ladder of probe ranges (wide, narrow, positive/negative sub-unit, and
away-from-origin bands, so that every operator's domain gets sampled).  The
verdict is three-valued:

- "equivalent"  — at least `points` mutually-defined probes, every one
  agreeing within `agree_tol` relative tolerance;
- "different"   — some mutually-defined probe disagrees by more than
  `differ_tol`, or the domains are disjoint under sampling;
- "unknown"     — not enough evidence either way (callers treat this
  conservatively: audits drop, generators resample).

The wide gap between `agree_tol` (1e-6) and `differ_tol` (1e-3) keeps float
noise — chiefly central-difference error in derivative evaluation — from ever
flipping a verdict.  Derivative-bearing pairs additionally get a tighter
magnitude cap and a smaller difference step, for the same reason.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .exprs import Assignment, Expr, contains_diff, evaluate, free_variables

#: Probe bands tried in order until enough mutually-defined points are found.
PROBE_RANGES: tuple[tuple[float, float], ...] = (
    (-3.0, 3.0),
    (-1.0, 1.0),
    (0.05, 0.95),
    (1.1, 3.5),
    (-3.5, -1.1),
    (-0.95, -0.05),
    (4.0, 12.0),
    (-12.0, -4.0),
)

#: Probe values above this magnitude are discarded as numerically untrustworthy.
VALUE_CAP = 1e6
#: Tighter cap when a derivative appears: finite-difference error grows with
#: curvature, and huge values sit next to singularities.
DIFF_VALUE_CAP = 3e2
#: Central-difference step for derivative-bearing comparisons.
DIFF_STEP = 1e-6

EQUIVALENT = "equivalent"
DIFFERENT = "different"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class OraclePolicy:
    agree_tol: float = 1e-6
    differ_tol: float = 1e-3
    points: int = 5
    attempts_per_range: int = 30
    min_one_sided: int = 3  # disjoint-domain calls need this much evidence

    def __post_init__(self) -> None:
        if not 0 < self.agree_tol < self.differ_tol:
            raise ValueError("need 0 < agree_tol < differ_tol")
        if self.points < 1:
            raise ValueError("points must be >= 1")


DEFAULT_POLICY = OraclePolicy()


def relative_difference(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def classify_pair(
    a: Expr,
    b: Expr,
    rng: random.Random,
    policy: OraclePolicy = DEFAULT_POLICY,
) -> str:
    """Return EQUIVALENT, DIFFERENT, or UNKNOWN for the pair (a, b)."""
    names = sorted(free_variables(a) | free_variables(b))
    has_diff = contains_diff(a) or contains_diff(b)
    cap = DIFF_VALUE_CAP if has_diff else VALUE_CAP
    h = DIFF_STEP if has_diff else 1e-5
    mutual = 0
    one_sided = 0
    gray = False
    for lo, hi in PROBE_RANGES:
        for _ in range(policy.attempts_per_range):
            point = Assignment({n: rng.uniform(lo, hi) for n in names}, h=h)
            va = evaluate(a, point)
            vb = evaluate(b, point)
            if va is not None and abs(va) > cap:
                va = None
            if vb is not None and abs(vb) > cap:
                vb = None
            if va is None and vb is None:
                continue
            if (va is None) != (vb is None):
                one_sided += 1
                continue
            d = relative_difference(va, vb)
            if d > policy.differ_tol:
                return DIFFERENT
            if d > policy.agree_tol:
                gray = True  # agreement too loose to certify — stay undecided
                continue
            mutual += 1
            if mutual >= policy.points:
                return UNKNOWN if gray else EQUIVALENT
    if mutual == 0 and one_sided >= policy.min_one_sided:
        return DIFFERENT
    return UNKNOWN


def confirm_equivalent(
    a: Expr, b: Expr, rng: random.Random, policy: OraclePolicy = DEFAULT_POLICY
) -> bool:
    return classify_pair(a, b, rng, policy) == EQUIVALENT


def confirm_different(
    a: Expr, b: Expr, rng: random.Random, policy: OraclePolicy = DEFAULT_POLICY
) -> bool:
    return classify_pair(a, b, rng, policy) == DIFFERENT
