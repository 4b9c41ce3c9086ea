"""Rewrite rules: pattern parsing, matching, libraries, and numeric soundness."""

import random

import pytest

from egen.exprs import Int, Op, Var, parse, to_prefix
from egen.rules import (
    DuplicateRuleName,
    PatternVar,
    RuleSyntaxError,
    UnboundRhsVariable,
    check_rule_soundness,
    expansive_names,
    instantiate,
    load_library,
    match_expr,
    parse_pattern,
    parse_rule,
    pattern_vars,
)


# ---------------------------------------------------------------------------
# Pattern parsing and matching
# ---------------------------------------------------------------------------


def test_parse_pattern_variables_and_literals():
    p = parse_pattern("(+ ?a 0)")
    assert p == Op("+", (PatternVar("a"), Int(0)))


def test_parse_pattern_bare_variable():
    assert parse_pattern("?a") == PatternVar("a")


def test_pattern_vars_collects_names():
    p = parse_pattern("(- (+ ?a ?b) ?c)")
    assert pattern_vars(p) == {"a", "b", "c"}


def test_match_expr_binds_subtrees():
    p = parse_pattern("(+ ?a 0)")
    binds = match_expr(p, parse("(+ (sin x) 0)"))
    assert binds is not None
    assert to_prefix(binds["a"]) == "sin x"


def test_match_expr_fails_on_shape():
    p = parse_pattern("(+ ?a 0)")
    assert match_expr(p, parse("(+ x 1)")) is None
    assert match_expr(p, parse("(- x 0)")) is None


def test_match_expr_nonlinear_requires_equal_subtrees():
    p = parse_pattern("(- ?a ?a)")
    assert match_expr(p, parse("(- (sin x) (sin x))")) is not None
    assert match_expr(p, parse("(- (sin x) (cos x))")) is None


def test_instantiate_substitutes():
    p = parse_pattern("(+ ?a (- ?b ?b))")
    e = instantiate(p, {"a": Var("x"), "b": Int(8)})
    assert to_prefix(e) == "+ x - 8 8"


def test_match_then_instantiate_round_trip():
    p = parse_pattern("(- (+ ?a ?b) ?c)")
    e = parse("(- (+ x 8) 8)")
    binds = match_expr(p, e)
    assert binds is not None
    assert instantiate(p, binds) == e


# ---------------------------------------------------------------------------
# Rule lines
# ---------------------------------------------------------------------------


def test_parse_rule_line():
    r = parse_rule("add-zero: (+ ?a 0) => ?a")
    assert r.name == "add-zero"
    assert r.lhs == Op("+", (PatternVar("a"), Int(0)))
    assert r.rhs == PatternVar("a")


def test_parse_rule_requires_name():
    with pytest.raises(RuleSyntaxError):
        parse_rule("(+ ?a 0) => ?a")


def test_parse_rule_rejects_unbound_rhs_variable():
    with pytest.raises(UnboundRhsVariable):
        parse_rule("bad: (+ ?a 0) => ?b")


def test_parse_rule_rejects_missing_arrow():
    with pytest.raises(RuleSyntaxError):
        parse_rule("bad: (+ ?a 0) ?a")


# ---------------------------------------------------------------------------
# Libraries
# ---------------------------------------------------------------------------


def test_fig1_library_has_three_rules():
    rules = load_library("fig1")
    assert [r.name for r in rules] == ["assoc-sub", "cancel-sub", "add-zero"]


def test_full_library_loads_and_is_unique():
    rules = load_library("full")
    assert len(rules) == 266
    names = [r.name for r in rules]
    assert len(set(names)) == len(names)
    assert len(rules) >= 120


def test_full_library_touches_every_category():
    from egen.exprs import OPERATORS

    rules = load_library("full")
    seen = set()

    def walk(p):
        if isinstance(p, Op):
            seen.add(OPERATORS[p.op].category)
            for a in p.args:
                walk(a)

    for r in rules:
        walk(r.lhs)
        walk(r.rhs)
    assert seen == {
        "arithmetic",
        "log-exp",
        "trig",
        "inv-trig",
        "hyperbolic",
        "inv-hyperbolic",
        "calculus",
    }


def test_expansive_names_flagged():
    names = expansive_names("full")
    assert "mul-one-rev" in names
    assert "pow-one-rev" in names
    rules = {r.name for r in load_library("full")}
    assert names <= rules


def test_load_library_unknown_name():
    with pytest.raises(FileNotFoundError):
        load_library("no-such-library")


def test_load_library_env_dir(tmp_path, monkeypatch):
    (tmp_path / "mine.rules").write_text("only: (+ ?a 0) => ?a\n")
    monkeypatch.setenv("EGEN_RULES_DIR", str(tmp_path))
    rules = load_library("mine")
    assert [r.name for r in rules] == ["only"]


def test_load_library_rejects_duplicate_names(tmp_path):
    p = tmp_path / "dup.rules"
    p.write_text("a: (+ ?a 0) => ?a\na: (* ?a 1) => ?a\n")
    with pytest.raises(DuplicateRuleName):
        load_library(p)


# ---------------------------------------------------------------------------
# Numeric soundness
# ---------------------------------------------------------------------------


def test_every_library_rule_passes_the_numeric_sweep():
    for lib in ("fig1", "full"):
        rules = load_library(lib)
        for i, rule in enumerate(rules):
            result = check_rule_soundness(rule, random.Random(1234 + i), samples=200)
            assert result.ok, f"{lib}:{rule.name}: {result}"


def test_soundness_catches_a_false_rule():
    bad = parse_rule("wrong: (+ ?a 1) => ?a")
    result = check_rule_soundness(bad, random.Random(0), samples=100)
    assert not result.ok
    assert result.violations > 0


def test_soundness_catches_subtle_branch_error():
    # sqrt(a^2) is |a|, not a
    bad = parse_rule("branch: (sqrt (* ?a ?a)) => ?a")
    result = check_rule_soundness(bad, random.Random(0), samples=200)
    assert not result.ok


def test_soundness_accepts_partial_domain_rule():
    ok = parse_rule("cancel: (sinh (asinh ?a)) => ?a")
    result = check_rule_soundness(ok, random.Random(0), samples=200)
    assert result.ok
