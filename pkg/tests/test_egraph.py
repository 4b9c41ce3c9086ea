"""E-graph: union-find, hash-consing, congruence, e-matching, saturation."""

import random

import pytest

from egen.egraph import (
    EGraph,
    NodeLimitExceeded,
    SaturationLimits,
    SaturationReport,
    saturate,
)
from egen.exprs import parse
from egen.rules import load_library, parse_pattern, parse_rule


def fig1_graph():
    g = EGraph()
    root = g.add_expression(parse("(- (+ x 8) 8)"))
    return g, root


# ---------------------------------------------------------------------------
# Construction and hash-consing
# ---------------------------------------------------------------------------


def test_add_expression_hash_conses_shared_leaves():
    g, _ = fig1_graph()
    # x, 8, (+ x 8), (- (+ x 8) 8): the two 8 literals share one e-class
    assert g.num_enodes == 4
    assert g.num_eclasses == 4


def test_add_same_expression_twice_is_idempotent():
    g, root = fig1_graph()
    again = g.add_expression(parse("(- (+ x 8) 8)"))
    assert g.find(again) == g.find(root)
    assert g.num_enodes == 4


def test_add_enode_canonicalizes_children():
    g = EGraph()
    a = g.add_expression(parse("x"))
    b = g.add_expression(parse("0"))
    g.union(a, b)
    g.rebuild()
    n1 = g.add_enode("sin", [a])
    n2 = g.add_enode("sin", [b])
    assert g.find(n1) == g.find(n2)
    g.audit()


def test_node_limit_on_add():
    g = EGraph(max_nodes=2)
    g.add_expression(parse("x"))
    g.add_expression(parse("0"))
    with pytest.raises(NodeLimitExceeded):
        g.add_expression(parse("1"))


# ---------------------------------------------------------------------------
# Union / find / rebuild
# ---------------------------------------------------------------------------


def test_union_is_idempotent_and_monotone():
    g, _ = fig1_graph()
    a = g.add_expression(parse("x"))
    b = g.add_expression(parse("0"))
    before = g.unions
    winner = g.union(a, b)
    assert winner in (g.find(a), g.find(b))
    g.union(a, b)  # merging again is a no-op
    assert g.unions == before + 1
    assert g.find(a) == g.find(b)


def test_rebuild_restores_congruence():
    g = EGraph()
    fx = g.add_expression(parse("(sin x)"))
    fy = g.add_expression(parse("(sin 0)"))
    x = g.add_expression(parse("x"))
    y = g.add_expression(parse("0"))
    assert g.find(fx) != g.find(fy)
    g.union(x, y)
    g.rebuild()
    # congruence: equal children force sin(x) and sin(0) together
    assert g.find(fx) == g.find(fy)
    g.audit()


def test_rebuild_cascades_upward():
    g = EGraph()
    top1 = g.add_expression(parse("(cos (sin x))"))
    top2 = g.add_expression(parse("(cos (sin 0))"))
    g.union(g.add_expression(parse("x")), g.add_expression(parse("0")))
    g.rebuild()
    assert g.find(top1) == g.find(top2)
    g.audit()


def test_random_unions_always_audit_clean():
    # mass randomized exercise: any union sequence must leave a sound graph
    exprs = [
        "(- (+ x 8) 8)",
        "(* (+ x 1) (- x 1))",
        "(sin (cos (tan x)))",
        "(/ (pow x 2) (pow x 2))",
        "(+ (* 2 x) (* x 2))",
        "(d/dx (pow x 3))",
        "(ln (pow e x))",
    ]
    for trial in range(100):
        rng = random.Random(trial)
        g = EGraph()
        ids = [g.add_expression(parse(s)) for s in rng.sample(exprs, k=4)]
        all_classes = [cid for cid in range(len(g._parent)) if g.find(cid) == cid]
        for _ in range(rng.randint(1, 6)):
            a, b = rng.choice(all_classes), rng.choice(all_classes)
            g.union(a, b)
        g.rebuild()
        g.audit()


# ---------------------------------------------------------------------------
# E-matching
# ---------------------------------------------------------------------------


def saturated_fig1():
    g, root = fig1_graph()
    report = saturate(g, load_library("fig1"), SaturationLimits())
    return g, root, report


def test_ematch_counts_on_saturated_graph():
    g, _, _ = saturated_fig1()
    # one (- ?a ?a) instance: the (- 8 8) node
    assert len(g.ematch(parse_pattern("(- ?a ?a)"))) == 1
    # a bare variable matches every e-class
    assert len(g.ematch(parse_pattern("?a"))) == g.num_eclasses == 4
    # (+ ?a ?b) nodes: (+ x 8) and (+ x (- 8 8))
    assert len(g.ematch(parse_pattern("(+ ?a ?b)"))) == 2


def test_ematch_bindings_are_canonical_ids():
    g, _, _ = saturated_fig1()
    for cid, binds in g.ematch(parse_pattern("(+ ?a ?b)")):
        assert g.find(cid) == cid
        for v in binds.values():
            assert g.find(v) == v


def test_ematch_literal_pattern():
    g, root, _ = saturated_fig1()
    matches = g.ematch(parse_pattern("(- (+ ?a ?b) ?c)"))
    assert len(matches) == 1
    assert matches[0][0] == g.find(root)


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------


def test_fig1_saturates_with_frozen_report():
    g, root, report = saturated_fig1()
    assert report.stop_reason == "saturated"
    assert report.iterations == 4
    assert report.enodes == 7
    assert report.eclasses == 4
    assert report.rule_counts == {"assoc-sub": 4, "cancel-sub": 3, "add-zero": 2}
    # the seed's class now contains the bare variable x
    x = g.add_expression(parse("x"))
    assert g.find(x) == g.find(root)


def test_fig1_saturation_well_under_ten_iterations():
    _, _, report = saturated_fig1()
    assert report.iterations <= 10


def test_saturation_is_deterministic():
    dumps = set()
    for _ in range(3):
        g, _, report = saturated_fig1()
        dumps.add((g.dump(), report.iterations, report.enodes))
    assert len(dumps) == 1


def test_saturate_node_limit_stop():
    # each round nests another sin(...), so the graph grows without bound
    grow = [parse_rule("grow: ?a => (* ?a (sin ?a))")]
    g = EGraph()
    g.add_expression(parse("x"))
    report = saturate(g, grow, SaturationLimits(max_iterations=1000, max_enodes=30))
    assert report.stop_reason == "node-limit"
    assert report.enodes >= 30
    g.audit()  # over the limit but still structurally sound


def test_saturate_iteration_limit_stop():
    grow = [parse_rule("grow: ?a => (* ?a (sin ?a))")]
    g = EGraph()
    g.add_expression(parse("x"))
    report = saturate(g, grow, SaturationLimits(max_iterations=3, max_enodes=10**6))
    assert report.stop_reason == "iter-limit"
    assert report.iterations == 3


def test_saturate_time_limit_stop():
    grow = [parse_rule("grow: ?a => (* ?a (sin ?a))")]
    g = EGraph()
    g.add_expression(parse("x"))
    report = saturate(
        g, grow, SaturationLimits(max_iterations=10**6, max_enodes=10**9, time_budget_s=0.0)
    )
    assert report.stop_reason == "time-limit"


def test_union_rewrite_folds_do_not_grow_forever():
    # x => x+0 style rules saturate because the RHS lands in the same class
    pad = [parse_rule("pad: ?a => (+ ?a 0)")]
    g = EGraph()
    g.add_expression(parse("x"))
    report = saturate(g, pad, SaturationLimits(max_iterations=50, max_enodes=10**6))
    assert report.stop_reason == "saturated"
    assert report.enodes == 4  # x, 0, (+ x 0), (+ 0 0)


def test_report_to_dict_timing_is_optional():
    _, _, report = saturated_fig1()
    assert isinstance(report, SaturationReport)
    d = report.to_dict(include_timing=False)
    assert "elapsed_s" not in d
    assert set(d) == {"iterations", "enodes", "eclasses", "stop_reason", "rule_counts"}
    t = report.to_dict()
    assert "elapsed_s" in t


def test_full_library_on_fig1_seed_is_audit_clean():
    g = EGraph()
    g.add_expression(parse("(- (+ x 8) 8)"))
    report = saturate(g, load_library("full"), SaturationLimits(5, 1500, 60.0))
    assert report.stop_reason in ("saturated", "node-limit", "iteration-limit")
    g.audit()


def test_dump_format():
    g = EGraph()
    g.add_expression(parse("(+ x 0)"))
    lines = g.dump().splitlines()
    assert lines[0].startswith("e0:")
    assert any("+(" in line for line in lines)
