"""Dual-graph bookkeeping: stability, forgetful maps, regular nodes, insertion."""

import pytest

from bubbletree import (
    MarkedNodalCurve,
    add_bubble_component,
    curve_from_text,
    curve_to_text,
    curves_isomorphic,
    forget_mark,
    is_regular_node,
    is_stable,
)
from bubbletree.errors import CurveError


def two_component(marks_left=(1, 2), marks_right=(3, 4)):
    legs = [(0, m) for m in marks_left] + [(1, m) for m in marks_right]
    return MarkedNodalCurve((0, 0), ((0, 1),), tuple(legs))


def test_validation_rejects_bad_graphs():
    with pytest.raises(CurveError, match="at least one vertex"):
        MarkedNodalCurve((), (), ())
    with pytest.raises(CurveError, match="missing vertex"):
        MarkedNodalCurve((0,), ((0, 1),), ((0, 1), (0, 2), (0, 3)))
    with pytest.raises(CurveError, match="duplicate mark"):
        MarkedNodalCurve((1,), (), ((0, 1), (0, 1)))
    with pytest.raises(CurveError, match="not connected"):
        MarkedNodalCurve((0, 0), (), ((0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (1, 6)))


def test_genus_accounting_with_loops_and_cycles():
    # a self-loop and a 2-cycle both add to the first Betti number
    loop = MarkedNodalCurve((0,), ((0, 0),), ((0, 1),))
    assert loop.arithmetic_genus == 1
    assert loop.valence(0) == 3  # loop counts twice plus one leg
    cycle = MarkedNodalCurve((0, 0), ((0, 1), (0, 1)), ((0, 1), (1, 2)))
    assert cycle.arithmetic_genus == 1
    assert is_stable(cycle).stable


def test_stability_per_vertex_and_global():
    assert is_stable(MarkedNodalCurve((0,), (), ((0, 1), (0, 2), (0, 3)))).stable
    rep = is_stable(MarkedNodalCurve((0,), (), ((0, 1), (0, 2))))
    assert not rep.stable and not rep.global_ok
    # globally fine but one vertex has only two special points
    rep = two_component(marks_left=(1,), marks_right=(2, 3, 4))
    rep = is_stable(rep)
    assert not rep.stable and rep.global_ok and rep.vertex_ok == (False, True)


def test_forget_mark_contracts_unstable_component():
    c = two_component()
    res = forget_mark(c, 4)
    # right vertex drops to valence 2 and is contracted away
    assert res.curve.n_vertices == 1 and res.curve.edges == ()
    assert sorted(lab for _, lab in res.curve.legs) == [1, 2, 3]
    # the node's image is no longer a node: the contracted component lands
    # at a single point of the survivor, which is exactly where mark 3 sits
    assert res.node_images[0].kind == "mark"
    assert res.mark_images[3] == res.node_images[0]


def test_forget_mark_no_contraction_needed():
    c = MarkedNodalCurve((0,), (), ((0, 1), (0, 2), (0, 3), (0, 4)))
    res = forget_mark(c, 2)
    assert res.curve.n_vertices == 1
    assert res.curve.mark_labels == (1, 3, 4)


def test_forget_mark_empty_stratum():
    c = MarkedNodalCurve((0,), (), ((0, 1), (0, 2), (0, 3)))
    with pytest.raises(CurveError, match="stratum empty"):
        forget_mark(c, 3)


def test_regular_node_two_component():
    c = two_component()
    verdict = is_regular_node(c, 0)
    assert verdict.status == "regular"
    assert verdict.witness == (4,)


def test_regular_node_genus0_shortcut_matches_search():
    c = two_component(marks_left=(1, 2, 3), marks_right=(4, 5))
    fast = is_regular_node(c, 0, use_shortcut=True)
    slow = is_regular_node(c, 0, use_shortcut=False)
    assert fast.status == slow.status == "regular"
    # the verdicts may use different witnesses; both must actually work
    for wit in (fast.witness, slow.witness):
        cur = c
        for lab in wit:
            cur = forget_mark(cur, lab).curve
        assert cur.edges == () or len(cur.edges) < len(c.edges)


def test_cycle_node_never_regular():
    # a node on a cycle survives every forgetful map: contracting cannot
    # reduce the first Betti number
    c = MarkedNodalCurve((0, 0), ((0, 1), (0, 1)), ((0, 1), (1, 2)))
    verdict = is_regular_node(c, 0)
    assert verdict.status == "not_regular"
    assert verdict.witness is None


def test_node_between_positive_genus_vertices_not_regular():
    # both sides stay stable under every forgetful map, so the node survives
    c = MarkedNodalCurve((1, 1), ((0, 1),), ((0, 1), (1, 2)))
    assert is_regular_node(c, 0).status == "not_regular"
    # whereas a rational tail on a genus-1 vertex does contract away
    tail = MarkedNodalCurve((1, 0), ((0, 1),), ((1, 1), (1, 2)))
    assert is_regular_node(tail, 0).status == "regular"


def test_add_bubble_case1_round_trip():
    c = MarkedNodalCurve((0,), (), ((0, 1), (0, 2), (0, 3)))
    ins = add_bubble_component(c, 0, 1)
    assert ins.curve.n_vertices == 2
    assert ins.curve.genus[ins.new_vertex] == 0
    assert len(ins.new_legs) == 2 and ins.replaced_edge is None
    back = ins.curve
    for lab in ins.new_legs:
        back = forget_mark(back, lab).curve
    assert curves_isomorphic(back, c)


def test_add_bubble_case2_subdivides():
    c = two_component()
    ins = add_bubble_component(c, 0, 2)
    assert ins.replaced_edge == 0
    assert ins.curve.n_vertices == 3
    assert len(ins.curve.edges) == 2
    assert len(ins.new_legs) == 1
    # new vertex sits between the old endpoints
    touching = {e for e in ins.curve.edges if ins.new_vertex in e}
    assert len(touching) == 2


def test_add_bubble_rejects_unstable_input():
    c = MarkedNodalCurve((0,), (), ((0, 1), (0, 2)))
    with pytest.raises(CurveError, match="stable"):
        add_bubble_component(c, 0, 1)


def test_isomorphism_relabels_vertices_not_marks():
    a = two_component(marks_left=(1, 2), marks_right=(3, 4))
    b = MarkedNodalCurve((0, 0), ((0, 1),), ((1, 1), (1, 2), (0, 3), (0, 4)))
    assert curves_isomorphic(a, b)
    # swapping mark labels across components is a different marked curve
    c = MarkedNodalCurve((0, 0), ((0, 1),), ((0, 1), (1, 2), (0, 3), (1, 4)))
    assert not curves_isomorphic(a, c)


def test_text_round_trip():
    c = MarkedNodalCurve((0, 1, 0), ((0, 1), (1, 2), (1, 1)), ((0, 1), (2, 2), (2, 3)))
    text = curve_to_text(c)
    back = curve_from_text(text)
    assert back == c
    assert curve_from_text(curve_to_text(back)) == back


def test_text_parser_rejects_garbage():
    with pytest.raises(CurveError):
        curve_from_text("v0 g=0 legs=1,2\ne 0 7\n")
    with pytest.raises(CurveError):
        curve_from_text("nonsense line\n")
