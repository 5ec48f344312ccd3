"""Induction driver: ledger invariants and whole-tree extraction shapes."""

import math

import pytest

from bubbletree import (
    BubbleTree,
    ExtractionConfig,
    MarkedNodalCurve,
    ResidualEnergyLedger,
    TreeComponent,
    energy_identity_check,
    residual_energy,
)
from bubbletree.errors import DriverError

FOUR_PI = 4.0 * math.pi


def test_ledger_arithmetic_and_validation():
    led = ResidualEnergyLedger(
        limit_energy=FOUR_PI,
        base_energy=1.0,
        smooth_count=2,
        regular_nodal_count=1,
        eps_bar=0.2,
    )
    assert residual_energy(led) == pytest.approx(FOUR_PI - 1.0 - 0.4 - 0.1)
    with pytest.raises(DriverError, match="finite"):
        ResidualEnergyLedger(math.inf, 0.0, 0, 0, 0.2)
    with pytest.raises(DriverError, match="nonnegative"):
        ResidualEnergyLedger(1.0, -0.5, 0, 0, 0.2)
    with pytest.raises(DriverError, match="counts"):
        ResidualEnergyLedger(1.0, 0.0, -1, 0, 0.2)
    with pytest.raises(DriverError, match="eps_bar"):
        ResidualEnergyLedger(1.0, 0.0, 0, 0, 0.0)


def test_config_defaults_and_validation():
    cfg = ExtractionConfig()
    assert cfg.step_tol == pytest.approx(0.01)  # eps_bar / 20
    assert ExtractionConfig(decrement_tol=0.002).step_tol == 0.002
    with pytest.raises(DriverError, match="positive"):
        ExtractionConfig(eps_bar=0.0)
    with pytest.raises(DriverError, match="depth"):
        ExtractionConfig(depth=1)
    unstable = MarkedNodalCurve((0,), (), ((0, 1), (0, 2)))
    with pytest.raises(DriverError, match="stable"):
        ExtractionConfig(base_curve=unstable)


def synthetic_tree(re_trace, components=None):
    curve = MarkedNodalCurve((0,), (), ((0, 1), (0, 2), (0, 3)))
    if components is None:
        components = (TreeComponent(vertex=0, kind="base", energy=1.0),)
    return BubbleTree(
        curve=curve,
        components=components,
        necks=(),
        re_trace=re_trace,
        eps_bar=0.2,
        step_tol=0.01,
        limit_energy=1.0,
        identity_residual=0.0,
        identity_note="",
        singular=(),
        connected=True,
    )


def test_tree_invariants():
    synthetic_tree((0.5, 0.4, 0.3))  # steps of 0.1 >= 0.2/2 - 0.01
    with pytest.raises(DriverError, match="failed to decrease"):
        synthetic_tree((0.5, 0.45))
    with pytest.raises(DriverError, match="empty residual-energy trace"):
        synthetic_tree(())
    with pytest.raises(DriverError, match="exactly one base"):
        synthetic_tree(
            (0.5,),
            components=(
                TreeComponent(0, "base", 0.5),
                TreeComponent(1, "base", 0.5),
            ),
        )


def test_bubble1_tree_shape(bubble1_tree):
    tree = bubble1_tree
    assert tree.limit_energy == pytest.approx(FOUR_PI, rel=1e-4)
    kinds = [c.kind for c in tree.components]
    assert kinds == ["base", "bubble"]
    bubble = tree.components[1]
    assert bubble.site_kind == "smooth"
    assert bubble.energy == pytest.approx(FOUR_PI, rel=0.02)
    assert abs(bubble.attachment) < 1e-3  # the bubble forms at the origin
    # curve gained one vertex and one node by a smooth-point insertion
    assert tree.curve.n_vertices == 2
    assert len(tree.curve.edges) == 1
    assert len(tree.necks) == 1 and tree.necks[0].kind == "smooth"
    assert math.isfinite(tree.necks[0].annulus_excess)
    assert len(tree.necks[0].markings) == len(tree.necks[0].members) > 1
    # one extraction: the trace has the initial and the post-extraction state
    assert len(tree.re_trace) == 2
    assert abs(tree.re_trace[-1]) <= 0.02 * tree.limit_energy


def test_bubble2_tree_extracts_both_sites(bubble2_tree):
    tree = bubble2_tree
    assert tree.limit_energy == pytest.approx(2 * FOUR_PI, rel=1e-4)
    bubbles = [c for c in tree.components if c.kind == "bubble"]
    assert len(bubbles) == 2
    for b in bubbles:
        assert b.energy == pytest.approx(FOUR_PI, rel=0.05)
    # the two attachment points straddle the separation +-0.5
    spots = sorted(b.attachment.real for b in bubbles)
    assert spots[0] == pytest.approx(-0.5, abs=0.01)
    assert spots[1] == pytest.approx(0.5, abs=0.01)
    assert len(tree.re_trace) == 3
    assert tree.curve.n_vertices == 3


def test_plumbing_tree_is_base_only(plumbing_tree):
    tree = plumbing_tree
    # the neck carries no concentration: no bubbles, trace stays at zero
    assert [c.kind for c in tree.components] == ["base"]
    assert tree.re_trace == (0.0,)
    assert tree.singular == ()
    node_necks = [n for n in tree.necks if n.kind == "node"]
    assert len(node_necks) == 1
    rep = node_necks[0].zero_neck
    assert rep is not None and rep.passed
    assert abs(node_necks[0].alpha) <= 1e-6
    assert tree.connected is True


def test_plumbing_bubble_tree_subdivides_node(plumbing_bubble_tree):
    tree = plumbing_bubble_tree
    bubbles = [c for c in tree.components if c.kind == "bubble"]
    assert len(bubbles) == 1 and bubbles[0].site_kind == "nodal"
    assert bubbles[0].energy == pytest.approx(FOUR_PI, rel=0.01)
    # case-2 insertion: the node edge is subdivided through the new vertex
    assert tree.curve.n_vertices == 3
    assert len(tree.curve.edges) == 2
    nodal = [n for n in tree.necks if n.kind == "nodal"]
    assert len(nodal) == 1
    ratios = nodal[0].thinness_ratios
    assert len(ratios) >= 2
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert any("deferred" in note for note in tree.notes)


def test_torus_tree_routes_to_singular_set(torus21_tree):
    tree = torus21_tree
    # the node of the cycle is not regular, so nothing may be extracted
    assert [c.kind for c in tree.components] == ["base"]
    assert len(tree.singular) == 1
    assert tree.singular[0].mass > 0
    assert tree.identity_residual is not None
    assert "not asserted" in tree.identity_note
    assert tree.connected is None
    node_necks = [n for n in tree.necks if n.kind == "node"]
    assert node_necks and not node_necks[0].zero_neck.passed


def test_extraction_steps_meet_the_minimum_decrement(bubble2_tree):
    step = bubble2_tree.eps_bar / 2.0 - bubble2_tree.step_tol
    drops = [
        a - b for a, b in zip(bubble2_tree.re_trace, bubble2_tree.re_trace[1:])
    ]
    assert all(d >= step - 1e-12 for d in drops)


def test_energy_identity_check_recomputes(bubble1_tree, torus21_tree):
    chk = energy_identity_check(bubble1_tree)
    assert chk.asserted and chk.connected
    assert chk.residual == pytest.approx(bubble1_tree.identity_residual)
    assert chk.residual <= 1e-3
    chk_t = energy_identity_check(torus21_tree)
    assert not chk_t.asserted and chk_t.connected is None
    assert chk_t.residual == pytest.approx(torus21_tree.identity_residual)
