"""Residual-energy induction: extract a bubble tree from a family.

The loop detects energy-concentration sites against the limit measure, marks
one site per iteration (renormalizing smooth sites, cut-radius-solving nodal
ones), inserts the bubble into the dual graph, and re-checks that the
residual energy

    RE = limit_energy - accounted_energy - l*eps_bar - n*eps_bar/2

drops by at least eps_bar/2 (minus a small tolerance) each time; l and n
count detected smooth and regular-nodal sites not yet extracted.  Nodal
sites that fail the regularity classification are frozen into the singular
set and excluded from the accounting, in which case the energy identity is
reported but not asserted.

Base energy is always computed by an independent quadrature route (density
quadrature for rational maps, cylinder diagnostics for neck fields), never
from the same particle ball masses that produce the site masses, so the
identity residual is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import MarkedNodalCurve, add_bubble_component, is_regular_node, is_stable
from .errors import ConcentrationError, DriverError
from .families import Family, energy_quadrature
from .measure import (
    WeightedParticleMeasure,
    build_scale_ladder,
    detect_concentrations,
    mass_in,
    restrict,
)
from .neck import ZeroNeckReport, diagnostics, zero_neck_test
from .renorm import build_nodal_pushforward, mark_nodal_bubble, mark_smooth_bubble

__all__ = [
    "ResidualEnergyLedger",
    "residual_energy",
    "ExtractionConfig",
    "TreeComponent",
    "NeckRecord",
    "SingularSite",
    "BubbleTree",
    "IdentityCheck",
    "extract_bubble_tree",
    "energy_identity_check",
]


@dataclass(frozen=True)
class ResidualEnergyLedger:
    """Accounting state of the induction.

    smooth_count / regular_nodal_count refer to detected sites that have not
    been extracted yet; extracting a site moves its mass into base_energy
    and decrements the matching count.
    """

    limit_energy: float
    base_energy: float
    smooth_count: int
    regular_nodal_count: int
    eps_bar: float

    def __post_init__(self) -> None:
        vals = (self.limit_energy, self.base_energy, self.eps_bar)
        if not all(math.isfinite(v) for v in vals):
            raise DriverError("ledger fields must be finite")
        if self.limit_energy < 0 or self.base_energy < 0:
            raise DriverError("energies must be nonnegative")
        if self.smooth_count < 0 or self.regular_nodal_count < 0:
            raise DriverError("site counts must be nonnegative")
        if self.eps_bar <= 0:
            raise DriverError("eps_bar must be positive")


def residual_energy(ledger: ResidualEnergyLedger) -> float:
    return (
        ledger.limit_energy
        - ledger.base_energy
        - ledger.smooth_count * ledger.eps_bar
        - ledger.regular_nodal_count * ledger.eps_bar / 2.0
    )


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs of one extraction run; defaults suit unit-chart families."""

    eps_bar: float = 0.2
    delta0: float = 1.0
    depth: int = 6
    decrement_tol: float | None = None  # default eps_bar / 20
    marking_radius: float | None = None  # default delta0 / 2
    # balanced-center tolerance, matched to the particle granularity of the
    # family generator; the moment functional of an atomic measure jumps by
    # the atom weights crossing the cut circle, so demanding much less than
    # the largest nearby atom weight over the total mass cannot succeed
    center_tol: float = 1e-5
    alpha_tol: float = 1e-3  # nodal regularity: |alpha| <= alpha_tol * (1 + energy)
    neck_deltas: tuple[float, ...] = ()
    neck_eps: float = 0.01
    base_curve: MarkedNodalCurve | None = None
    node_edge: int = 0

    def __post_init__(self) -> None:
        if self.eps_bar <= 0 or self.delta0 <= 0:
            raise DriverError("eps_bar and delta0 must be positive")
        if self.depth < 2:
            raise DriverError("ladder depth too small")
        object.__setattr__(self, "neck_deltas", tuple(float(d) for d in self.neck_deltas))
        if self.base_curve is not None and not is_stable(self.base_curve).stable:
            raise DriverError("base curve must be stable")

    @property
    def step_tol(self) -> float:
        return self.eps_bar / 20.0 if self.decrement_tol is None else self.decrement_tol


@dataclass(frozen=True)
class TreeComponent:
    vertex: int
    kind: str  # "base" | "bubble"
    energy: float
    attachment: complex | None = None
    site_kind: str | None = None  # "smooth" | "nodal"
    marks: tuple[int, ...] = ()


@dataclass(frozen=True)
class NeckRecord:
    """Neck bookkeeping between two tree components.

    Smooth sites carry the measured annulus excess between the cut circle
    and the working scale; nodal extractions carry the thinness ratios of
    the markings; plain nodes carry a zero-neck report when a schedule was
    supplied.
    """

    kind: str  # "smooth" | "nodal" | "node"
    edges: tuple[int, ...]
    site: complex | None = None
    annulus_excess: float | None = None
    thinness_ratios: tuple[float, ...] = ()
    alpha: float | None = None
    zero_neck: ZeroNeckReport | None = None
    note: str = ""
    markings: tuple = ()
    members: tuple[int, ...] = ()


@dataclass(frozen=True)
class SingularSite:
    location: complex
    mass: float
    reason: str


@dataclass(frozen=True)
class IdentityCheck:
    residual: float
    asserted: bool
    connected: bool | None
    note: str


@dataclass(frozen=True)
class BubbleTree:
    curve: MarkedNodalCurve
    components: tuple[TreeComponent, ...]
    necks: tuple[NeckRecord, ...]
    re_trace: tuple[float, ...]
    eps_bar: float
    step_tol: float
    limit_energy: float
    identity_residual: float | None
    identity_note: str
    singular: tuple[SingularSite, ...]
    connected: bool | None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.re_trace:
            raise DriverError("empty residual-energy trace")
        step = self.eps_bar / 2.0 - self.step_tol
        for a, b in zip(self.re_trace, self.re_trace[1:]):
            if not a - b >= step - 1e-12:
                raise DriverError(
                    f"residual energy failed to decrease by {step:.6g}: "
                    f"trace {tuple(round(x, 9) for x in self.re_trace)}"
                )
        kinds = [c.kind for c in self.components]
        if kinds.count("base") != 1 or kinds[0] != "base":
            raise DriverError("tree must start with exactly one base component")


def _default_curve(kind: str) -> MarkedNodalCurve:
    if kind in ("bubble1", "bubble2"):
        return MarkedNodalCurve((0,), (), ((0, 1), (0, 2), (0, 3)))
    if kind in ("plumbing", "plumbing_bubble"):
        return MarkedNodalCurve(
            (0, 0), ((0, 1),), ((0, 1), (0, 2), (0, 3), (1, 4), (1, 5))
        )
    if kind == "torus_linear":
        return MarkedNodalCurve((0, 0), ((0, 1), (0, 1)), ((0, 1), (1, 2)))
    raise DriverError(f"no default curve for family kind {kind!r}")


def _cap(limit_energy: float, eps_bar: float) -> int:
    return max(1, math.ceil(2.0 * limit_energy / eps_bar))


def _assert_dual_route(
    re_ledger: float, site_route: float, bias: float, limit: float
) -> None:
    # ledger route and per-site route differ exactly by the limit measure's
    # mass inside the site balls; anything beyond tolerance is a real bug
    if abs(re_ledger - site_route - bias) > 1e-3 * (1.0 + limit):
        raise DriverError(
            f"residual-energy routes disagree: ledger {re_ledger:.9g}, "
            f"site sum {site_route:.9g}, expected bias {bias:.9g}"
        )


def _extract_smooth(family: Family, config: ExtractionConfig) -> BubbleTree:
    eps_bar = config.eps_bar
    ladder = build_scale_ladder(config.delta0, eps_bar, config.depth)
    mus = [m.measure for m in family.members]
    mu_limit = family.limit_measure or WeightedParticleMeasure.empty(config.delta0)
    report = detect_concentrations(mus, mu_limit, ladder, chart_kind="smooth")
    mu_last = mus[-1]
    last = family.members[-1]

    limit_energy = energy_quadrature(last.rational)
    delta_k = ladder.finest_scale
    # independent base route: density quadrature of the last member away
    # from the site balls (not the particle masses the sites came from)
    caps = [
        energy_quadrature(last.rational, radius=delta_k, center=s.location)
        for s in report.sites
    ]
    base_energy = limit_energy - sum(caps)

    queue = [s for s in report.sites if s.mass >= 2.0 * eps_bar]
    skipped = [
        (s, c) for s, c in zip(report.sites, caps) if s.mass < 2.0 * eps_bar
    ]
    ledger = ResidualEnergyLedger(
        limit_energy, base_energy, len(queue), 0, eps_bar
    )
    re_now = residual_energy(ledger)
    site_route = sum(s.mass - eps_bar for s in queue)
    # routes differ by the limit measure inside the extracted balls plus the
    # cap energy of any site left below the extraction threshold
    bias = sum(mass_in(mu_limit, s.location, delta_k) for s in queue)
    bias += sum(c for _, c in skipped)
    _assert_dual_route(re_now, site_route, bias, limit_energy)

    curve = config.base_curve or _default_curve(family.kind)
    components = [TreeComponent(vertex=0, kind="base", energy=base_energy)]
    necks: list[NeckRecord] = []
    trace = [re_now]
    notes = [
        f"site below 2*eps_bar left unextracted at {s.location:.4g}"
        for s, _ in skipped
    ]

    radius = config.marking_radius or config.delta0 / 2.0
    accounted = base_energy
    remaining = len(queue)
    iteration_cap = _cap(limit_energy, eps_bar)
    for site in queue:
        if len(trace) - 1 >= iteration_cap:
            raise DriverError(f"iteration cap {iteration_cap} hit; trace {trace}")
        members = [restrict(mus[idx], site.location, radius) for _, idx in site.subsequence]
        markings = mark_smooth_bubble(members, ladder, eps_bar, config.center_tol)
        ins = add_bubble_component(curve, site=0, case=1)
        curve = ins.curve
        mk = markings[-1]
        attach = site.location + mk.q
        components.append(
            TreeComponent(
                vertex=ins.new_vertex,
                kind="bubble",
                energy=site.mass,
                attachment=attach,
                site_kind="smooth",
                marks=ins.new_legs,
            )
        )
        ann = mass_in(members[-1], mk.q, float(ladder.delta[mk.level])) - mass_in(
            members[-1], mk.q, abs(mk.r - mk.q)
        )
        necks.append(
            NeckRecord(
                kind="smooth",
                edges=ins.new_edges,
                site=attach,
                annulus_excess=float(ann),
                note="annulus mass between the cut circle and the working scale",
                markings=tuple(markings),
                members=tuple(idx for _, idx in site.subsequence),
            )
        )
        accounted += site.mass
        remaining -= 1
        ledger = ResidualEnergyLedger(limit_energy, accounted, remaining, 0, eps_bar)
        trace.append(residual_energy(ledger))

    check = _identity_from_parts(limit_energy, components, necks, ())
    return BubbleTree(
        curve=curve,
        components=tuple(components),
        necks=tuple(necks),
        re_trace=tuple(trace),
        eps_bar=eps_bar,
        step_tol=config.step_tol,
        limit_energy=limit_energy,
        identity_residual=check.residual,
        identity_note=check.note,
        singular=(),
        connected=check.connected,
        notes=tuple(notes),
    )


def _restricted_energy(fld, delta: float) -> float:
    p = abs(fld.pinch)
    half = float(np.log(delta / np.sqrt(p)))
    return diagnostics(fld.restrict(half)).energy


def _extract_nodal(family: Family, config: ExtractionConfig) -> BubbleTree:
    eps_bar = config.eps_bar
    delta_chart = min(config.delta0, float(family.meta.get("delta", config.delta0)))
    ladder = build_scale_ladder(delta_chart, eps_bar, config.depth)
    fields = [m.field for m in family.members]
    mus = [build_nodal_pushforward(f, delta_chart) for f in fields]
    mu_limit = family.limit_measure or WeightedParticleMeasure.empty(delta_chart)
    last_field = fields[-1]
    diag_last = diagnostics(last_field)
    limit_energy = diag_last.energy

    singular: list[SingularSite] = []
    sites = ()
    try:
        report = detect_concentrations(mus, mu_limit, ladder, chart_kind="nodal")
        sites = report.sites
    except ConcentrationError as exc:
        if "subsequence not extracted" not in str(exc):
            raise
        # energy at the node does not stabilize across scales: the neck
        # carries escaping energy, which is the non-regular signature
        hot = mass_in(mus[-1], 0.0, float(ladder.delta[1])) - mass_in(
            mu_limit, 0.0, float(ladder.delta[1])
        )
        singular.append(SingularSite(0j, float(hot), str(exc)))

    curve = config.base_curve or _default_curve(family.kind)
    zero_neck = None
    if config.neck_deltas:
        zero_neck = zero_neck_test(fields, config.neck_eps, list(config.neck_deltas))

    delta_k = ladder.finest_scale
    queue = []
    for site in sites:
        if site.kind != "nodal":
            queue.append(("smooth", site))
            continue
        verdict = is_regular_node(curve, config.node_edge)
        alpha_ok = abs(diag_last.alpha) <= config.alpha_tol * (1.0 + limit_energy)
        if verdict.status == "regular" and alpha_ok:
            queue.append(("nodal", site))
        else:
            why = []
            if verdict.status != "regular":
                why.append(f"dual-graph node classification: {verdict.status}")
            if not alpha_ok:
                why.append(f"|alpha| = {abs(diag_last.alpha):.3g} too large")
            singular.append(SingularSite(site.location, site.mass, "; ".join(why)))

    # independent base route: collar energy outside the finest-scale inner
    # cylinder, from GL diagnostics rather than the pushforward particles
    if any(kind == "nodal" for kind, _ in queue):
        base_energy = limit_energy - _restricted_energy(last_field, delta_k)
    else:
        base_energy = limit_energy
    # mass frozen into the singular set is identified with no component
    base_energy = max(0.0, base_energy - sum(s.mass for s in singular))

    n_nodal = sum(1 for kind, _ in queue if kind == "nodal")
    l_smooth = sum(1 for kind, _ in queue if kind == "smooth")
    ledger = ResidualEnergyLedger(limit_energy, base_energy, l_smooth, n_nodal, eps_bar)
    re_now = residual_energy(ledger)
    site_route = sum(
        (s.mass - eps_bar) if kind == "smooth" else (s.mass - eps_bar / 2.0)
        for kind, s in queue
    )
    if queue and abs(re_now - site_route) > 0.05 + 1e-3 * limit_energy:
        raise DriverError(
            f"residual-energy routes disagree: ledger {re_now:.9g} vs site sum "
            f"{site_route:.9g}"
        )

    components = [TreeComponent(vertex=0, kind="base", energy=base_energy)]
    necks: list[NeckRecord] = []
    if zero_neck is not None:
        necks.append(
            NeckRecord(
                kind="node",
                edges=(config.node_edge,),
                alpha=diag_last.alpha,
                zero_neck=zero_neck,
                note="zero-neck verdict for the chart node",
            )
        )
    trace = [re_now]
    accounted = base_energy
    l_rem, n_rem = l_smooth, n_nodal
    iteration_cap = _cap(limit_energy, eps_bar)
    notes = []
    for kind, site in queue:
        if len(trace) - 1 >= iteration_cap:
            raise DriverError(f"iteration cap {iteration_cap} hit; trace {trace}")
        if kind != "nodal":
            raise DriverError("smooth sites on a nodal chart are not supported")
        members = [fields[idx] for _, idx in site.subsequence]
        markings = mark_nodal_bubble(members, ladder, eps_bar)
        ins = add_bubble_component(curve, site=config.node_edge, case=2)
        curve = ins.curve
        components.append(
            TreeComponent(
                vertex=ins.new_vertex,
                kind="bubble",
                energy=site.mass,
                attachment=0j,
                site_kind="nodal",
                marks=ins.new_legs,
            )
        )
        necks.append(
            NeckRecord(
                kind="nodal",
                edges=ins.new_edges,
                site=0j,
                thinness_ratios=tuple(m.neck_ratio for m in markings),
                alpha=diag_last.alpha,
                note="bubble extracted at the node; thinness ratios decrease",
                markings=tuple(markings),
                members=tuple(idx for _, idx in site.subsequence),
            )
        )
        notes.append("child nodal sites, if any, deferred to the next iteration")
        accounted += site.mass
        n_rem -= 1
        ledger = ResidualEnergyLedger(limit_energy, accounted, l_rem, n_rem, eps_bar)
        trace.append(residual_energy(ledger))

    check = _identity_from_parts(limit_energy, components, necks, tuple(singular))
    return BubbleTree(
        curve=curve,
        components=tuple(components),
        necks=tuple(necks),
        re_trace=tuple(trace),
        eps_bar=eps_bar,
        step_tol=config.step_tol,
        limit_energy=limit_energy,
        identity_residual=check.residual,
        identity_note=check.note,
        singular=tuple(singular),
        connected=check.connected,
        notes=tuple(notes),
    )


def _identity_from_parts(
    limit_energy: float,
    components,
    necks,
    singular,
) -> IdentityCheck:
    total = sum(c.energy for c in components)
    residual = abs(limit_energy - total) / limit_energy if limit_energy > 0 else 0.0
    if singular:
        return IdentityCheck(
            residual=residual,
            asserted=False,
            connected=None,
            note="identity not asserted: non-regular nodal points present",
        )
    clauses = []
    for n in necks:
        if n.zero_neck is not None:
            clauses.append(bool(n.zero_neck.passed))
        elif n.kind == "nodal":
            pairs = zip(n.thinness_ratios, n.thinness_ratios[1:])
            clauses.append(all(b < a for a, b in pairs))
        else:
            clauses.append(n.annulus_excess is None or math.isfinite(n.annulus_excess))
    connected = all(clauses) if clauses else True
    return IdentityCheck(residual=residual, asserted=True, connected=connected, note="")


def extract_bubble_tree(family: Family, config: ExtractionConfig | None = None) -> BubbleTree:
    """Run the induction on a generated family and return its bubble tree."""
    config = config or ExtractionConfig()
    if not family.members:
        raise DriverError("family has no members")
    if all(m.measure is not None for m in family.members):
        return _extract_smooth(family, config)
    if all(m.field is not None for m in family.members):
        return _extract_nodal(family, config)
    raise DriverError("family members carry neither uniform measures nor fields")


def energy_identity_check(tree: BubbleTree) -> IdentityCheck:
    """Energy identity and connectedness verdict for a finished tree."""
    return _identity_from_parts(
        tree.limit_energy, tree.components, tree.necks, tree.singular
    )
