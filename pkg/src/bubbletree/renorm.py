"""Cross-ratio renormalization of concentrating measures.

Given a measure concentrating at a point q, the map R_{q,t}(x) =
(1/t - 1)(x - q) rescales the chart so that exactly the energy quantum
eps_bar sits outside the unit disk.  The neck scale t is found by
bisection on the monotone mass-outside function; the balanced center q is
the zero of the first-moment functional F(q) of the renormalized measure,
located by a degree (winding) argument followed by damped Newton.

Two marking procedures wrap this machinery: one for concentration at a
smooth point (solve for q, then t), one for concentration at a node (q is
pinned at the node; only the cut radius r is solved).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CenterError, MarkingError, NeckError, NeckScaleError
from .measure import (
    PlanarMoebius,
    ScaleLadder,
    WeightedParticleMeasure,
    mass_in,
    pushforward,
)
from .neck import CylinderField

__all__ = [
    "cross_ratio",
    "renormalization_map",
    "NeckScaleResult",
    "solve_neck_scale",
    "solve_neck_scale_from_cdf",
    "center_functional",
    "CenterResult",
    "find_balanced_center",
    "Marking",
    "mark_smooth_bubble",
    "build_nodal_pushforward",
    "mark_nodal_bubble",
]


def cross_ratio(q: complex, t: float, x):
    """R_{q,t}(x) = (1/t - 1)(x - q); sends q to 0 and q + t/(1-t) to 1."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    return (1.0 / t - 1.0) * (x - q)


def renormalization_map(q: complex, t: float) -> PlanarMoebius:
    """The affine map x -> (1/t - 1)(x - q) as a reusable transform."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    scale = 1.0 / t - 1.0
    return PlanarMoebius.affine(scale, -scale * q)


def _radial_profile(mu: WeightedParticleMeasure, q: complex):
    """Sorted distances from q and the cumulative weights, for O(log n) mass queries."""
    d = np.abs(mu.points - q)
    order = np.argsort(d, kind="stable")
    d_sorted = d[order]
    cum = np.concatenate([[0.0], np.cumsum(mu.weights[order])])
    return d_sorted, cum


def _mass_outside_radius(d_sorted, cum, s: float) -> float:
    # atoms with distance exactly s count as outside
    idx = int(np.searchsorted(d_sorted, s, side="left"))
    return float(cum[-1] - cum[idx])


@dataclass(frozen=True)
class NeckScaleResult:
    """Solved neck scale: mass outside R_{q,t}^{-1}(D) equals eps_bar up to residual.

    s = t/(1-t) is the cut radius in the source chart; tol_effective is the
    acceptance bound actually applied (the requested tolerance, widened to
    the local atom jump when the target level falls inside one).
    """

    t: float
    s: float
    mass_outside: float
    residual: float
    tol_effective: float
    history: tuple[tuple[float, float], ...]


def solve_neck_scale(
    mu: WeightedParticleMeasure,
    q: complex,
    eps_bar: float,
    tol: float | None = None,
    gap_fraction: float = 0.05,
) -> NeckScaleResult:
    """Bisection for t with mass of mu outside R_{q,t}^{-1}(unit disk) = eps_bar.

    The mass-outside function of a particle measure is a nonincreasing step
    function of t; bisection converges either to a plateau crossing the
    level or to a jump.  A jump solution is accepted when the jump is small
    (below gap_fraction of the total mass, a discretization artifact) and
    rejected as "not spanning" otherwise.
    """
    if eps_bar <= 0.0:
        raise NeckScaleError(f"eps_bar must be positive, got {eps_bar}")
    total = mu.mass
    if total <= eps_bar:
        raise NeckScaleError(
            f"energy below quantum: total mass {total:.6g} <= eps_bar {eps_bar:.6g}"
        )
    if tol is None:
        tol = 1e-9 * total
    d_sorted, cum = _radial_profile(mu, q)
    positive = d_sorted[d_sorted > 0.0]
    if not len(positive):
        raise NeckScaleError("energy below quantum: all mass sits at q")
    reachable = float(cum[-1] - cum[int(np.searchsorted(d_sorted, 0.0, side="right"))])
    if reachable <= eps_bar:
        raise NeckScaleError(
            f"mass function not spanning eps_bar: only {reachable:.6g} away from q"
        )

    def s_of(t: float) -> float:
        return t / (1.0 - t)

    def f(t: float) -> float:
        return _mass_outside_radius(d_sorted, cum, s_of(t))

    s_lo = float(positive[0]) * 0.5
    s_hi = float(d_sorted[-1]) * 2.0 + 1.0
    t_lo = s_lo / (1.0 + s_lo)
    t_hi = s_hi / (1.0 + s_hi)
    f_lo, f_hi = f(t_lo), f(t_hi)
    history = [(t_lo, f_lo), (t_hi, f_hi)]
    if not (f_lo >= eps_bar >= f_hi):
        raise NeckScaleError(
            f"mass function not spanning eps_bar: range [{f_hi:.6g}, {f_lo:.6g}]"
        )
    while abs(f_lo - eps_bar) > tol and abs(f_hi - eps_bar) > tol and (t_hi - t_lo) > 1e-14:
        t_mid = 0.5 * (t_lo + t_hi)
        f_mid = f(t_mid)
        history.append((t_mid, f_mid))
        if f_mid >= eps_bar:
            t_lo, f_lo = t_mid, f_mid
        else:
            t_hi, f_hi = t_mid, f_mid

    history.sort(key=lambda p: p[0])
    for (_, fa), (_, fb) in zip(history, history[1:]):
        if fb > fa + 1e-12 * max(total, 1.0):
            raise NeckScaleError("mass function increased across bisection history")

    gap = f_lo - f_hi
    if abs(f_lo - eps_bar) <= abs(f_hi - eps_bar):
        t_star, f_star = t_lo, f_lo
    else:
        t_star, f_star = t_hi, f_hi
    residual = abs(f_star - eps_bar)
    tol_effective = max(tol, min(gap, gap_fraction * total))
    if residual > tol_effective:
        raise NeckScaleError(
            f"mass function not spanning eps_bar: residual {residual:.6g} across a "
            f"jump of {gap:.6g}"
        )
    return NeckScaleResult(
        t=t_star,
        s=s_of(t_star),
        mass_outside=f_star,
        residual=residual,
        tol_effective=tol_effective,
        history=tuple(history),
    )


def solve_neck_scale_from_cdf(
    mass_outside,
    total: float,
    eps_bar: float,
    tol: float | None = None,
    s_bracket: tuple[float, float] = (1e-9, 1e9),
) -> NeckScaleResult:
    """Bisection twin of solve_neck_scale for a continuous radial profile.

    mass_outside(s) must be a nonincreasing function of the radius s; the
    same t = s/(1+s) parametrization and monotonicity audit apply, but a
    continuous profile lets the bisection reach machine-level residuals,
    which particle measures cannot (their mass function is a step function).
    """
    if eps_bar <= 0.0:
        raise NeckScaleError(f"eps_bar must be positive, got {eps_bar}")
    if total <= eps_bar:
        raise NeckScaleError(
            f"energy below quantum: total mass {total:.6g} <= eps_bar {eps_bar:.6g}"
        )
    if tol is None:
        tol = 1e-12 * total

    def s_of(t: float) -> float:
        return t / (1.0 - t)

    s_lo, s_hi = s_bracket
    if not 0.0 < s_lo < s_hi:
        raise NeckScaleError(f"bad radius bracket {s_bracket}")
    t_lo = s_lo / (1.0 + s_lo)
    t_hi = s_hi / (1.0 + s_hi)
    f_lo = float(mass_outside(s_lo))
    f_hi = float(mass_outside(s_hi))
    history = [(t_lo, f_lo), (t_hi, f_hi)]
    if not (f_lo >= eps_bar >= f_hi):
        raise NeckScaleError(
            f"mass function not spanning eps_bar: range [{f_hi:.6g}, {f_lo:.6g}]"
        )
    while abs(f_lo - eps_bar) > tol and abs(f_hi - eps_bar) > tol and (t_hi - t_lo) > 1e-15:
        t_mid = 0.5 * (t_lo + t_hi)
        f_mid = float(mass_outside(s_of(t_mid)))
        history.append((t_mid, f_mid))
        if f_mid >= eps_bar:
            t_lo, f_lo = t_mid, f_mid
        else:
            t_hi, f_hi = t_mid, f_mid

    history.sort(key=lambda p: p[0])
    for (_, fa), (_, fb) in zip(history, history[1:]):
        if fb > fa + 1e-12 * max(total, 1.0):
            raise NeckScaleError("mass function increased across bisection history")

    if abs(f_lo - eps_bar) <= abs(f_hi - eps_bar):
        t_star, f_star = t_lo, f_lo
    else:
        t_star, f_star = t_hi, f_hi
    residual = abs(f_star - eps_bar)
    gap = f_lo - f_hi
    tol_effective = max(tol, min(gap, 1e-6 * total))
    if residual > tol_effective:
        raise NeckScaleError(
            f"mass function not spanning eps_bar: residual {residual:.6g} at "
            f"bracket width {t_hi - t_lo:.3g}"
        )
    return NeckScaleResult(
        t=t_star,
        s=s_of(t_star),
        mass_outside=f_star,
        residual=residual,
        tol_effective=tol_effective,
        history=tuple(history),
    )


def _center_value(
    mu: WeightedParticleMeasure,
    q: complex,
    eps_bar: float,
    tol: float | None,
    smoothing: float,
) -> tuple[complex, NeckScaleResult]:
    res = solve_neck_scale(mu, q, eps_bar, tol)
    scale = 1.0 / res.t - 1.0
    d = np.abs(mu.points - q)
    if smoothing > 0.0:
        # cosine ramp on the cut circle, full weight inside, zero outside
        rho = d / res.s
        ramp = np.clip((1.0 + smoothing - rho) / (2.0 * smoothing), 0.0, 1.0)
        psi = 0.5 - 0.5 * np.cos(np.pi * ramp)
        moment = complex(np.sum(psi * mu.weights * (mu.points - q)) * scale)
    else:
        sel = d < res.s
        moment = complex(np.sum(mu.weights[sel] * (mu.points[sel] - q)) * scale)
    return moment, res


def center_functional(
    mu: WeightedParticleMeasure,
    q: complex,
    eps_bar: float,
    tol: float | None = None,
    smoothing: float = 0.0,
) -> complex:
    """F(q): first moment over the open unit disk of the renormalized measure.

    smoothing > 0 replaces the disk indicator by a cosine ramp of relative
    bandwidth `smoothing` on the cut circle, for continuity checks on
    measures with atoms near the cut.
    """
    return _center_value(mu, q, eps_bar, tol, smoothing)[0]


def _winding_number(values: np.ndarray) -> int:
    ang = np.angle(values)
    inc = np.diff(np.concatenate([ang, ang[:1]]))
    inc = (inc + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(float(np.sum(inc) / (2.0 * np.pi))))


@dataclass(frozen=True)
class CenterResult:
    """winding and boundary_inward_ok are None when the direct probe at 0
    succeeded and the boundary was never sampled."""

    q: complex
    value: complex
    scale: NeckScaleResult  # neck-scale solve at the returned q
    r: complex  # q + t/(1-t)
    winding: int | None
    boundary_inward_ok: bool | None  # Re(F(q)/-q) > 0 at every boundary sample
    zeros: tuple[complex, ...]
    multiple_zeros: bool


def find_balanced_center(
    mu: WeightedParticleMeasure,
    ladder: ScaleLadder,
    k: int,
    tol: float = 1e-8,
    boundary_samples: int = 720,
    fd_step: float | None = None,
) -> CenterResult:
    """Zero of the center functional inside B(0, delta_{2k-1}).

    Preconditions of the concentration assumption at index k are checked:
    mass(B_k) > eps_bar and annulus mass B_k minus B_2k below
    2 eps_k + 2 eps_2k.  The boundary winding of F certifies existence;
    Newton (seeded at the local centroid, with quadrant subdivision as
    fallback) localizes the zero.  With several zeros the one of smallest
    |q| is returned and flagged.
    """
    if k < 1 or 2 * k > ladder.depth:
        raise CenterError(f"index {k} outside the ladder (need 1 <= k and 2k <= depth)")
    eps_bar = ladder.eps_bar
    total = mu.mass
    m_k = mass_in(mu, 0.0, float(ladder.delta[k]))
    if m_k <= eps_bar:
        raise CenterError(
            "degree argument fails: measure not concentrated: mass in B_k "
            f"{m_k:.6g} <= eps_bar {eps_bar:.6g}"
        )
    annulus = m_k - mass_in(mu, 0.0, float(ladder.delta[2 * k]))
    bound = 2.0 * float(ladder.eps[k]) + 2.0 * float(ladder.eps[2 * k])
    if annulus >= bound:
        raise CenterError(
            "degree argument fails: measure not concentrated: annulus mass "
            f"{annulus:.6g} >= {bound:.6g}"
        )
    radius = float(ladder.delta[2 * k - 1])
    tol_abs = tol * total
    if fd_step is None:
        fd_step = max(1e-10, 1e-5 * float(ladder.delta[2 * k]))

    def value(q: complex) -> complex:
        return _center_value(mu, q, eps_bar, None, 0.0)[0]

    def finish(q: complex, val: complex, winding: int, boundary_ok: bool, zeros, flag):
        scale_res = solve_neck_scale(mu, q, eps_bar)
        r = q + scale_res.s
        if abs(r) > float(ladder.delta[k]) * (1.0 + 1e-12):
            raise CenterError(
                f"cut radius escapes the working scale: |r| = {abs(r):.6g} > "
                f"delta_k = {float(ladder.delta[k]):.6g}"
            )
        return CenterResult(
            q=q,
            value=val,
            scale=scale_res,
            r=r,
            winding=winding,
            boundary_inward_ok=boundary_ok,
            zeros=tuple(zeros),
            multiple_zeros=flag,
        )

    f0 = value(0.0)
    if abs(f0) <= tol_abs:
        return finish(0.0 + 0.0j, f0, None, None, [0.0 + 0.0j], False)

    phis = np.arange(boundary_samples) * (2.0 * np.pi / boundary_samples)
    qs = radius * np.exp(1j * phis)
    vals = np.array([value(q) for q in qs])
    boundary_ok = bool(np.all(np.real(vals / (-qs)) > 0.0))
    winding = _winding_number(vals)
    if winding == 0:
        raise CenterError(
            "degree argument fails: measure not concentrated: boundary winding is zero"
        )

    def newton(q0: complex) -> tuple[complex, complex, bool]:
        q, fq = q0, value(q0)
        for _ in range(60):
            if abs(fq) <= tol_abs:
                return q, fq, True
            h = fd_step
            fx = (value(q + h) - value(q - h)) / (2.0 * h)
            fy = (value(q + 1j * h) - value(q - 1j * h)) / (2.0 * h)
            jac = np.array(
                [[fx.real, fy.real], [fx.imag, fy.imag]], dtype=float
            )
            try:
                step = np.linalg.solve(jac, -np.array([fq.real, fq.imag]))
            except np.linalg.LinAlgError:
                return q, fq, False
            dq = complex(step[0], step[1])
            lam = 1.0
            while lam > 1e-6:
                q_new = q + lam * dq
                if abs(q_new) > radius:
                    q_new *= radius / abs(q_new)
                f_new = value(q_new)
                if abs(f_new) < abs(fq) * (1.0 - 0.25 * lam) + 1e-300:
                    q, fq = q_new, f_new
                    break
                lam *= 0.5
            else:
                return q, fq, False
        return q, fq, abs(fq) <= tol_abs

    zeros: list[complex] = []
    if abs(winding) == 1:
        # degree one: a single zero; seed Newton at the local centroid
        pts, wts = mu.points, mu.weights
        core = np.abs(pts) <= float(ladder.delta[2 * k])
        core_mass = float(wts[core].sum())
        seeds = [0.0 + 0.0j]
        if core_mass > 0.0:
            centroid = complex(np.sum(wts[core] * pts[core]) / core_mass)
            if abs(centroid) <= radius:
                seeds.insert(0, centroid)
        for seed in seeds:
            q, fq, ok = newton(seed)
            if ok:
                zeros.append(q)
                break

    if not zeros:
        # quadrant subdivision of the bounding square by boundary winding
        side_samples = 60

        def cell_winding(cx: float, cy: float, half: float) -> int:
            s = np.linspace(-half, half, side_samples, endpoint=False)
            path = np.concatenate(
                [
                    (cx + s) + 1j * (cy - half),
                    (cx + half) + 1j * (cy + s),
                    (cx - s) + 1j * (cy + half),
                    (cx - half) + 1j * (cy - s),
                ]
            )
            return _winding_number(np.array([value(p) for p in path]))

        cells = [(0.0, 0.0, radius)]
        for _ in range(8):
            refined = []
            for cx, cy, half in cells:
                h2 = half / 2.0
                for dx in (-h2, h2):
                    for dy in (-h2, h2):
                        if cell_winding(cx + dx, cy + dy, h2) != 0:
                            refined.append((cx + dx, cy + dy, h2))
            if not refined:
                break
            cells = refined
        for cx, cy, _ in cells:
            q, fq, ok = newton(complex(cx, cy))
            if ok and all(abs(q - z) > 1e-9 * radius for z in zeros):
                zeros.append(q)

    if not zeros:
        raise CenterError(f"zero not localized: |F| stayed above {tol_abs:.3g}")
    zeros.sort(key=abs)
    q_best = zeros[0]
    return finish(q_best, value(q_best), winding, boundary_ok, zeros, len(zeros) > 1)


@dataclass(frozen=True)
class Marking:
    """A renormalized bubble record at one ladder index.

    case 1 carries the balanced center q; case 2 pins q at the node and the
    record stores the neck thinness ratio |pinch|/r instead.  Validation
    re-checks the defining properties on the renormalized measure, with a
    one-ulp band around the cut circle for atoms sitting exactly on it.
    """

    case: int
    q: complex | None
    r: complex
    t: float
    level: int
    renormalized: WeightedParticleMeasure
    eps_bar: float
    delta_bound: float
    mass_tol: float
    center_tol: float | None = None
    neck_ratio: float | None = None

    def __post_init__(self) -> None:
        if self.case not in (1, 2):
            raise MarkingError(f"case must be 1 or 2, got {self.case}")
        if not 0.0 < self.t < 1.0:
            raise MarkingError(f"t must lie in (0,1), got {self.t}")
        if (self.case == 1) != (self.q is not None):
            raise MarkingError("q is required exactly in case 1")
        if (self.case == 1) != (self.center_tol is not None):
            raise MarkingError("center_tol is required exactly in case 1")
        nu = self.renormalized
        z = np.abs(nu.points)
        outside_lo = float(nu.weights[z > 1.0 + 1e-12].sum())
        outside_hi = float(nu.weights[z >= 1.0 - 1e-12].sum())
        if not (outside_lo - self.mass_tol <= self.eps_bar <= outside_hi + self.mass_tol):
            raise MarkingError(
                f"renormalized mass outside D in [{outside_lo:.6g}, {outside_hi:.6g}] "
                f"misses eps_bar {self.eps_bar:.6g} by more than {self.mass_tol:.3g}"
            )
        if self.case == 1:
            sel = z < 1.0 - 1e-12
            band = float(nu.weights[np.abs(z - 1.0) <= 1e-12].sum())
            moment = abs(complex(np.sum(nu.weights[sel] * nu.points[sel])))
            if moment > self.center_tol * nu.mass + band:
                raise MarkingError(
                    f"renormalized center of mass {moment:.3g} exceeds tolerance"
                )
        if abs(self.r) > self.delta_bound * (1.0 + 1e-12):
            raise MarkingError(
                f"cut point |r| = {abs(self.r):.6g} outside B(0, {self.delta_bound:.6g})"
            )


def mark_smooth_bubble(
    mus: list[WeightedParticleMeasure],
    ladder: ScaleLadder,
    eps_bar: float,
    tol_center: float = 1e-8,
) -> list[Marking]:
    """Mark a concentration at a smooth point along a certified subsequence.

    Member i is handled at ladder index k = i + 1: the balanced center q_k
    is found in B(0, delta_{2k-1}), the neck scale t there, and the
    renormalized measure is the pushforward under R_{q_k,t}.
    """
    if abs(eps_bar - ladder.eps_bar) > 1e-12 * ladder.eps_bar:
        raise MarkingError("eps_bar disagrees with the ladder")
    if not mus:
        raise MarkingError("no members to mark")
    if len(mus) > ladder.working_index:
        raise MarkingError(
            f"{len(mus)} members exceed the ladder working index {ladder.working_index}"
        )
    markings = []
    for i, mu in enumerate(mus):
        k = i + 1
        try:
            center = find_balanced_center(mu, ladder, k, tol_center)
            nu = pushforward(mu, renormalization_map(center.q, center.scale.t))
            markings.append(
                Marking(
                    case=1,
                    q=center.q,
                    r=center.r,
                    t=center.scale.t,
                    level=k,
                    renormalized=nu,
                    eps_bar=eps_bar,
                    delta_bound=float(ladder.delta[k]),
                    mass_tol=center.scale.tol_effective,
                    center_tol=tol_center,
                )
            )
        except (NeckScaleError, CenterError, MarkingError) as exc:
            raise MarkingError(
                f"marking failed at member {i} (ladder index {k}): {exc}"
            ) from exc
    return markings


def build_nodal_pushforward(
    neck: CylinderField, delta: float
) -> WeightedParticleMeasure:
    """Energy of the neck annulus pushed to the x-side chart B(0, delta).

    Each cylinder sample becomes an atom at x = sqrt(pinch) e^{t+i theta}
    weighted by its quadrature share of the energy; the region inside
    B(0, |pinch|/delta) carries nothing.  Total mass equals the neck energy
    of the restricted cylinder.
    """
    if neck.pinch is None:
        raise NeckError("nodal pushforward needs plumbing metadata")
    p = abs(neck.pinch)
    if p >= delta * delta:
        raise NeckError(f"neck not thin: |pinch| = {p:.3g} >= delta^2 = {delta**2:.3g}")
    if neck.delta is not None and delta > neck.delta * (1.0 + 1e-12):
        raise NeckError("delta exceeds the sampled chart")
    half = float(np.log(delta / np.sqrt(p)))
    t = neck.t_nodes
    keep = np.nonzero(np.abs(t) <= half * (1.0 + 1e-12))[0]
    if len(keep) < 3:
        raise NeckError("restriction leaves a degenerate grid")
    t_sub = t[keep]
    h_t = t[1] - t[0]
    w_t = np.full(len(keep), h_t)
    w_t[0] *= 0.5
    w_t[-1] *= 0.5
    h_th = 2.0 * np.pi / neck.n_theta
    ft_sq = np.sum(neck.f_t[keep] * neck.f_t[keep], axis=-1)
    fth_sq = np.sum(neck.f_theta[keep] * neck.f_theta[keep], axis=-1)
    density = 0.5 * (ft_sq + fth_sq) * w_t[:, None] * h_th
    root = np.sqrt(complex(neck.pinch))
    x = root * np.exp(t_sub[:, None] + 1j * neck.theta_nodes[None, :])
    return WeightedParticleMeasure(
        x.ravel().astype(np.complex128),
        density.ravel().astype(np.float64),
        chart_radius=delta,
    )


def mark_nodal_bubble(
    necks: list[CylinderField],
    ladder: ScaleLadder,
    eps_bar: float,
) -> list[Marking]:
    """Mark a concentration at a regular node along a certified subsequence.

    The center is pinned at the node, so only the cut radius r_k is solved
    (mass outside B(0, r_k) equal to eps_bar) and the renormalization is
    x -> x/r_k.  The thinness ratios |pinch_k|/r_k must decrease toward 0;
    otherwise the inner disk is hiding mass and the marking is invalid.
    """
    if abs(eps_bar - ladder.eps_bar) > 1e-12 * ladder.eps_bar:
        raise MarkingError("eps_bar disagrees with the ladder")
    if not necks:
        raise MarkingError("no members to mark")
    if len(necks) > ladder.working_index:
        raise MarkingError(
            f"{len(necks)} members exceed the ladder working index {ladder.working_index}"
        )
    delta_chart = float(ladder.delta[0])
    markings = []
    ratios = []
    for i, neck in enumerate(necks):
        k = i + 1
        try:
            mu = build_nodal_pushforward(neck, delta_chart)
            res = solve_neck_scale(mu, 0.0, eps_bar)
            r = res.s
            ratio = abs(neck.pinch) / r
            nu = pushforward(mu, PlanarMoebius.affine(1.0 / r))
            markings.append(
                Marking(
                    case=2,
                    q=None,
                    r=r,
                    t=res.t,
                    level=k,
                    renormalized=nu,
                    eps_bar=eps_bar,
                    delta_bound=float(ladder.delta[k]),
                    mass_tol=res.tol_effective,
                    neck_ratio=ratio,
                )
            )
            ratios.append(ratio)
        except (NeckScaleError, NeckError, MarkingError) as exc:
            raise MarkingError(
                f"marking failed at member {i} (ladder index {k}): {exc}"
            ) from exc
    for a, b in zip(ratios, ratios[1:]):
        if b >= a:
            raise MarkingError(
                "nodal bubble hypothesis violated: mass hiding in inner disk "
                f"(thinness ratios {ratios} fail to decrease)"
            )
    return markings
