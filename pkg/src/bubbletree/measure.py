"""Weighted particle measures on planar charts, scale ladders, and
concentration detection for sequences of energy-density measures.

A measure is a finite sum of weighted atoms in a complex chart.  All
renormalization maps used downstream are Moebius (here: affine) transforms
of the chart, so pushforwards are exact: points move, weights do not.

The scale ladder fixes the dyadic radii delta_k and tolerances eps_k used
to certify that a sequence of measures concentrates a definite amount of
energy at a point.  Detection extracts, per candidate site, a diagonal
subsequence: the member certified at ladder level j must reproduce the
stabilized excess mass at every scale delta_m, m <= 2j, within eps_m.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConcentrationError, LadderError, MeasureError

__all__ = [
    "WeightedParticleMeasure",
    "PlanarMoebius",
    "ScaleLadder",
    "ConcentrationSite",
    "ConcentrationReport",
    "mass_in",
    "mass_outside",
    "first_moment",
    "pushforward",
    "restrict",
    "build_scale_ladder",
    "detect_concentrations",
    "measure_to_csv",
    "measure_from_csv",
]

_MASS_CACHE_RTOL = 1e-12


@dataclass(frozen=True)
class WeightedParticleMeasure:
    """Finite nonnegative measure given by weighted atoms in a chart.

    points : complex atom locations, all within ``chart_radius`` of 0
    weights : nonnegative atom masses
    chart_radius : radius of the chart disk the measure lives on
    """

    points: NDArray[np.complex128]
    weights: NDArray[np.float64]
    chart_radius: float
    _mass: float = field(default=0.0, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = np.ascontiguousarray(self.points, dtype=np.complex128)
        wts = np.ascontiguousarray(self.weights, dtype=np.float64)
        if pts.ndim != 1 or wts.ndim != 1 or pts.shape != wts.shape:
            raise MeasureError(
                f"points/weights must be matching 1-d arrays, got {pts.shape} vs {wts.shape}"
            )
        if not np.all(np.isfinite(wts)) or not np.all(np.isfinite(pts)):
            raise MeasureError("non-finite atom or weight")
        if wts.size and wts.min() < 0.0:
            raise MeasureError(f"negative weight {wts.min()!r}")
        if self.chart_radius <= 0.0:
            raise MeasureError(f"chart_radius must be positive, got {self.chart_radius}")
        if pts.size:
            rmax = float(np.abs(pts).max())
            if rmax > self.chart_radius * (1.0 + 1e-12):
                raise MeasureError(
                    f"atom at |z| = {rmax:.6g} outside chart of radius {self.chart_radius:.6g}"
                )
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "_mass", float(wts.sum()))

    @property
    def mass(self) -> float:
        """Total mass; cached at construction and revalidated on access."""
        current = float(self.weights.sum())
        if abs(current - self._mass) > _MASS_CACHE_RTOL * max(abs(self._mass), 1.0):
            raise MeasureError("mass cache out of sync with weights")
        return self._mass

    def __len__(self) -> int:
        return int(self.points.size)

    @staticmethod
    def empty(chart_radius: float = 1.0) -> "WeightedParticleMeasure":
        return WeightedParticleMeasure(
            np.zeros(0, dtype=np.complex128), np.zeros(0, dtype=np.float64), chart_radius
        )


@dataclass(frozen=True)
class PlanarMoebius:
    """Planar Moebius transform z -> (a z + b) / (c z + d), ad - bc != 0.

    Affine maps are the c = 0, d = 1 case.  Used for chart translations and
    the cross-ratio renormalizations; injective away from the pole -d/c.
    """

    a: complex
    b: complex
    c: complex = 0.0
    d: complex = 1.0

    def __post_init__(self) -> None:
        det = self.a * self.d - self.b * self.c
        if abs(det) == 0.0:
            raise MeasureError("degenerate Moebius transform (ad - bc = 0)")

    @staticmethod
    def affine(scale: complex, offset: complex = 0.0) -> "PlanarMoebius":
        return PlanarMoebius(a=scale, b=offset)

    @staticmethod
    def translation(offset: complex) -> "PlanarMoebius":
        return PlanarMoebius(a=1.0, b=offset)

    def pole(self) -> complex | None:
        if self.c == 0.0:
            return None
        return -self.d / self.c

    def __call__(self, z: NDArray[np.complex128] | complex) -> NDArray[np.complex128] | complex:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def inverse(self) -> "PlanarMoebius":
        return PlanarMoebius(a=self.d, b=-self.b, c=-self.c, d=self.a)


def mass_in(mu: WeightedParticleMeasure, center: complex, radius: float) -> float:
    """Mass of the closed disk: sum of weights of atoms with |z - center| <= radius."""
    if radius < 0.0:
        raise MeasureError(f"negative radius {radius}")
    if len(mu) == 0:
        return 0.0
    return float(mu.weights[np.abs(mu.points - center) <= radius].sum())


def mass_outside(mu: WeightedParticleMeasure, center: complex, radius: float) -> float:
    """Mass at distance >= radius from center; atoms exactly on the circle count as outside."""
    if len(mu) == 0:
        return 0.0
    return float(mu.weights[np.abs(mu.points - center) >= radius].sum())


def first_moment(
    mu: WeightedParticleMeasure, center: complex = 0.0, radius: float | None = None
) -> complex:
    """First moment sum(w_i z_i) over the closed disk |z - center| <= radius.

    ``radius=None`` integrates over the full chart.
    """
    if len(mu) == 0:
        return 0.0 + 0.0j
    if radius is None:
        return complex(np.sum(mu.weights * mu.points))
    sel = np.abs(mu.points - center) <= radius
    return complex(np.sum(mu.weights[sel] * mu.points[sel]))


def pushforward(
    mu: WeightedParticleMeasure,
    transform: PlanarMoebius,
    chart_radius: float | None = None,
) -> WeightedParticleMeasure:
    """Pushforward under a planar Moebius/affine transform.

    Weights are unchanged and total mass is invariant.  The transform must
    be injective on the support: an atom at (or numerically on top of) the
    pole would be sent to infinity.
    """
    pole = transform.pole()
    if pole is not None and len(mu):
        dmin = float(np.abs(mu.points - pole).min())
        if dmin < 1e-13 * max(1.0, abs(pole)):
            raise MeasureError(
                f"transform not injective on support: atom within {dmin:.3g} of the pole"
            )
    new_points = np.asarray(transform(mu.points), dtype=np.complex128)
    if not np.all(np.isfinite(new_points)):
        raise MeasureError("transform sent an atom to infinity")
    if chart_radius is None:
        chart_radius = float(np.abs(new_points).max()) * (1.0 + 1e-12) if len(mu) else mu.chart_radius
    return WeightedParticleMeasure(new_points, mu.weights.copy(), chart_radius)


def restrict(
    mu: WeightedParticleMeasure, center: complex, radius: float
) -> WeightedParticleMeasure:
    """Submeasure of atoms in the closed disk |z - center| <= radius, recentred at 0."""
    sel = np.abs(mu.points - center) <= radius
    return WeightedParticleMeasure(
        (mu.points[sel] - center).astype(np.complex128),
        mu.weights[sel].astype(np.float64),
        radius,
    )


# ---------------------------------------------------------------------------
# scale ladder


@dataclass(frozen=True)
class ScaleLadder:
    """Dyadic scales delta_0 > delta_1 > ... and tolerances eps_k for detection.

    Admissibility (checked at the working index k = max{k : 2k <= depth}):
      (1) 2 eps_k + 2 eps_{2k} < eps_bar
      (2) 3 delta_{2k-1} < delta_k
    plus delta_k <= delta_{k-1}/2, eps_k <= eps_{k-1}/2, eps_0 = eps_bar/4.
    """

    delta: NDArray[np.float64]
    eps: NDArray[np.float64]
    eps_bar: float
    depth: int

    def __post_init__(self) -> None:
        delta = np.ascontiguousarray(self.delta, dtype=np.float64)
        eps = np.ascontiguousarray(self.eps, dtype=np.float64)
        if self.eps_bar <= 0.0:
            raise LadderError(f"eps_bar must be positive, got {self.eps_bar}")
        if self.depth < 2:
            raise LadderError(f"depth must be >= 2, got {self.depth}")
        if delta.shape != (self.depth + 1,) or eps.shape != (self.depth + 1,):
            raise LadderError("delta/eps must have length depth + 1")
        if delta[0] <= 0.0:
            raise LadderError("delta_0 must be positive")
        if abs(eps[0] - self.eps_bar / 4.0) > 1e-15 * self.eps_bar:
            raise LadderError(f"eps_0 must equal eps_bar/4, got {eps[0]}")
        if np.any(delta[1:] > delta[:-1] / 2.0 * (1.0 + 1e-15)):
            raise LadderError("delta_k <= delta_(k-1)/2 violated")
        if np.any(eps[1:] > eps[:-1] / 2.0 * (1.0 + 1e-15)):
            raise LadderError("eps_k <= eps_(k-1)/2 violated")
        k = self.depth // 2
        if k < 1:
            raise LadderError("depth too small: no working index with 2k <= depth")
        if 2.0 * eps[k] + 2.0 * eps[2 * k] >= self.eps_bar:
            raise LadderError(
                f"condition (1) violated at working index {k}: "
                f"2 eps_{k} + 2 eps_{2 * k} = {2 * eps[k] + 2 * eps[2 * k]:.6g} >= eps_bar"
            )
        if 3.0 * delta[2 * k - 1] >= delta[k]:
            raise LadderError(
                f"condition (2) violated at working index {k}: "
                f"3 delta_{2 * k - 1} = {3 * delta[2 * k - 1]:.6g} >= delta_{k} = {delta[k]:.6g}"
            )
        delta.setflags(write=False)
        eps.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eps", eps)

    @property
    def working_index(self) -> int:
        return self.depth // 2

    @property
    def finest_scale(self) -> float:
        return float(self.delta[-1])


def build_scale_ladder(delta0: float, eps_bar: float, depth: int) -> ScaleLadder:
    """Dyadic ladder delta_k = delta0 2^-k, eps_0 = eps_bar/4, eps_k = eps_0 2^-k."""
    if depth < 2:
        raise LadderError(f"depth must be >= 2, got {depth}")
    ks = np.arange(depth + 1, dtype=np.float64)
    delta = delta0 * 0.5**ks
    eps = (eps_bar / 4.0) * 0.5**ks
    return ScaleLadder(delta=delta, eps=eps, eps_bar=eps_bar, depth=depth)


# ---------------------------------------------------------------------------
# concentration detection


@dataclass(frozen=True)
class ConcentrationSite:
    """A certified energy-concentration site.

    location : chart point of the site
    mass : stabilized excess mass m_p (last member, finest tested scale)
    kind : 'smooth' or 'nodal' (nodal = site at the origin of a nodal chart)
    subsequence : ladder-level assignments ((j, member_index), ...) with
        strictly increasing member indices; member j passed every scale
        m <= 2j
    excess_last : excess of the last member at each tested scale (m = 1..2k)
    """

    location: complex
    mass: float
    kind: str
    subsequence: tuple[tuple[int, int], ...]
    excess_last: tuple[float, ...]


@dataclass(frozen=True)
class ConcentrationReport:
    sites: tuple[ConcentrationSite, ...]
    threshold: float
    finest_scale: float

    def __post_init__(self) -> None:
        for s in self.sites:
            if s.mass < self.threshold:
                raise ConcentrationError(
                    f"site mass {s.mass:.6g} below detection threshold {self.threshold:.6g}"
                )
        locs = [s.location for s in self.sites]
        for i in range(len(locs)):
            for j in range(i + 1, len(locs)):
                d = abs(locs[i] - locs[j])
                if d < 2.0 * self.finest_scale:
                    raise ConcentrationError(
                        f"sites {locs[i]:.6g} and {locs[j]:.6g} separated by {d:.6g} "
                        f"< 2 * finest scale {self.finest_scale:.6g}"
                    )


def _ball_excess(
    mu: WeightedParticleMeasure,
    mu_limit: WeightedParticleMeasure,
    center: complex,
    radius: float,
) -> float:
    return mass_in(mu, center, radius) - mass_in(mu_limit, center, radius)


def _candidate_locations(
    mu_last: WeightedParticleMeasure,
    mu_limit: WeightedParticleMeasure,
    ladder: ScaleLadder,
    threshold: float,
) -> list[complex]:
    """Grid scan for local excess-mass maxima at the finest scale.

    Bins both measures on a square grid of pitch ~ finest scale, sums 3x3
    blocks (a ball-like window), then greedily picks maxima with 2*delta_K
    suppression.  Candidate locations are excess-weighted block centroids.
    """
    dK = ladder.finest_scale
    scan_r = mu_last.chart_radius
    n = int(min(1024, max(8, np.ceil(2.0 * scan_r / dK))))
    pitch = 2.0 * scan_r / n
    edges = np.linspace(-scan_r, scan_r, n + 1)

    def grid(mu: WeightedParticleMeasure) -> NDArray[np.float64]:
        if len(mu) == 0:
            return np.zeros((n, n))
        h, _, _ = np.histogram2d(
            mu.points.real, mu.points.imag, bins=(edges, edges), weights=mu.weights
        )
        return h

    excess = grid(mu_last) - grid(mu_limit)
    # 3x3 block sums approximate delta_K-ball masses on the grid
    block = np.zeros_like(excess)
    padded = np.pad(excess, 1)
    for di in range(3):
        for dj in range(3):
            block += padded[di : di + n, dj : dj + n]
    xc = 0.5 * (edges[:-1] + edges[1:])
    centers_re, centers_im = np.meshgrid(xc, xc, indexing="ij")

    out: list[complex] = []
    work = block.copy()
    for _ in range(64):
        idx = np.unravel_index(int(np.argmax(work)), work.shape)
        if work[idx] < 0.5 * threshold:
            break
        i0, j0 = idx
        # excess-weighted centroid of the 3x3 block, guarded against cancellation
        wsum = 0.0
        csum = 0.0 + 0.0j
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                i, j = i0 + di, j0 + dj
                if 0 <= i < n and 0 <= j < n and excess[i, j] > 0:
                    wsum += excess[i, j]
                    csum += excess[i, j] * (centers_re[i, j] + 1j * centers_im[i, j])
        loc = csum / wsum if wsum > 0 else centers_re[idx] + 1j * centers_im[idx]
        out.append(complex(loc))
        # suppress the neighborhood of the accepted candidate
        dist = np.abs((centers_re + 1j * centers_im) - loc)
        work[dist < 2.0 * dK + 2.0 * pitch] = -np.inf
    return out


def detect_concentrations(
    mus: Sequence[WeightedParticleMeasure],
    mu_limit: WeightedParticleMeasure,
    ladder: ScaleLadder,
    chart_kind: str = "smooth",
    threshold: float | None = None,
) -> ConcentrationReport:
    """Certified concentration sites of a measure sequence against its limit.

    A candidate site p (grid scan of the last member) is admitted when
      * the last member's excess over mu_limit in B(p, delta_m) is >= eps_bar
        at every tested scale m = 1..2k (k the working index), and
      * |excess(delta_m) - m_p| < eps_m at all those scales, where m_p is the
        last member's excess at the finest tested scale, and
      * a diagonal subsequence exists: strictly increasing earlier members
        certified at levels j = 1..k, level j requiring the bounds at m <= 2j.

    Raises ConcentrationError("subsequence not extracted") when a candidate
    holds threshold excess but the sequence does not stabilize (the last
    member fails its own multi-scale consistency, or no earlier member
    corroborates level 1).
    """
    if chart_kind not in ("smooth", "nodal"):
        raise MeasureError(f"unknown chart kind {chart_kind!r}")
    if len(mus) < 2:
        raise ConcentrationError("need at least two sequence members")
    eps_bar = ladder.eps_bar
    if threshold is None:
        threshold = eps_bar
    kw = ladder.working_index
    scales = ladder.delta[1 : 2 * kw + 1]  # tested scales m = 1..2k
    epses = ladder.eps[1 : 2 * kw + 1]
    mu_last = mus[-1]
    last_idx = len(mus) - 1

    sites: list[ConcentrationSite] = []
    for loc in _candidate_locations(mu_last, mu_limit, ladder, threshold):
        if chart_kind == "nodal" and abs(loc) < 2.0 * ladder.finest_scale:
            loc = 0.0 + 0.0j  # the node is the chart origin
            kind = "nodal"
        else:
            kind = "smooth"
        excess_last = np.array([_ball_excess(mu_last, mu_limit, loc, d) for d in scales])
        if np.any(excess_last < eps_bar):
            continue  # not a concentration at every tested scale
        m_p = float(excess_last[-1])
        if m_p < threshold:
            continue
        devs = np.abs(excess_last - m_p)
        if np.any(devs >= epses):
            raise ConcentrationError(
                "subsequence not extracted: last member inconsistent across scales "
                f"at site {loc:.4g} (max deviation {devs.max():.3g})"
            )
        # greedy diagonal extraction over earlier members
        assignment: list[tuple[int, int]] = []
        member = 0
        for j in range(1, kw + 1):
            found = None
            limit = last_idx if j < kw else last_idx + 1
            while member < limit:
                ok = True
                for m in range(1, 2 * j + 1):
                    e = _ball_excess(mus[member], mu_limit, loc, ladder.delta[m])
                    if abs(e - m_p) >= ladder.eps[m]:
                        ok = False
                        break
                if ok:
                    found = member
                    member += 1
                    break
                member += 1
            if found is None:
                break
            assignment.append((j, found))
        if not assignment or assignment[0][1] == last_idx:
            raise ConcentrationError(
                f"subsequence not extracted: no earlier member corroborates site {loc:.4g}"
            )
        # the last member always certifies the deepest level reached
        levels_found = len(assignment)
        if assignment[-1][1] != last_idx:
            if levels_found < kw:
                assignment.append((levels_found + 1, last_idx))
            else:
                assignment[-1] = (kw, last_idx)
        sites.append(
            ConcentrationSite(
                location=complex(loc),
                mass=m_p,
                kind=kind,
                subsequence=tuple(assignment),
                excess_last=tuple(float(e) for e in excess_last),
            )
        )
    sites.sort(key=lambda s: (-s.mass, s.location.real, s.location.imag))
    return ConcentrationReport(
        sites=tuple(sites), threshold=float(threshold), finest_scale=ladder.finest_scale
    )


# ---------------------------------------------------------------------------
# serialization


def measure_to_csv(mu: WeightedParticleMeasure) -> str:
    """CSV text, one row per particle: re, im, weight."""
    buf = io.StringIO()
    buf.write("re,im,weight\n")
    for p, w in zip(mu.points, mu.weights):
        buf.write(f"{p.real!r},{p.imag!r},{w!r}\n")
    return buf.getvalue()


def measure_from_csv(text: str, chart_radius: float | None = None) -> WeightedParticleMeasure:
    rows = [line for line in text.strip().splitlines()[1:] if line]
    pts = np.zeros(len(rows), dtype=np.complex128)
    wts = np.zeros(len(rows), dtype=np.float64)
    for i, line in enumerate(rows):
        re_s, im_s, w_s = line.split(",")
        pts[i] = float(re_s) + 1j * float(im_s)
        wts[i] = float(w_s)
    if chart_radius is None:
        chart_radius = float(np.abs(pts).max()) * (1.0 + 1e-12) if len(rows) else 1.0
    return WeightedParticleMeasure(pts, wts, chart_radius)
