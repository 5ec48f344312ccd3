"""Cylindrical neck analysis.

A neck is sampled as a field on [-T, T] x S^1 with values on an embedded
target (unit sphere in R^3, flat torus in R^4, or the plane) together with
first derivatives.  The diagnostics split the energy as

    E = 2T * alpha + integral of Theta,   alpha(t) = 1/2 int (|f_t|^2 - |f_theta|^2) dtheta,
                                          Theta(t) = int |f_theta|^2 dtheta,

report the average length, image diameter, per-slice conformality defect in
Pohozaev form, and test the vanishing of neck energy and diameter over a
schedule of shrinking chart radii.

Quadrature is trapezoidal in t and the uniform periodic rule in theta; both
are spectrally accurate for the smooth periodic integrands arising here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NeckError

__all__ = [
    "SphereTarget",
    "FlatTorusTarget",
    "PlaneTarget",
    "CylinderField",
    "NeckDiagnostics",
    "ThetaBoundsReport",
    "ZeroNeckRow",
    "ZeroNeckReport",
    "PolarAnnulusField",
    "cylinder_field_from_sphere_chart",
    "diagnostics",
    "theta_bounds_check",
    "zero_neck_test",
    "pohozaev_residual",
    "profile_to_csv",
]

_TWO_PI = 2.0 * np.pi


class SphereTarget:
    """Unit sphere in R^3, charted by inverse stereographic projection."""

    name = "sphere"
    dim = 3

    @staticmethod
    def point(w: np.ndarray) -> np.ndarray:
        u, v = np.real(w), np.imag(w)
        n = 1.0 + u * u + v * v
        return np.stack([2.0 * u / n, 2.0 * v / n, (n - 2.0) / n], axis=-1)

    @staticmethod
    def push(w: np.ndarray, zeta: np.ndarray) -> np.ndarray:
        """Differential of the chart at w applied to the tangent zeta."""
        u, v = np.real(w), np.imag(w)
        n = 1.0 + u * u + v * v
        du = np.stack([2.0 * (n - 2.0 * u * u), -4.0 * u * v, 4.0 * u], axis=-1)
        dv = np.stack([-4.0 * u * v, 2.0 * (n - 2.0 * v * v), 4.0 * v], axis=-1)
        return (du * np.real(zeta)[..., None] + dv * np.imag(zeta)[..., None]) / (
            n * n
        )[..., None]

    @staticmethod
    def residual(points: np.ndarray) -> float:
        return float(np.max(np.abs(np.linalg.norm(points, axis=-1) - 1.0)))


class FlatTorusTarget:
    """Flat rectangular torus R^2/(Lx Z x Ly Z) embedded as a circle product in R^4."""

    name = "flat_torus"
    dim = 4

    def __init__(self, lx: float = _TWO_PI, ly: float = _TWO_PI) -> None:
        if lx <= 0 or ly <= 0:
            raise NeckError("torus circumferences must be positive")
        self.lx = float(lx)
        self.ly = float(ly)
        self._rx = self.lx / _TWO_PI
        self._ry = self.ly / _TWO_PI

    def point(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        rx, ry = self._rx, self._ry
        return np.stack(
            [
                rx * np.cos(u / rx),
                rx * np.sin(u / rx),
                ry * np.cos(v / ry),
                ry * np.sin(v / ry),
            ],
            axis=-1,
        )

    def push(self, u: np.ndarray, v: np.ndarray, du: np.ndarray, dv: np.ndarray) -> np.ndarray:
        rx, ry = self._rx, self._ry
        return np.stack(
            [
                -np.sin(u / rx) * du,
                np.cos(u / rx) * du,
                -np.sin(v / ry) * dv,
                np.cos(v / ry) * dv,
            ],
            axis=-1,
        )

    def residual(self, points: np.ndarray) -> float:
        r1 = np.hypot(points[..., 0], points[..., 1]) - self._rx
        r2 = np.hypot(points[..., 2], points[..., 3]) - self._ry
        return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


class PlaneTarget:
    """R^2 with the euclidean metric; used by model fields."""

    name = "plane"
    dim = 2

    @staticmethod
    def point(w: np.ndarray) -> np.ndarray:
        return np.stack([np.real(w), np.imag(w)], axis=-1)

    push = point

    @staticmethod
    def residual(points: np.ndarray) -> float:
        return 0.0


@dataclass(frozen=True)
class CylinderField:
    """Sampled map on the cylinder [-T, T] x S^1.

    points, f_t, f_theta : arrays of shape (n_t + 1, n_theta, dim); the t
    grid is uniform including both endpoints, the theta grid is uniform
    over [0, 2 pi) without the duplicate endpoint.
    pinch, delta : optional plumbing metadata for the chart
    x = sqrt(pinch) e^{t + i theta}, in which case T = log(delta/sqrt|pinch|).
    """

    half_length: float
    points: np.ndarray
    f_t: np.ndarray
    f_theta: np.ndarray
    target: object
    pinch: complex | None = None
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.half_length <= 0:
            raise NeckError("cylinder half-length must be positive")
        shape = self.points.shape
        if self.f_t.shape != shape or self.f_theta.shape != shape:
            raise NeckError("derivative sample shapes do not match the points")
        if len(shape) != 3 or shape[0] < 3 or shape[1] < 4:
            raise NeckError("degenerate grid")
        if shape[2] != self.target.dim:
            raise NeckError("sample dimension does not match the target")
        res = self.target.residual(self.points)
        if res > 1e-10:
            raise NeckError(f"sample points leave the target manifold by {res:.3e}")
        if (self.pinch is None) != (self.delta is None):
            raise NeckError("pinch and delta must be given together")
        if self.pinch is not None:
            t_expected = np.log(self.delta / np.sqrt(abs(self.pinch)))
            if abs(t_expected - self.half_length) > 1e-9 * (1.0 + self.half_length):
                raise NeckError("half-length inconsistent with pinch and delta")

    @property
    def n_t(self) -> int:
        return self.points.shape[0] - 1

    @property
    def n_theta(self) -> int:
        return self.points.shape[1]

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(-self.half_length, self.half_length, self.n_t + 1)

    @property
    def theta_nodes(self) -> np.ndarray:
        return np.arange(self.n_theta) * (_TWO_PI / self.n_theta)

    def finite_difference_defect(self) -> tuple[float, float]:
        """Max deviation of (f_t, f_theta) from second-order differences of points.

        t uses central differences on interior nodes, theta wraps around.
        """
        h_t = 2.0 * self.half_length / self.n_t
        d_t = (self.points[2:] - self.points[:-2]) / (2.0 * h_t)
        def_t = float(np.max(np.linalg.norm(d_t - self.f_t[1:-1], axis=-1)))
        h_th = _TWO_PI / self.n_theta
        d_th = (np.roll(self.points, -1, axis=1) - np.roll(self.points, 1, axis=1)) / (
            2.0 * h_th
        )
        def_th = float(np.max(np.linalg.norm(d_th - self.f_theta, axis=-1)))
        return def_t, def_th

    def restrict(self, half_length: float) -> "CylinderField":
        """Sub-cylinder |t| <= half_length, snapped inward to grid nodes."""
        if half_length <= 0:
            raise NeckError("restriction half-length must be positive")
        if half_length > self.half_length * (1.0 + 1e-12):
            raise NeckError("restriction exceeds the field")
        t = self.t_nodes
        keep = np.abs(t) <= half_length * (1.0 + 1e-12)
        idx = np.nonzero(keep)[0]
        if len(idx) < 3:
            raise NeckError("restriction leaves a degenerate grid")
        sub_t = float(t[idx[-1]])
        return CylinderField(
            half_length=sub_t,
            points=self.points[idx],
            f_t=self.f_t[idx],
            f_theta=self.f_theta[idx],
            target=self.target,
        )


def cylinder_field_from_sphere_chart(
    m: Callable[[np.ndarray], np.ndarray],
    m_prime: Callable[[np.ndarray], np.ndarray],
    pinch: complex,
    delta: float,
    n_t: int = 128,
    n_theta: int = 64,
) -> CylinderField:
    """Sample x -> m(x) on the annulus |pinch|/delta <= |x| <= delta.

    m is a sphere-valued chart map given with its complex derivative; the
    cylinder coordinate is x = sqrt(pinch) e^{t + i theta}.
    """
    root = np.sqrt(complex(pinch))
    half_length = float(np.log(delta / abs(root)))
    if half_length <= 0:
        raise NeckError("delta must exceed sqrt|pinch|")
    t = np.linspace(-half_length, half_length, n_t + 1)
    theta = np.arange(n_theta) * (_TWO_PI / n_theta)
    x = root * np.exp(t[:, None] + 1j * theta[None, :])
    w = m(x)
    dw = m_prime(x) * x
    return CylinderField(
        half_length=half_length,
        points=SphereTarget.point(w),
        f_t=SphereTarget.push(w, dw),
        f_theta=SphereTarget.push(w, 1j * dw),
        target=SphereTarget,
        pinch=complex(pinch),
        delta=float(delta),
    )


@dataclass(frozen=True)
class NeckDiagnostics:
    alpha: float
    alpha_deviation: float
    t_nodes: np.ndarray
    theta_profile: np.ndarray  # Theta(t) per t node
    alpha_profile: np.ndarray  # alpha(t) per t node
    energy: float
    theta_integral: float
    avg_length: float
    diameter: float
    pohozaev_residual: float
    half_length: float


def _pairwise_diameter(points: np.ndarray, cap: int = 2048) -> float:
    pts = points.reshape(-1, points.shape[-1])
    if len(pts) > cap:
        stride = int(np.ceil(len(pts) / cap))
        pts = pts[::stride]
    sq = np.sum(pts * pts, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    return float(np.sqrt(max(float(d2.max()), 0.0)))


def diagnostics(field: CylinderField) -> NeckDiagnostics:
    """Energy split, average length, diameter, and conformality defects.

    Asserts the split identity E = 2T alpha + int Theta and the diameter
    bound diam <= 2 max-slice-arc + avg_length on the computed values.
    """
    T = field.half_length
    h_th = _TWO_PI / field.n_theta
    t = field.t_nodes
    w_t = np.full(len(t), 2.0 * T / field.n_t)
    w_t[0] *= 0.5
    w_t[-1] *= 0.5

    ft_sq = np.sum(field.f_t * field.f_t, axis=-1)
    fth_sq = np.sum(field.f_theta * field.f_theta, axis=-1)
    alpha_profile = 0.5 * np.sum(ft_sq - fth_sq, axis=1) * h_th
    theta_profile = np.sum(fth_sq, axis=1) * h_th
    slice_energy = np.sum(ft_sq + fth_sq, axis=1) * h_th

    alpha = float(np.sum(w_t * alpha_profile) / (2.0 * T))
    alpha_deviation = float(np.max(np.abs(alpha_profile - alpha)))
    theta_integral = float(np.sum(w_t * theta_profile))
    energy = float(0.5 * np.sum(w_t * slice_energy))

    split = 2.0 * T * alpha + theta_integral
    if abs(energy - split) > 1e-9 * (1.0 + energy):
        raise NeckError(
            f"energy split identity violated: {energy!r} vs {split!r}"
        )

    avg_length = float(
        np.sum(w_t * np.sum(np.linalg.norm(field.f_t, axis=-1), axis=1)) * h_th / _TWO_PI
    )
    arc = np.sum(np.linalg.norm(field.f_theta, axis=-1), axis=1) * h_th
    diameter = _pairwise_diameter(field.points)
    bound = 2.0 * float(np.max(arc)) + avg_length
    if diameter > bound + 1e-8 * (1.0 + bound):
        raise NeckError(
            f"diameter bound violated: {diameter!r} > 2*max-arc + avg = {bound!r}"
        )

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(
            slice_energy > 0.0, 2.0 * np.abs(alpha_profile) / slice_energy, 0.0
        )
    return NeckDiagnostics(
        alpha=alpha,
        alpha_deviation=alpha_deviation,
        t_nodes=t,
        theta_profile=theta_profile,
        alpha_profile=alpha_profile,
        energy=energy,
        theta_integral=theta_integral,
        avg_length=avg_length,
        diameter=diameter,
        pohozaev_residual=float(np.max(ratio)),
        half_length=T,
    )


@dataclass(frozen=True)
class ThetaBoundsReport:
    """Slack of the convexity and endpoint-domination bounds for Theta.

    convexity_slack : min over interior nodes of Theta''(t) - Theta(t)
    integral_slack : 2(Theta(T1) + Theta(T2)) - int_{T1}^{T2} Theta dt
    sqrt_slack : 4(sqrt Theta(T1) + sqrt Theta(T2)) - int sqrt(Theta) dt
    positive : min Theta > 0 on [T1, T2]
    energy_ok : field energy within the stated small-energy threshold
    """

    convexity_slack: float
    integral_slack: float
    sqrt_slack: float
    positive: bool
    energy_ok: bool
    violations: tuple[str, ...]


def theta_bounds_check(
    field: CylinderField, t1: float, t2: float, energy_threshold: float = 1.0
) -> ThetaBoundsReport:
    """Empirical check of Theta'' >= Theta > 0 and the endpoint bounds.

    Report-only: violations are listed, never raised.  Endpoints snap to
    the nearest grid nodes.
    """
    if not (-field.half_length <= t1 < t2 <= field.half_length):
        raise NeckError("require -T <= T1 < T2 <= T")
    diag = diagnostics(field)
    t = diag.t_nodes
    th = diag.theta_profile
    i1 = int(np.argmin(np.abs(t - t1)))
    i2 = int(np.argmin(np.abs(t - t2)))
    if i2 - i1 < 2:
        raise NeckError("window too narrow for the grid")
    h = t[1] - t[0]
    seg = th[i1 : i2 + 1]
    dd = (seg[2:] - 2.0 * seg[1:-1] + seg[:-2]) / (h * h)
    convexity_slack = float(np.min(dd - seg[1:-1]))
    w = np.full(len(seg), h)
    w[0] *= 0.5
    w[-1] *= 0.5
    integral = float(np.sum(w * seg))
    sqrt_integral = float(np.sum(w * np.sqrt(np.maximum(seg, 0.0))))
    integral_slack = 2.0 * (seg[0] + seg[-1]) - integral
    sqrt_slack = 4.0 * (np.sqrt(max(seg[0], 0.0)) + np.sqrt(max(seg[-1], 0.0))) - sqrt_integral
    positive = bool(np.min(seg) > 0.0)
    energy_ok = diag.energy <= energy_threshold
    violations = []
    if convexity_slack < 0:
        violations.append("convexity")
    if integral_slack < 0:
        violations.append("integral")
    if sqrt_slack < 0:
        violations.append("sqrt_integral")
    if not positive:
        violations.append("positivity")
    if not energy_ok:
        violations.append("energy_threshold")
    return ThetaBoundsReport(
        convexity_slack=convexity_slack,
        integral_slack=float(integral_slack),
        sqrt_slack=float(sqrt_slack),
        positive=positive,
        energy_ok=energy_ok,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class ZeroNeckRow:
    delta: float
    max_energy: float
    max_diameter: float
    predicted_energy: float  # max over late members of |2 T_k(delta) * alpha_k|
    passed: bool
    predicted_pass: bool


@dataclass(frozen=True)
class ZeroNeckReport:
    passed: bool
    chosen_delta: float | None
    rows: tuple[ZeroNeckRow, ...]
    late_count: int


def zero_neck_test(
    necks: list[CylinderField], eps: float, delta_schedule: list[float]
) -> ZeroNeckReport:
    """Do neck energy and image diameter vanish along the family?

    For each delta in the (decreasing) schedule, restrict the late half of
    the sequence to the sub-cylinder matching the delta-ball around the node
    and take the sup of energy and diameter; PASS iff both fall below eps at
    some delta.  Each row also reports the alpha-based energy prediction
    2 T_k(delta) alpha_k, which vanishes exactly for conformal necks.
    """
    if not delta_schedule:
        raise NeckError("empty delta schedule")
    if any(
        d2 >= d1 for d1, d2 in zip(delta_schedule, delta_schedule[1:])
    ):
        raise NeckError("delta schedule must be strictly decreasing")
    if not necks:
        raise NeckError("empty neck sequence")
    for f in necks:
        if f.pinch is None:
            raise NeckError("zero-neck test needs plumbing metadata on every field")
    late = necks[-((len(necks) + 1) // 2) :]
    rows = []
    chosen = None
    for delta in delta_schedule:
        energies = []
        diams = []
        preds = []
        for f in late:
            sub_t = np.log(delta / np.sqrt(abs(f.pinch)))
            if sub_t <= 0:
                raise NeckError(
                    f"delta {delta} does not exceed sqrt|pinch| of a late member"
                )
            sub = f.restrict(min(sub_t, f.half_length))
            d = diagnostics(sub)
            energies.append(d.energy)
            diams.append(d.diameter)
            preds.append(abs(2.0 * sub.half_length * d.alpha))
        row = ZeroNeckRow(
            delta=float(delta),
            max_energy=float(max(energies)),
            max_diameter=float(max(diams)),
            predicted_energy=float(max(preds)),
            passed=max(energies) <= eps and max(diams) <= eps,
            predicted_pass=max(preds) <= eps,
        )
        rows.append(row)
        if row.passed and chosen is None:
            chosen = row.delta
    return ZeroNeckReport(
        passed=chosen is not None,
        chosen_delta=chosen,
        rows=tuple(rows),
        late_count=len(late),
    )


@dataclass(frozen=True)
class PolarAnnulusField:
    """Derivative samples of a map on an annulus, polar grid.

    f_r, f_phi : arrays (n_r, n_phi, dim) of embedded derivative vectors,
    with f_phi the raw phi-derivative (not arc-length normalized); phis are
    uniform over [0, 2 pi).
    """

    radii: np.ndarray
    f_r: np.ndarray
    f_phi: np.ndarray

    def __post_init__(self) -> None:
        if self.f_r.shape != self.f_phi.shape or len(self.f_r.shape) != 3:
            raise NeckError("derivative sample shapes do not match")
        if len(self.radii) != self.f_r.shape[0]:
            raise NeckError("radius count does not match the samples")
        if np.any(np.asarray(self.radii) <= 0):
            raise NeckError("radii must be positive")


def pohozaev_residual(
    field: PolarAnnulusField, radii: list[float] | None = None
) -> float:
    """Max over radii of |int |F_phi|^2 - r^2 |F_r|^2 dphi| / (sum of both).

    Vanishes identically for conformal maps; 0/0 counts as 0.  Requested
    radii must match grid radii to 1e-12 relative.
    """
    grid = np.asarray(field.radii, dtype=float)
    if radii is None:
        idx = np.arange(len(grid))
    else:
        idx = []
        for r in radii:
            j = int(np.argmin(np.abs(grid - r)))
            if abs(grid[j] - r) > 1e-12 * max(1.0, abs(r)):
                raise NeckError(f"radius {r} outside the sampled annulus grid")
            idx.append(j)
        idx = np.asarray(idx)
    fr_sq = np.sum(field.f_r * field.f_r, axis=-1)
    fphi_sq = np.sum(field.f_phi * field.f_phi, axis=-1)
    worst = 0.0
    for j in idx:
        r2 = grid[j] * grid[j]
        num = abs(float(np.sum(fphi_sq[j] - r2 * fr_sq[j])))
        den = float(np.sum(fphi_sq[j] + r2 * fr_sq[j]))
        if den > 0.0:
            worst = max(worst, num / den)
    return worst


def profile_to_csv(diag: NeckDiagnostics) -> str:
    """Theta and alpha profiles as 't,theta,alpha_slice' rows."""
    lines = ["t,theta,alpha_slice"]
    for t, th, al in zip(diag.t_nodes, diag.theta_profile, diag.alpha_profile):
        lines.append(f"{float(t)!r},{float(th)!r},{float(al)!r}")
    return "\n".join(lines) + "\n"
