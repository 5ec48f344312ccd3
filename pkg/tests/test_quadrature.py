"""Adaptive polar quadrature against an independent integrator."""

import math

import numpy as np
from scipy import integrate

from bubbletree import adaptive_polar_quadrature


def fs_density(k):
    def density(z):
        a = np.abs(z) ** 2
        return 4.0 * k * k / (1.0 + k * k * a) ** 2

    return density


def test_fs_bubble_disk_mass_closed_form():
    for k in (1.0, 10.0, 100.0):
        for radius in (0.5, 1.0, 2.0):
            res = adaptive_polar_quadrature(fs_density(k), 0j, radius)
            exact = 4.0 * math.pi * (k * radius) ** 2 / (1.0 + (k * radius) ** 2)
            assert abs(res.value - exact) <= 1e-8 * exact
            assert res.error <= 1e-6 * exact


def test_matches_scipy_on_offset_gaussian():
    # independent route: scipy adaptive 2d quadrature in cartesian form
    c = 0.3 + 0.4j

    def density(z):
        return np.exp(-8.0 * np.abs(z - c) ** 2)

    res = adaptive_polar_quadrature(density, 0j, 1.5, rel_tol=1e-10)

    def integrand(y, x):
        return math.exp(-8.0 * ((x - c.real) ** 2 + (y - c.imag) ** 2))

    ref, ref_err = integrate.dblquad(
        integrand,
        -1.5,
        1.5,
        lambda x: -math.sqrt(max(1.5**2 - x * x, 0.0)),
        lambda x: math.sqrt(max(1.5**2 - x * x, 0.0)),
        epsabs=1e-12,
        epsrel=1e-12,
    )
    assert abs(res.value - ref) <= 1e-8 * abs(ref) + 10.0 * ref_err


def test_annulus_excludes_inner_disk():
    density = fs_density(10.0)
    full = adaptive_polar_quadrature(density, 0j, 1.0)
    inner = adaptive_polar_quadrature(density, 0j, 0.25)
    ann = adaptive_polar_quadrature(density, 0j, 1.0, r_inner=0.25)
    assert abs(ann.value - (full.value - inner.value)) <= 1e-9 * full.value


def test_particle_emission_preserves_total_and_balls():
    k = 100.0
    res = adaptive_polar_quadrature(
        fs_density(k),
        0j,
        1.0,
        emit_particles=True,
        emit_rule="cdf",
        emit_mass_frac=2.5e-3,
    )
    pts, wts = res.points, res.weights
    assert abs(wts.sum() - res.value) <= 1e-9 * res.value
    # ball masses at reference radii r = j/k with closed-form disk masses
    r = np.abs(pts)
    for j in (1.0, 2.5, 5.0):
        radius = j / k
        ball = wts[r <= radius].sum()
        exact = 4.0 * math.pi * j * j / (1.0 + j * j)
        assert abs(ball - exact) <= 0.01 * exact, (j, ball, exact)


def test_panel_budget_caps_refinement():
    res = adaptive_polar_quadrature(
        fs_density(1e4), 0j, 1.0, rel_tol=1e-12, max_panels=80
    )
    assert res.n_panels <= 80
    assert res.error > 0.0


def test_zero_density_integrates_to_zero():
    res = adaptive_polar_quadrature(lambda z: np.zeros_like(z, dtype=float), 0j, 1.0)
    assert res.value == 0.0
