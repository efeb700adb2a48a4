"""Conditioned fidelities, lower bounds, and the surface evaluator."""

import math

import numpy as np
import pytest

from cavity_teleport import (
    AbcValues,
    BlochAngles,
    DegenerateDenominator,
    NotDistinguishable,
    SurfaceGrid,
    abc,
    build_expansion_t3,
    condition_on_field_and_atom2,
    desk_defaults,
    fidelity_pair,
    fidelity_pair_half_angle,
    fidelity_surface,
    lower_bounds,
    reduced_atom1_state,
)


def times_of(desk, eps_tau1, eps_tau2=None):
    eps_tau2 = eps_tau1 if eps_tau2 is None else eps_tau2
    return (eps_tau1 / desk.coupling, eps_tau2 / desk.coupling)


def test_abc_values_guardrails():
    with pytest.raises(ValueError):
        AbcValues(-1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        AbcValues(1.0, 1.0, 2.5)
    AbcValues(1.0, 1.0, -2.0)  # the interference term may take either sign


def test_abc_unseparated_limit(desk):
    # identical branch packets: same-sign and opposite-sign weights coincide
    # and the interference saturates its bound
    v = abc(0.7, -0.4, times_of(desk, 0.0), desk)
    assert v.a_val == pytest.approx(v.b_val, rel=1e-12)
    assert abs(v.c_val) == pytest.approx(v.a_val + v.b_val, rel=1e-12)


def test_abc_symmetries(desk):
    times = times_of(desk, 10.0)
    for x1, x2 in ((1.2, 3.0), (-0.3, 2.2), (4.0, -4.0)):
        v = abc(x1, x2, times, desk)
        mirrored = abc(x1, -x2, times, desk)
        assert v.b_val == pytest.approx(mirrored.a_val, rel=1e-12)
        assert v.a_val == pytest.approx(mirrored.b_val, rel=1e-12)
        assert v.c_val == pytest.approx(mirrored.c_val, rel=1e-12)
        assert abs(v.c_val) <= v.a_val + v.b_val


def test_pipeline_matches_density_matrix(desk):
    rng = np.random.default_rng(321)
    for _ in range(25):
        eps_tau = rng.uniform(0.5, 10.0)
        times = times_of(desk, eps_tau)
        angles = BlochAngles(
            theta=rng.uniform(0.05, math.pi - 0.05), phi=rng.uniform(0.0, 2.0 * math.pi)
        )
        state = condition_on_field_and_atom2(build_expansion_t3(angles, times, desk))
        x1, x2 = rng.uniform(-6.0, 6.0, size=2)
        rho = reduced_atom1_state(x1, x2, state)
        f_alpha, f_prime = fidelity_pair(x1, x2, angles, times, desk)
        assert f_alpha == pytest.approx(rho.fidelity(angles.ket()), abs=1e-12)
        assert f_prime == pytest.approx(rho.fidelity(angles.flipped_ket()), abs=1e-12)


def test_half_angle_variant_differs(desk):
    angles = BlochAngles(theta=1.1)
    times = times_of(desk, 10.0)
    full = fidelity_pair(2.0, -3.0, angles, times, desk)
    half = fidelity_pair_half_angle(2.0, -3.0, angles, times, desk)
    assert abs(full[0] - half[0]) > 0.1


def test_lower_bounds_dominate(desk):
    rng = np.random.default_rng(654)
    times = times_of(desk, 10.0)
    checked = 0
    for _ in range(500):
        x1, x2 = rng.uniform(-6.0, 6.0, size=2)
        theta = rng.uniform(0.0, math.pi)
        try:
            lb_alpha, lb_prime = lower_bounds(x1, x2, times, desk)
        except NotDistinguishable:
            continue
        f_alpha, f_prime = fidelity_pair(x1, x2, BlochAngles(theta=theta), times, desk)
        assert f_alpha >= lb_alpha - 1e-12
        assert f_prime >= lb_prime - 1e-12
        checked += 1
    assert checked > 400


def test_lower_bounds_swap_symmetry(desk):
    times = times_of(desk, 10.0)
    for x1, x2 in ((2.3, 4.1), (1.0, -0.7), (-3.3, 2.0)):
        direct = lower_bounds(x1, x2, times, desk)
        mirrored = lower_bounds(x1, -x2, times, desk)
        assert direct[0] == pytest.approx(mirrored[1], rel=1e-12)
        assert direct[1] == pytest.approx(mirrored[0], rel=1e-12)


def test_lower_bounds_theta_free_but_possibly_vacuous(desk):
    # near the midline the worst-case interference pushes the off-quadrant
    # bound below zero: vacuous, and reported as-is by the scalar path
    lb_alpha, lb_prime = lower_bounds(0.4, 3.0, times_of(desk, 10.0), desk)
    assert lb_prime < 0.0
    assert 0.0 < lb_alpha < 1.0


def test_not_distinguishable_raises(desk):
    with pytest.raises(NotDistinguishable):
        lower_bounds(0.5, 0.5, times_of(desk, 0.0), desk)
    # on the exact midline both branch packets coincide at any time
    with pytest.raises(NotDistinguishable):
        lower_bounds(0.0, 2.0, times_of(desk, 10.0), desk)


def test_degenerate_denominator_raises(desk):
    with pytest.raises(DegenerateDenominator):
        fidelity_pair(60.0, 60.0, BlochAngles(theta=1.0), times_of(desk, 10.0), desk)


def test_surface_grid_validation():
    with pytest.raises(ValueError):
        SurfaceGrid(x_min=2.0, x_max=-2.0)
    with pytest.raises(ValueError):
        SurfaceGrid(n_points=1)
    assert len(SurfaceGrid(n_points=11).values()) == 11


def test_surface_values_clamped_and_flagged(desk):
    surface = fidelity_surface(SurfaceGrid(-6.0, 6.0, 61), 10.0, desk)
    ok = ~surface.degenerate
    assert np.all(surface.f_alpha_lb[ok] >= 0.0)
    assert np.all(surface.f_alpha_lb[ok] <= 1.0)
    assert np.all(np.isnan(surface.f_alpha_lb[surface.degenerate]))
    # the exact midline column collapses the bound denominator
    u = surface.grid.values()
    mid = int(np.argmin(np.abs(u)))
    assert u[mid] == 0.0
    assert surface.degenerate[mid, :].all()
    # spot-check one grid point against the scalar path
    i, j = 10, 45
    lb = lower_bounds(u[i], u[j], times_of(desk, 10.0), desk)
    assert surface.f_alpha_lb[i, j] == pytest.approx(max(lb[0], 0.0), rel=1e-12)
    assert surface.f_alpha_prime_lb[i, j] == pytest.approx(max(lb[1], 0.0), rel=1e-12)


def test_surface_zero_time_all_degenerate(desk):
    surface = fidelity_surface(SurfaceGrid(-4.0, 4.0, 21), 0.0, desk)
    assert bool(surface.degenerate.all())


def test_surface_unequal_times(desk):
    surface = fidelity_surface(SurfaceGrid(-6.0, 6.0, 41), 10.0, desk, eps_tau2=5.0)
    assert surface.eps_tau1 == 10.0 and surface.eps_tau2 == 5.0
    u = surface.grid.values()
    lb = lower_bounds(u[5], u[30], times_of(desk, 10.0, 5.0), desk)
    assert surface.f_alpha_lb[5, 30] == pytest.approx(max(lb[0], 0.0), rel=1e-12)


def test_surface_rejects_negative_times(desk):
    with pytest.raises(ValueError):
        fidelity_surface(SurfaceGrid(), -1.0, desk)
