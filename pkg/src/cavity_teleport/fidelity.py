"""Teleportation fidelity conditioned on the two position readouts.

Everything here reduces to three real coefficients built from the four
deflected-branch densities at the readout positions: the same-sign weight,
the opposite-sign weight, and an interference term.  The conditioned
fidelities follow from the receiver qubit's density matrix; discarding the
angle dependence pessimistically yields position-only lower bounds, the
quantities mapped over the readout plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import BlochAngles
from .wavepackets import (
    BranchSign,
    DeflectedWavepacket,
    PhysicalParams,
    deflected_amplitude,
)

COEFFICIENT_FLOOR = 1e-30
RELATIVE_SEPARATION_FLOOR = 1e-12
RANGE_SLACK = 1e-9


class DegenerateDenominator(Exception):
    """Raised when the conditioning weight underflows and fidelity is undefined."""


class NotDistinguishable(Exception):
    """Raised when the branch packets overlap too strongly for any lower bound."""


class FidelityRangeError(Exception):
    """Raised when a computed fidelity falls outside [0, 1] beyond float slack."""


@dataclass(frozen=True)
class AbcValues:
    """Position-readout coefficients: same-sign, opposite-sign, interference.

    ``a_val`` weighs branch pairs deflected the same way, ``b_val`` the
    opposite ways, and ``c_val`` carries the first atom's branch coherence.
    All three scale as inverse length squared; every fidelity built from
    them is a ratio, so the scale drops out.
    """

    a_val: float
    b_val: float
    c_val: float

    def __post_init__(self) -> None:
        if self.a_val < 0.0 or self.b_val < 0.0:
            raise ValueError("same-sign and opposite-sign weights must be non-negative")
        slack = 1e-12 * (self.a_val + self.b_val) + 1e-300
        if abs(self.c_val) > self.a_val + self.b_val + slack:
            raise ValueError("interference term exceeds the total weight")


def _branch_values(
    x_sigma: np.ndarray | float, tau: float, params: PhysicalParams
) -> tuple[np.ndarray | complex, np.ndarray | complex]:
    x = np.asarray(x_sigma, dtype=float) * params.sigma_x
    plus = deflected_amplitude(x, DeflectedWavepacket(BranchSign.PLUS, 0, tau, params))
    minus = deflected_amplitude(x, DeflectedWavepacket(BranchSign.MINUS, 0, tau, params))
    return plus, minus


def _abc_arrays(
    x1_sigma: np.ndarray | float,
    x2_sigma: np.ndarray | float,
    times: tuple[float, float],
    params: PhysicalParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p1, m1 = _branch_values(x1_sigma, times[0], params)
    p2, m2 = _branch_values(x2_sigma, times[1], params)
    d1p, d1m = np.abs(p1) ** 2, np.abs(m1) ** 2
    d2p, d2m = np.abs(p2) ** 2, np.abs(m2) ** 2
    a = d1p * d2p + d1m * d2m
    b = d1p * d2m + d1m * d2p
    c = (d2p + d2m) * 2.0 * np.real(p1 * np.conj(m1))
    return a, b, c


def abc(
    x1_sigma: float,
    x2_sigma: float,
    times: tuple[float, float],
    params: PhysicalParams,
) -> AbcValues:
    """Readout coefficients at one position pair (positions in width units)."""
    a, b, c = _abc_arrays(x1_sigma, x2_sigma, times, params)
    return AbcValues(float(a), float(b), float(c))


def _check_range(value: float, name: str) -> float:
    if not (-RANGE_SLACK <= value <= 1.0 + RANGE_SLACK):
        raise FidelityRangeError(f"{name} = {value!r} lies outside [0, 1]")
    return value


def fidelity_pair(
    x1_sigma: float,
    x2_sigma: float,
    angles: BlochAngles,
    times: tuple[float, float],
    params: PhysicalParams,
) -> tuple[float, float]:
    """Conditioned fidelities to the sent state and to its z-flipped companion.

    These reproduce the overlaps of the receiver's density matrix with the
    two target states exactly, so each lies in [0, 1] whenever the
    conditioning weight is non-degenerate.
    """
    v = abc(x1_sigma, x2_sigma, times, params)
    sin_sq = math.sin(angles.theta) ** 2
    denom = v.a_val + v.b_val + v.c_val * math.cos(angles.theta)
    if denom <= COEFFICIENT_FLOOR:
        raise DegenerateDenominator(
            f"conditioning weight {denom!r} at (x1={x1_sigma}, x2={x2_sigma}) is degenerate"
        )
    f_alpha = _check_range(1.0 - v.b_val * sin_sq / denom, "fidelity to the sent state")
    f_alpha_prime = _check_range(1.0 - v.a_val * sin_sq / denom, "fidelity to the flipped state")
    return f_alpha, f_alpha_prime


def fidelity_pair_half_angle(
    x1_sigma: float,
    x2_sigma: float,
    angles: BlochAngles,
    times: tuple[float, float],
    params: PhysicalParams,
) -> tuple[float, float]:
    """Variant with half-angle weighting in both numerator and denominator.

    Kept as a separate path for comparison; it does not reproduce the
    receiver density matrix's overlaps, so no range guarantee applies and
    values are returned unchecked.
    """
    v = abc(x1_sigma, x2_sigma, times, params)
    half = angles.theta / 2.0
    sin_sq = math.sin(half) ** 2
    denom = v.a_val + v.b_val + v.c_val * math.cos(half)
    if denom <= COEFFICIENT_FLOOR:
        raise DegenerateDenominator(
            f"conditioning weight {denom!r} at (x1={x1_sigma}, x2={x2_sigma}) is degenerate"
        )
    return 1.0 - v.b_val * sin_sq / denom, 1.0 - v.a_val * sin_sq / denom


def lower_bounds(
    x1_sigma: float,
    x2_sigma: float,
    times: tuple[float, float],
    params: PhysicalParams,
) -> tuple[float, float]:
    """Angle-independent lower bounds on the two conditioned fidelities.

    Obtained by giving the interference term its worst sign; values may be
    negative where the bound is vacuous and are returned unclamped.
    """
    v = abc(x1_sigma, x2_sigma, times, params)
    worst = v.a_val + v.b_val - abs(v.c_val)
    # scale-free cutoff: on the exact midline the cancellation leaves only
    # rounding residue, a few ulps of the total weight
    if worst <= COEFFICIENT_FLOOR + RELATIVE_SEPARATION_FLOOR * (v.a_val + v.b_val):
        raise NotDistinguishable(
            f"branch packets at (x1={x1_sigma}, x2={x2_sigma}) admit no finite lower bound"
        )
    return 1.0 - v.b_val / worst, 1.0 - v.a_val / worst


@dataclass(frozen=True)
class SurfaceGrid:
    """Uniform square grid of readout positions, in width units."""

    x_min: float = -10.0
    x_max: float = 10.0
    n_points: int = 201

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_min < self.x_max):
            raise ValueError(f"grid bounds must satisfy x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_points < 2:
            raise ValueError(f"n_points must be at least 2, got {self.n_points}")

    def values(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True)
class FidelitySurface:
    """Lower-bound maps over the readout plane.

    ``f_alpha_lb[i, j]`` pairs ``x1 = grid.values()[i]`` with
    ``x2 = grid.values()[j]``.  Vacuous negative bounds are stored as zero;
    points where the readouts cannot resolve the branches (no weight left,
    or the midline where both branches look alike) are flagged degenerate
    and hold NaN.
    """

    grid: SurfaceGrid
    eps_tau1: float
    eps_tau2: float
    f_alpha_lb: np.ndarray
    f_alpha_prime_lb: np.ndarray
    degenerate: np.ndarray


def fidelity_surface(
    grid: SurfaceGrid,
    eps_tau: float,
    params: PhysicalParams,
    eps_tau2: float | None = None,
) -> FidelitySurface:
    """Evaluate both lower-bound maps on a grid, at rescaled interaction times.

    ``eps_tau`` is the first atom's coupling-time product; the second atom's
    defaults to the same value.
    """
    if eps_tau < 0.0 or (eps_tau2 is not None and eps_tau2 < 0.0):
        raise ValueError("rescaled interaction times must be non-negative")
    et2 = eps_tau if eps_tau2 is None else eps_tau2
    times = (eps_tau / params.coupling, et2 / params.coupling)
    u = grid.values()
    a, b, c = _abc_arrays(u[:, None], u[None, :], times, params)
    worst = a + b - np.abs(c)
    degenerate = worst <= COEFFICIENT_FLOOR + RELATIVE_SEPARATION_FLOOR * (a + b)
    safe = np.where(degenerate, 1.0, worst)
    with np.errstate(invalid="ignore"):
        f_alpha = np.where(degenerate, np.nan, np.maximum(1.0 - b / safe, 0.0))
        f_alpha_prime = np.where(degenerate, np.nan, np.maximum(1.0 - a / safe, 0.0))
    return FidelitySurface(
        grid=grid,
        eps_tau1=eps_tau,
        eps_tau2=et2,
        f_alpha_lb=f_alpha,
        f_alpha_prime_lb=f_alpha_prime,
        degenerate=degenerate,
    )
