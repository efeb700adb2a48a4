"""Analytic atomic wavepackets deflected inside a cavity node.

Near a node the atom-field coupling is linear in position, so each dressed
branch of the joint state feels a constant force of opposite sign.  An atom
prepared in a minimum-uncertainty Gaussian therefore splits into two
uniformly accelerated Gaussian branches.  This module provides the initial
packet, the deflected branch amplitudes, their densities and moments, and
closed-form overlaps between any two such packets.

All quantities here are SI; front ends convert to packet-width units at the
boundary.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import constants

_QUARTIC_ROOT_2PI = (2.0 * math.pi) ** 0.25


class LinearizationWarning(UserWarning):
    """Packet width approaches the scale where the linear coupling model degrades."""


class BranchSign(enum.IntEnum):
    """Sign of the dressed branch: +1 accelerates toward negative x, -1 opposite."""

    PLUS = 1
    MINUS = -1


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of one atom-cavity crossing, SI units.

    Attributes
    ----------
    mass : float
        Atomic mass [kg].
    coupling : float
        Vacuum Rabi coupling strength [1/s].
    wavelength : float
        Cavity mode wavelength [m].
    sigma_x : float
        Width of the initial minimum-uncertainty packet [m].
    hbar : float
        Reduced Planck constant [J s], exposed as a field so unit-system
        experiments stay possible.
    """

    mass: float
    coupling: float
    wavelength: float
    sigma_x: float
    hbar: float = constants.hbar

    def __post_init__(self) -> None:
        for name in ("mass", "coupling", "wavelength", "sigma_x", "hbar"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a strictly positive finite number, got {value!r}")
        if self.sigma_x > 0.2 * self.wavelength:
            warnings.warn(
                "packet width above 0.2 wavelength: linear-coupling model not meaningful",
                LinearizationWarning,
                stacklevel=2,
            )
        if self.sigma_x * self.wave_number >= 1.0:
            raise ValueError(
                "sigma_x * (2 pi / wavelength) must stay below 1 for the nodal "
                f"linearization, got {self.sigma_x * self.wave_number:.4g}"
            )
        if not math.isfinite(self.acceleration):
            raise ValueError("derived branch acceleration is not finite")

    @property
    def wave_number(self) -> float:
        """Mode wave number 2*pi/wavelength [1/m]."""
        return 2.0 * math.pi / self.wavelength

    @property
    def acceleration(self) -> float:
        """Branch acceleration magnitude hbar*k*coupling/mass for one photon pair [m/s^2]."""
        return self.hbar * self.wave_number * self.coupling / self.mass

    def branch_acceleration(self, fock_n: int) -> float:
        """Acceleration magnitude sqrt(fock_n + 1) * acceleration [m/s^2]."""
        return math.sqrt(fock_n + 1) * self.acceleration

    def complex_width(self, tau: float) -> complex:
        """Complex squared width sigma_x^2 + i*hbar*tau/(2m) of a packet aged tau [m^2]."""
        return self.sigma_x**2 + 0.5j * self.hbar * tau / self.mass

    def spread(self, tau: float) -> float:
        """Position standard deviation after free spreading for a time tau [m]."""
        return abs(self.complex_width(tau)) / self.sigma_x


def desk_defaults() -> PhysicalParams:
    """Reference desk-scale operating point used throughout the test suite and CLI."""
    return PhysicalParams(mass=1e-26, coupling=1e5, wavelength=1e-5, sigma_x=1e-6)


@dataclass(frozen=True)
class DeflectedWavepacket:
    """One accelerated Gaussian branch, aged ``tau`` inside the node.

    ``tau = 0`` reproduces the initial packet for either branch sign.
    """

    branch: BranchSign
    fock_n: int
    tau: float
    params: PhysicalParams

    def __post_init__(self) -> None:
        if self.branch not in (BranchSign.PLUS, BranchSign.MINUS):
            raise ValueError(f"branch must be +1 or -1, got {self.branch!r}")
        if not (isinstance(self.fock_n, int) and self.fock_n >= 0):
            raise ValueError(f"fock_n must be a non-negative integer, got {self.fock_n!r}")
        if not (math.isfinite(self.tau) and self.tau >= 0.0):
            raise ValueError(f"tau must be finite and non-negative, got {self.tau!r}")


def _coefficients(wp: DeflectedWavepacket) -> tuple[complex, float, float, complex]:
    """Return (prefactor, phase wave number q, center, complex squared width).

    The amplitude is prefactor * exp(-i q x) * exp(-(x - center)^2 / (4 width)).
    """
    p = wp.params
    accel = p.branch_acceleration(wp.fock_n)
    sign = int(wp.branch)
    q = sign * p.mass * accel * wp.tau / p.hbar
    center = -sign * 0.5 * accel * wp.tau**2
    width = p.complex_width(wp.tau)
    # principal square root keeps Re > 0, so the prefactor branch is fixed
    prefactor = 1.0 / (_QUARTIC_ROOT_2PI * np.sqrt(width / p.sigma_x))
    return prefactor, q, center, width


def initial_amplitude(x, params: PhysicalParams):
    """Minimum-uncertainty Gaussian amplitude at position ``x`` [m^-1/2].

    Purely real: (2 pi sigma_x^2)^(-1/4) * exp(-x^2 / (4 sigma_x^2)).
    """
    x = np.asarray(x, dtype=float)
    sigma = params.sigma_x
    out = np.exp(-(x**2) / (4.0 * sigma**2)) / (_QUARTIC_ROOT_2PI * math.sqrt(sigma))
    return out if out.ndim else float(out)


def deflected_amplitude(x, wp: DeflectedWavepacket):
    """Complex amplitude of a deflected branch at position ``x`` [m^-1/2].

    The packet carries momentum -branch * m * a_n * tau and is centered at
    -branch * a_n * tau^2 / 2 with the freely spread complex width.
    """
    x = np.asarray(x, dtype=float)
    prefactor, q, center, width = _coefficients(wp)
    u = x - center
    out = prefactor * np.exp(-1j * q * x - u * u / (4.0 * width))
    return out if out.ndim else complex(out)


def position_density(x, wp: DeflectedWavepacket):
    """Position density |amplitude|^2 of a deflected branch [1/m]."""
    amp = deflected_amplitude(x, wp)
    out = np.real(amp * np.conj(amp))
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def position_mean(wp: DeflectedWavepacket) -> float:
    """Centroid of the branch density, -branch * a_n * tau^2 / 2 [m]."""
    return -int(wp.branch) * 0.5 * wp.params.branch_acceleration(wp.fock_n) * wp.tau**2


def position_spread(wp: DeflectedWavepacket) -> float:
    """Standard deviation of the branch density after spreading [m]."""
    return wp.params.spread(wp.tau)


def wavepacket_overlap(bra: DeflectedWavepacket, ket: DeflectedWavepacket) -> complex:
    """Closed-form inner product <bra|ket> of two accelerated Gaussians.

    Both packets must share the same physical parameters; branch, photon
    index and age may differ.  Evaluates the Gaussian integral

        integral conj(bra)(x) ket(x) dx = conj(Nb) Nk sqrt(pi/A) exp(B^2/(4A) + C)

    with A, B, C read off the combined quadratic exponent.  The result is
    exact for this family of states.
    """
    if bra.params != ket.params:
        raise ValueError("overlap requires identical physical parameters")
    nb, qb, cb, wb = _coefficients(bra)
    nk, qk, ck, wk = _coefficients(ket)
    wb = np.conj(wb)
    a_coef = 1.0 / (4.0 * wb) + 1.0 / (4.0 * wk)
    b_coef = cb / (2.0 * wb) + ck / (2.0 * wk) + 1j * (qb - qk)
    c_coef = -cb * cb / (4.0 * wb) - ck * ck / (4.0 * wk)
    value = (
        np.conj(nb)
        * nk
        * np.sqrt(np.pi / a_coef)
        * np.exp(b_coef * b_coef / (4.0 * a_coef) + c_coef)
    )
    return complex(value)


def branch_overlap(tau: float, fock_n: int, params: PhysicalParams) -> complex:
    """Overlap <plus branch | minus branch> of the two deflected packets.

    Real and positive for this family; decays monotonically in tau as the
    branches separate in phase space.  Equals 1 at tau = 0.
    """
    plus = DeflectedWavepacket(BranchSign.PLUS, fock_n, tau, params)
    minus = DeflectedWavepacket(BranchSign.MINUS, fock_n, tau, params)
    return wavepacket_overlap(plus, minus)
