"""Joint state of the two-atom, one-mode system after both cavity crossings.

The first atom enters excited with the field in vacuum; the second atom
carries the state to be sent.  Expanding every dressed component in the bare
product basis (atom internals x photon number x translational branches)
yields a finite sum of product terms.  From that expansion the module builds
the outcome table of the projective cascade: photon-number readout followed
by the second atom's internal state, with same-family translational overlaps
entering through a Gram matrix when requested.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .wavepackets import (
    BranchSign,
    DeflectedWavepacket,
    PhysicalParams,
    wavepacket_overlap,
)

AMPLITUDE_FLOOR = 1e-15

VERDICT_SUCCESS_PENDING = "successful-pending-positions"
VERDICT_FAILURE = "unsuccessful"

# outcome rows of the measurement cascade in presentation order:
# (photon number, atom-2 internal, verdict)
ROW_LAYOUT = (
    (2, "g", VERDICT_FAILURE),
    (1, "e", VERDICT_FAILURE),
    (1, "g", VERDICT_SUCCESS_PENDING),
    (0, "g", VERDICT_FAILURE),
    (0, "e", VERDICT_SUCCESS_PENDING),
)


@dataclass(frozen=True)
class BlochAngles:
    """Polar/azimuthal angles of the single-qubit state to teleport.

    ket = cos(theta/2) |e> + exp(i phi) sin(theta/2) |g>, with theta in
    [0, pi] and phi in [0, 2 pi).
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and 0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")
        if not (math.isfinite(self.phi) and 0.0 <= self.phi < 2.0 * math.pi):
            raise ValueError(f"phi must lie in [0, 2 pi), got {self.phi!r}")

    def ket(self) -> np.ndarray:
        """State vector in the (|e>, |g>) basis."""
        return np.array(
            [math.cos(self.theta / 2.0), cmath.exp(1j * self.phi) * math.sin(self.theta / 2.0)],
            dtype=complex,
        )

    def flipped_ket(self) -> np.ndarray:
        """Companion state reached when the branch readouts disagree.

        Differs from ket() by a z-axis pi rotation (up to global phase), so a
        single fixed correction restores the original.
        """
        return np.array(
            [math.cos(self.theta / 2.0), -cmath.exp(1j * self.phi) * math.sin(self.theta / 2.0)],
            dtype=complex,
        )


@dataclass(frozen=True)
class WavepacketLabel:
    """Symbolic reference to one translational factor of a product term.

    ``branch is None`` marks the undisturbed initial packet of that atom;
    otherwise the label points at the deflected branch for the given photon
    index.
    """

    atom: int
    fock_n: int | None = None
    branch: BranchSign | None = None

    def __post_init__(self) -> None:
        if self.atom not in (1, 2):
            raise ValueError(f"atom must be 1 or 2, got {self.atom!r}")
        if (self.fock_n is None) != (self.branch is None):
            raise ValueError("fock_n and branch must be both set or both None")

    @property
    def is_initial(self) -> bool:
        return self.branch is None

    def resolve(self, times: tuple[float, float], params: PhysicalParams) -> DeflectedWavepacket:
        """Concrete wavepacket for this label; the initial packet is the tau=0 case."""
        if self.is_initial:
            return DeflectedWavepacket(BranchSign.PLUS, 0, 0.0, params)
        return DeflectedWavepacket(self.branch, self.fock_n, times[self.atom - 1], params)


@dataclass(frozen=True)
class JointTerm:
    """One product-basis term of the joint state.

    Basis factors: atom-1 internal, atom-1 packet, atom-2 internal, atom-2
    packet, photon number.
    """

    amplitude: complex
    atom1: str
    atom2: str
    fock: int
    wp1: WavepacketLabel
    wp2: WavepacketLabel

    def basis_key(self) -> tuple:
        return (self.atom1, self.atom2, self.fock, self.wp1, self.wp2)


@dataclass(frozen=True)
class SystemExpansion:
    """Product-basis expansion of the joint state once both atoms have crossed."""

    terms: tuple[JointTerm, ...]
    angles: BlochAngles
    times: tuple[float, float]
    params: PhysicalParams

    def label_overlap(self, bra: WavepacketLabel, ket: WavepacketLabel, mode: str) -> complex:
        """<bra|ket> between two same-atom packet labels under the given mode."""
        if bra.atom != ket.atom:
            raise ValueError("labels refer to different atoms")
        if mode == "asymptotic":
            return 1.0 + 0.0j if bra == ket else 0.0j
        if mode == "exact":
            return wavepacket_overlap(bra.resolve(self.times, self.params),
                                      ket.resolve(self.times, self.params))
        raise ValueError(f"mode must be 'asymptotic' or 'exact', got {mode!r}")

    def gram_norm(self, mode: str = "exact") -> float:
        """Norm of the expansion with translational overlaps folded in.

        Cross terms only survive between terms sharing every discrete factor,
        weighted by the packet Gram matrix of each atom.
        """
        total = 0.0j
        for i, ti in enumerate(self.terms):
            for tj in self.terms:
                if ti.atom1 != tj.atom1 or ti.atom2 != tj.atom2 or ti.fock != tj.fock:
                    continue
                ov1 = self.label_overlap(tj.wp1, ti.wp1, mode)
                ov2 = self.label_overlap(tj.wp2, ti.wp2, mode)
                total += np.conj(tj.amplitude) * ti.amplitude * ov1 * ov2
        return float(total.real)


def _label(atom: int, fock_n: int | None = None, branch: BranchSign | None = None) -> WavepacketLabel:
    return WavepacketLabel(atom=atom, fock_n=fock_n, branch=branch)


def build_expansion_t3(
    angles: BlochAngles, times: tuple[float, float], params: PhysicalParams
) -> SystemExpansion:
    """Expand the post-crossing joint state in the bare product basis.

    Construction: the excited first atom and vacuum field split into the two
    zero-photon dressed branches; the second atom then dresses against the
    resulting zero- and one-photon field components, while its ground
    component against vacuum passes through untouched.  Rewriting every
    dressed factor in terms of bare internals and photon numbers gives the
    term list below.  Terms with equal basis factors are merged and
    negligible amplitudes dropped.
    """
    if not (math.isfinite(times[0]) and math.isfinite(times[1]) and times[0] >= 0 and times[1] >= 0):
        raise ValueError(f"interaction times must be finite and non-negative, got {times!r}")
    c = math.cos(angles.theta / 2.0)
    s = cmath.exp(1j * angles.phi) * math.sin(angles.theta / 2.0)

    accumulator: dict[tuple, complex] = {}

    def add(amplitude: complex, atom1: str, atom2: str, fock: int,
            wp1: WavepacketLabel, wp2: WavepacketLabel) -> None:
        key = (atom1, atom2, fock, wp1, wp2)
        accumulator[key] = accumulator.get(key, 0.0j) + amplitude

    for mu1 in (BranchSign.PLUS, BranchSign.MINUS):
        m1 = int(mu1)
        wp1 = _label(1, 0, mu1)
        # ground second atom with vacuum field never dresses: packet stays initial
        add(s / 2.0, "e", "g", 0, wp1, _label(2))
        for eta in (BranchSign.PLUS, BranchSign.MINUS):
            e = int(eta)
            wp2_zero = _label(2, 0, eta)
            wp2_one = _label(2, 1, eta)
            # second atom dressed against the zero-photon component
            add(c / 4.0, "e", "e", 0, wp1, wp2_zero)
            add(e * c / 4.0, "e", "g", 1, wp1, wp2_zero)
            add(e * m1 * s / 4.0, "g", "e", 0, wp1, wp2_zero)
            add(m1 * s / 4.0, "g", "g", 1, wp1, wp2_zero)
            # second atom dressed against the one-photon component
            add(m1 * c / 4.0, "g", "e", 1, wp1, wp2_one)
            add(e * m1 * c / 4.0, "g", "g", 2, wp1, wp2_one)

    terms = tuple(
        JointTerm(amplitude, *key[:3], wp1=key[3], wp2=key[4])
        for key, amplitude in accumulator.items()
        if abs(amplitude) >= AMPLITUDE_FLOOR
    )
    return SystemExpansion(terms=terms, angles=angles, times=times, params=params)


@dataclass(frozen=True)
class BranchRow:
    """One outcome row: photon number, atom-2 internal, verdict, probability."""

    fock: int
    atom2: str
    verdict: str
    probability: float


@dataclass(frozen=True)
class BranchTable:
    """Probabilities of the five cascade outcomes in presentation order."""

    rows: tuple[BranchRow, ...]
    mode: str

    def row(self, fock: int, atom2: str) -> BranchRow:
        for r in self.rows:
            if r.fock == fock and r.atom2 == atom2:
                return r
        raise KeyError(f"no outcome row for fock={fock}, atom2={atom2!r}")

    def total(self) -> float:
        return float(sum(r.probability for r in self.rows))

    def failure_total(self) -> float:
        return float(sum(r.probability for r in self.rows if r.verdict == VERDICT_FAILURE))

    def success_total(self) -> float:
        return float(sum(r.probability for r in self.rows if r.verdict == VERDICT_SUCCESS_PENDING))


def _class_probability(expansion: SystemExpansion, fock: int, atom2: str, mode: str) -> float:
    members = [t for t in expansion.terms if t.fock == fock and t.atom2 == atom2]
    total = 0.0j
    for ti in members:
        for tj in members:
            if ti.atom1 != tj.atom1:
                continue
            ov1 = expansion.label_overlap(tj.wp1, ti.wp1, mode)
            ov2 = expansion.label_overlap(tj.wp2, ti.wp2, mode)
            total += np.conj(tj.amplitude) * ti.amplitude * ov1 * ov2
    assert abs(total.imag) < 1e-12, "outcome probability must be real"
    return max(float(total.real), 0.0)


def branch_probabilities(
    angles: BlochAngles,
    times: tuple[float, float],
    params: PhysicalParams,
    mode: str = "asymptotic",
) -> BranchTable:
    """Outcome table of the photon-number / atom-2 measurement cascade.

    ``asymptotic`` treats distinct packet labels as orthogonal (fully
    separated branches); ``exact`` keeps the finite Gram overlaps at the
    given interaction times.
    """
    if mode not in ("asymptotic", "exact"):
        raise ValueError(f"mode must be 'asymptotic' or 'exact', got {mode!r}")
    expansion = build_expansion_t3(angles, times, params)
    rows = tuple(
        BranchRow(fock, atom2, verdict, _class_probability(expansion, fock, atom2, mode))
        for fock, atom2, verdict in ROW_LAYOUT
    )
    return BranchTable(rows=rows, mode=mode)


def success_probability(
    angles: BlochAngles,
    times: tuple[float, float],
    params: PhysicalParams,
    mode: str = "asymptotic",
) -> float:
    """Probability that the cascade lands in a teleportation-capable row."""
    return branch_probabilities(angles, times, params, mode).success_total()
