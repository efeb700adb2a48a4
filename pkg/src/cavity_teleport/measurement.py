"""Projective cascade, position readout, and the conditioned receiver qubit.

After the photon-number and second-atom readouts, the two teleportation-
capable outcomes leave the first atom entangled with four translational
branch pairs.  Measuring both atomic positions then collapses the first
atom's internal state to a 2x2 density matrix; a fixed z-flip repairs the
runs in which the two deflections disagree in sign.

Positions are expressed in units of the initial packet width throughout this
module's public surface; densities are per square width.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .protocol import (
    VERDICT_SUCCESS_PENDING,
    BlochAngles,
    SystemExpansion,
    build_expansion_t3,
    branch_probabilities,
)
from .wavepackets import (
    BranchSign,
    DeflectedWavepacket,
    PhysicalParams,
    _coefficients,
)

DENSITY_FLOOR = 1e-30
REJECTION_BUDGET = 1_000_000

VERDICT_SUCCESS = "success"
VERDICT_CORRECTED = "success-after-correction"
VERDICT_FAILURE = "failure"


class NegligibleDensity(Exception):
    """Raised when conditioning on positions where the packets carry no weight."""


@dataclass(frozen=True, eq=False)
class QubitDensityMatrix:
    """Validated 2x2 density matrix in the (|e>, |g>) basis."""

    matrix: np.ndarray
    atol: float = 1e-12

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > self.atol:
            raise ValueError("density matrix is not Hermitian")
        trace = m[0, 0].real + m[1, 1].real
        if abs(trace - 1.0) > self.atol:
            raise ValueError(f"density matrix trace is {trace!r}, expected 1")
        # closed-form eigenvalues of a Hermitian 2x2: tr/2 +- sqrt(tr^2/4 - det)
        det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
        half_trace = trace / 2.0
        disc = math.sqrt(max(half_trace * half_trace - det, 0.0))
        if half_trace - disc < -self.atol:
            raise ValueError("density matrix has a negative eigenvalue")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def fidelity(self, ket: np.ndarray) -> float:
        """Overlap <ket| rho |ket> with a pure state vector."""
        v = np.asarray(ket, dtype=complex).reshape(2)
        return float(np.real(v.conj() @ self.matrix @ v))

    def eigenvalues(self) -> tuple[float, float]:
        m = self.matrix
        trace = (m[0, 0] + m[1, 1]).real
        det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
        disc = math.sqrt(max(trace * trace / 4.0 - det, 0.0))
        return (trace / 2.0 - disc, trace / 2.0 + disc)


def apply_sigma_z_correction(rho: QubitDensityMatrix) -> QubitDensityMatrix:
    """Conjugate by diag(1, -1): flips the sign of both coherences."""
    m = rho.matrix.copy()
    m[0, 1] = -m[0, 1]
    m[1, 0] = -m[1, 0]
    return QubitDensityMatrix(m, atol=rho.atol)


def _scaled_coefficients(
    branch: BranchSign, fock_n: int, tau: float, params: PhysicalParams
) -> tuple[complex, float, float, complex]:
    """Packet coefficients in width units: amp(u) = pref exp(-i q u - (u-c)^2/(4 w)).

    Scaling by sqrt(width) makes the amplitude dimensionless and normalized
    against du, so products of two amplitudes are densities per square width.
    """
    wp = DeflectedWavepacket(branch, fock_n, tau, params)
    pref, q, center, width = _coefficients(wp)
    s = params.sigma_x
    return pref * math.sqrt(s), q * s, center / s, width / (s * s)


def _amp_from_coefficients(
    u: np.ndarray | float, coeffs: tuple[complex, float, float, complex]
) -> np.ndarray | complex:
    pref, q, center, width = coeffs
    if np.isscalar(u):
        du = u - center
        return pref * cmath.exp(-1j * q * u - du * du / (4.0 * width))
    u = np.asarray(u, dtype=float)
    du = u - center
    return pref * np.exp(-1j * q * u - du * du / (4.0 * width))


@dataclass(frozen=True)
class ConditionalState:
    """Joint state of atom-1 internals and both packet pairs, given a capable outcome.

    Pooling the two capable cascade rows removes the interference between
    opposite second-atom branches, leaving an equal-weight classical mixture
    over that branch sign.
    """

    angles: BlochAngles
    times: tuple[float, float]
    params: PhysicalParams
    success_probability: float

    def branch_amplitudes(self, atom: int, x_sigma: np.ndarray | float) -> tuple:
        """(plus, minus) deflected-branch amplitudes of one atom, width units."""
        if atom not in (1, 2):
            raise ValueError(f"atom must be 1 or 2, got {atom!r}")
        tau = self.times[atom - 1]
        plus = _amp_from_coefficients(
            x_sigma, _scaled_coefficients(BranchSign.PLUS, 0, tau, self.params)
        )
        minus = _amp_from_coefficients(
            x_sigma, _scaled_coefficients(BranchSign.MINUS, 0, tau, self.params)
        )
        return plus, minus


def _class_amplitude_map(expansion: SystemExpansion, fock: int, atom2: str) -> dict:
    out: dict[tuple, complex] = {}
    for t in expansion.terms:
        if t.fock == fock and t.atom2 == atom2:
            out[(t.atom1, int(t.wp1.branch), int(t.wp2.branch))] = t.amplitude
    return out


def condition_on_field_and_atom2(expansion: SystemExpansion) -> ConditionalState:
    """Project the joint state onto the two teleportation-capable outcomes.

    Verifies term-by-term that both capable rows carry the expected internal
    pattern before pooling them, then normalizes by the exact success
    probability of the cascade.
    """
    angles = expansion.angles
    c = math.cos(angles.theta / 2.0)
    s = cmath.exp(1j * angles.phi) * math.sin(angles.theta / 2.0)

    def check(fock: int, atom2: str, e_pattern, g_pattern) -> None:
        amps = _class_amplitude_map(expansion, fock, atom2)
        for mu1 in (1, -1):
            for eta in (1, -1):
                got_e = amps.get(("e", mu1, eta), 0.0j)
                got_g = amps.get(("g", mu1, eta), 0.0j)
                if abs(got_e - e_pattern(mu1, eta)) > 1e-12 or abs(got_g - g_pattern(mu1, eta)) > 1e-12:
                    raise ValueError(
                        "joint-state expansion does not have the expected structure "
                        f"in the (fock={fock}, atom2={atom2!r}) outcome"
                    )

    check(0, "e", lambda mu1, eta: c / 4.0, lambda mu1, eta: mu1 * eta * s / 4.0)
    check(1, "g", lambda mu1, eta: eta * c / 4.0, lambda mu1, eta: mu1 * s / 4.0)

    table = branch_probabilities(angles, expansion.times, expansion.params, mode="exact")
    p_succ = table.success_total()
    if p_succ <= 1e-15:
        raise ValueError("cascade success probability vanishes for these settings")
    return ConditionalState(
        angles=angles,
        times=expansion.times,
        params=expansion.params,
        success_probability=p_succ,
    )


def joint_position_density(
    x1_sigma: np.ndarray | float, x2_sigma: np.ndarray | float, state: ConditionalState
) -> np.ndarray | float:
    """Probability density of the two position readouts given a capable outcome.

    Positions in width units, density per square width; integrates to one
    over the plane.  The second atom's factor is an even two-lobe mixture;
    the first atom's factor carries the interference weighted by cos(theta).
    """
    p1, m1 = state.branch_amplitudes(1, x1_sigma)
    p2, m2 = state.branch_amplitudes(2, x2_sigma)
    s1 = np.abs(p1) ** 2 + np.abs(m1) ** 2
    x1_interf = 2.0 * np.real(p1 * np.conj(m1))
    t2 = np.abs(p2) ** 2 + np.abs(m2) ** 2
    h = s1 + math.cos(state.angles.theta) * x1_interf
    return t2 * h / (8.0 * state.success_probability)


def reduced_atom1_state(
    x1_sigma: float, x2_sigma: float, state: ConditionalState
) -> QubitDensityMatrix:
    """First atom's internal density matrix after both position readouts.

    An even mixture of two pure states, one per second-atom branch sign; the
    branch sign toggles the sign of the ground component.  Raises
    NegligibleDensity when the readout positions carry no packet weight.
    """
    c = math.cos(state.angles.theta / 2.0)
    s = cmath.exp(1j * state.angles.phi) * math.sin(state.angles.theta / 2.0)
    p1, m1 = state.branch_amplitudes(1, x1_sigma)
    p2, m2 = state.branch_amplitudes(2, x2_sigma)
    e_amp = (p1 + m1) * c
    g_amp = (p1 - m1) * s
    accum = np.zeros((2, 2), dtype=complex)
    for weight, sign in ((abs(p2) ** 2, 1.0), ((abs(m2) ** 2), -1.0)):
        vec = np.array([e_amp, sign * g_amp], dtype=complex)
        accum += weight * np.outer(vec, vec.conj())
    trace = accum[0, 0].real + accum[1, 1].real
    if trace <= DENSITY_FLOOR:
        raise NegligibleDensity(
            f"joint packet weight at (x1={x1_sigma}, x2={x2_sigma}) is below {DENSITY_FLOOR}"
        )
    return QubitDensityMatrix(accum / trace)


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of one full protocol run."""

    seed: int
    fock_outcome: int
    atom2_outcome: str
    x1_sigma: float
    x2_sigma: float
    verdict: str
    rho1f: QubitDensityMatrix | None
    fidelity_to_alpha: float


class _SamplingPlan:
    """Precomputed tables shared by every run of a sampling batch."""

    def __init__(self, angles: BlochAngles, times: tuple[float, float], params: PhysicalParams):
        self.angles = angles
        self.times = times
        self.params = params
        expansion = build_expansion_t3(angles, times, params)
        self.state = condition_on_field_and_atom2(expansion)
        table = branch_probabilities(angles, times, params, mode="exact")
        self.rows = table.rows
        self.cumulative = np.cumsum([r.probability for r in self.rows])
        # renormalize away float dust so the final bin always closes at 1
        self.cumulative /= self.cumulative[-1]
        self.cos_theta = math.cos(angles.theta)
        self.alpha_ket = angles.ket()
        self.coeffs1 = {
            sign: _scaled_coefficients(sign, 0, times[0], params)
            for sign in (BranchSign.PLUS, BranchSign.MINUS)
        }
        self.coeffs2 = {
            sign: _scaled_coefficients(sign, 0, times[1], params)
            for sign in (BranchSign.PLUS, BranchSign.MINUS)
        }
        # lobe centers and spreads in width units, for the Gaussian proposals
        self.center1 = {s: c[2] for s, c in self.coeffs1.items()}
        self.center2 = {s: c[2] for s, c in self.coeffs2.items()}
        self.sd1 = abs(self.coeffs1[BranchSign.PLUS][3])
        self.sd2 = abs(self.coeffs2[BranchSign.PLUS][3])

    def sample_x2(self, rng: np.random.Generator) -> float:
        sign = BranchSign.PLUS if rng.random() < 0.5 else BranchSign.MINUS
        return rng.normal(self.center2[sign], self.sd2)

    def sample_x1(self, rng: np.random.Generator) -> float:
        """Rejection sampling against the even two-lobe proposal.

        The target differs from the proposal by the interference factor
        1 + cos(theta) X/S, and (1 + cos(theta) X/S)/2 is a valid acceptance
        probability because |X| <= S pointwise.
        """
        cp = self.coeffs1[BranchSign.PLUS]
        cm = self.coeffs1[BranchSign.MINUS]
        for _ in range(REJECTION_BUDGET):
            sign = BranchSign.PLUS if rng.random() < 0.5 else BranchSign.MINUS
            x = rng.normal(self.center1[sign], self.sd1)
            plus = _amp_from_coefficients(x, cp)
            minus = _amp_from_coefficients(x, cm)
            s_tot = abs(plus) ** 2 + abs(minus) ** 2
            if s_tot <= 0.0:
                continue
            interf = 2.0 * (plus * minus.conjugate()).real
            accept = 0.5 * (1.0 + self.cos_theta * interf / s_tot)
            if rng.random() < accept:
                return x
        raise RuntimeError(
            f"position sampler exhausted its budget of {REJECTION_BUDGET} proposals"
        )


def _run_with_plan(seed: int, plan: _SamplingPlan) -> MeasurementRecord:
    rng = np.random.default_rng(seed)
    draw = rng.random()
    index = int(np.searchsorted(plan.cumulative, draw, side="right"))
    index = min(index, len(plan.rows) - 1)
    row = plan.rows[index]
    if row.verdict != VERDICT_SUCCESS_PENDING:
        return MeasurementRecord(
            seed=seed,
            fock_outcome=row.fock,
            atom2_outcome=row.atom2,
            x1_sigma=math.nan,
            x2_sigma=math.nan,
            verdict=VERDICT_FAILURE,
            rho1f=None,
            fidelity_to_alpha=math.nan,
        )
    x2 = plan.sample_x2(rng)
    x1 = plan.sample_x1(rng)
    rho = reduced_atom1_state(x1, x2, plan.state)
    if x1 * x2 < 0.0:
        verdict = VERDICT_CORRECTED
        rho = apply_sigma_z_correction(rho)
    else:
        verdict = VERDICT_SUCCESS
    return MeasurementRecord(
        seed=seed,
        fock_outcome=row.fock,
        atom2_outcome=row.atom2,
        x1_sigma=x1,
        x2_sigma=x2,
        verdict=verdict,
        rho1f=rho,
        fidelity_to_alpha=rho.fidelity(plan.alpha_ket),
    )


def derive_run_seed(master_seed: int, index: int) -> int:
    """Stable per-run seed: child ``index`` of the master seed's spawn tree."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_run(
    seed: int,
    angles: BlochAngles,
    times: tuple[float, float],
    params: PhysicalParams,
) -> MeasurementRecord:
    """Simulate one full protocol run from an integer seed."""
    return _run_with_plan(seed, _SamplingPlan(angles, times, params))


def sample_many(
    master_seed: int,
    n_runs: int,
    angles: BlochAngles,
    times: tuple[float, float],
    params: PhysicalParams,
) -> list[MeasurementRecord]:
    """Simulate ``n_runs`` independent runs with per-run seeds derived from one master."""
    if n_runs < 0:
        raise ValueError(f"n_runs must be non-negative, got {n_runs!r}")
    plan = _SamplingPlan(angles, times, params)
    return [_run_with_plan(derive_run_seed(master_seed, i), plan) for i in range(n_runs)]


def summarize_records(records: list[MeasurementRecord]) -> dict:
    """Success frequency with binomial error, and mean corrected fidelity."""
    n = len(records)
    successes = [r for r in records if r.verdict != VERDICT_FAILURE]
    k = len(successes)
    freq = k / n if n else math.nan
    err = math.sqrt(freq * (1.0 - freq) / n) if n else math.nan
    mean_fid = (
        sum(r.fidelity_to_alpha for r in successes) / k if k else math.nan
    )
    return {
        "n_runs": n,
        "n_success": k,
        "success_frequency": freq,
        "binomial_error": err,
        "mean_corrected_fidelity": mean_fid,
    }
