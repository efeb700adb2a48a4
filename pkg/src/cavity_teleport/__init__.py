"""Desk-scale simulator of single-photon cavity teleportation with deflected atoms.

Two atoms cross a single-mode cavity one after the other; the intracavity
gradient splits each atomic wavepacket into two oppositely deflected
branches.  A photon-number readout, the second atom's internal state, and
finally both atomic positions condition the first atom's internal state onto
(a possibly z-flipped copy of) the state the second atom carried in.  The
package provides the closed-form wavepackets, the outcome bookkeeping of the
measurement cascade, per-run sampling, conditioned fidelities with their
position-only lower bounds, and an independent grid propagator that
certifies the closed forms.
"""

from .wavepackets import (
    BranchSign,
    DeflectedWavepacket,
    LinearizationWarning,
    PhysicalParams,
    branch_overlap,
    deflected_amplitude,
    desk_defaults,
    initial_amplitude,
    position_density,
    position_mean,
    position_spread,
    wavepacket_overlap,
)
from .protocol import (
    BlochAngles,
    BranchRow,
    BranchTable,
    JointTerm,
    SystemExpansion,
    WavepacketLabel,
    branch_probabilities,
    build_expansion_t3,
    success_probability,
)
from .measurement import (
    ConditionalState,
    MeasurementRecord,
    NegligibleDensity,
    QubitDensityMatrix,
    apply_sigma_z_correction,
    condition_on_field_and_atom2,
    derive_run_seed,
    joint_position_density,
    reduced_atom1_state,
    sample_many,
    sample_run,
    summarize_records,
)
from .fidelity import (
    AbcValues,
    DegenerateDenominator,
    FidelityRangeError,
    FidelitySurface,
    NotDistinguishable,
    SurfaceGrid,
    abc,
    fidelity_pair,
    fidelity_pair_half_angle,
    fidelity_surface,
    lower_bounds,
)
from .oracle import (
    GridMismatch,
    GridSpec,
    GridTooSmall,
    GridWavefunction,
    certify_analytic,
    check_certification,
    propagate,
    quadrature_overlap,
)

__all__ = [
    "AbcValues",
    "BlochAngles",
    "BranchRow",
    "BranchSign",
    "BranchTable",
    "ConditionalState",
    "DeflectedWavepacket",
    "DegenerateDenominator",
    "FidelityRangeError",
    "FidelitySurface",
    "GridMismatch",
    "GridSpec",
    "GridTooSmall",
    "GridWavefunction",
    "JointTerm",
    "LinearizationWarning",
    "MeasurementRecord",
    "NegligibleDensity",
    "NotDistinguishable",
    "PhysicalParams",
    "QubitDensityMatrix",
    "SurfaceGrid",
    "SystemExpansion",
    "WavepacketLabel",
    "abc",
    "apply_sigma_z_correction",
    "branch_overlap",
    "branch_probabilities",
    "build_expansion_t3",
    "certify_analytic",
    "check_certification",
    "condition_on_field_and_atom2",
    "deflected_amplitude",
    "derive_run_seed",
    "desk_defaults",
    "fidelity_pair",
    "fidelity_pair_half_angle",
    "fidelity_surface",
    "initial_amplitude",
    "joint_position_density",
    "lower_bounds",
    "position_density",
    "position_mean",
    "position_spread",
    "propagate",
    "quadrature_overlap",
    "reduced_atom1_state",
    "sample_many",
    "sample_run",
    "success_probability",
    "summarize_records",
    "wavepacket_overlap",
]

__version__ = "0.1.0"
