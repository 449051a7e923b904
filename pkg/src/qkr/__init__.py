"""Quantum kicked rotor at resonance: amplitude amplification, estimation, robustness.

The package simulates a periodically kicked quantum rotor on a truncated
momentum lattice, prepares broad momentum superpositions with resonant kick
sequences, runs Grover-style amplitude amplification and single-round
amplitude estimation on top of them, and quantifies how kick-strength noise
and kick-period detuning degrade the search.

Hot loops dispatch to numba-compiled kernels when numba is importable; set
QKR_BACKEND=numpy to force the pure-numpy fallback (see qkr._kernels).
"""

from ._kernels import active_backend
from ._version import __version__
from .core_state import (
    DEFAULT_GUARD_THRESHOLD,
    DensityMatrix,
    MomentumLattice,
    NumericalFault,
    Rep,
    RotorState,
    TruncationError,
    basis_state,
    check_truncation,
    default_guard_margin,
    edge_mass,
    mean_energy,
    momentum_mean,
    momentum_std,
    overlap,
    probabilities,
    to_angle,
    to_momentum,
)
from .floquet import (
    RESONANT_PERIOD,
    DetunedPair,
    Direction,
    FloquetConfig,
    InitScheme,
    KickPotential,
    ModifiedPotentialKicks,
    ResonantKicks,
    apply_U,
    apply_free,
    apply_kick,
    eval_potential,
    floquet_step,
    forward_kick_strengths,
    lattice_for_scheme,
    prepare_initial,
    scheme_potential,
    scheme_steps,
    total_kick_strength,
)
from .grover import (
    AmplifyResult,
    OracleSpec,
    RuntimeScalingResult,
    amplify,
    apply_oracle,
    apply_zero_reflection,
    average_runtime,
    grover_iteration,
    optimal_iterations,
    optimal_iterations_rounded,
    profile_flatness,
    runtime_scaling,
    runtime_window_profile,
    success_probability,
    uniform_reference_runtime,
)
from .estimation import (
    EstimationResult,
    SpinRotorState,
    controlled_U,
    controlled_grover,
    controlled_oracle,
    controlled_zero_reflection,
    estimate_amplitude,
    hadamard_spin,
)
from .robustness import (
    DerivativeEstimate,
    DetuneSweepResult,
    NoiseModel,
    NoiseRun,
    NoiseSweepResult,
    analytic_averaged_rho,
    detuning_sensitivity,
    error_scaling,
    mc_averaged_rho,
    noise_derivative_at_zero,
    noisy_amplify,
    noisy_resonant_kicks,
    sample_strengths,
)
from .cli import ConfigError, ExperimentConfig, ResultTable, run, validate

__all__ = [
    "DEFAULT_GUARD_THRESHOLD",
    "RESONANT_PERIOD",
    "AmplifyResult",
    "ConfigError",
    "DensityMatrix",
    "DerivativeEstimate",
    "DetuneSweepResult",
    "DetunedPair",
    "Direction",
    "EstimationResult",
    "ExperimentConfig",
    "FloquetConfig",
    "InitScheme",
    "KickPotential",
    "ModifiedPotentialKicks",
    "MomentumLattice",
    "NoiseModel",
    "NoiseRun",
    "NoiseSweepResult",
    "NumericalFault",
    "OracleSpec",
    "Rep",
    "ResonantKicks",
    "ResultTable",
    "RotorState",
    "RuntimeScalingResult",
    "SpinRotorState",
    "TruncationError",
    "active_backend",
    "amplify",
    "analytic_averaged_rho",
    "apply_U",
    "apply_free",
    "apply_kick",
    "apply_oracle",
    "apply_zero_reflection",
    "average_runtime",
    "basis_state",
    "check_truncation",
    "controlled_U",
    "controlled_grover",
    "controlled_oracle",
    "controlled_zero_reflection",
    "default_guard_margin",
    "detuning_sensitivity",
    "edge_mass",
    "error_scaling",
    "estimate_amplitude",
    "eval_potential",
    "floquet_step",
    "forward_kick_strengths",
    "grover_iteration",
    "hadamard_spin",
    "lattice_for_scheme",
    "mc_averaged_rho",
    "mean_energy",
    "momentum_mean",
    "momentum_std",
    "noise_derivative_at_zero",
    "noisy_amplify",
    "noisy_resonant_kicks",
    "optimal_iterations",
    "optimal_iterations_rounded",
    "overlap",
    "prepare_initial",
    "probabilities",
    "profile_flatness",
    "run",
    "runtime_scaling",
    "runtime_window_profile",
    "sample_strengths",
    "scheme_potential",
    "scheme_steps",
    "success_probability",
    "to_angle",
    "to_momentum",
    "total_kick_strength",
    "uniform_reference_runtime",
    "validate",
    "__version__",
]
