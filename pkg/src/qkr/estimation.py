"""Single-round amplitude estimation with one ancilla spin.

One controlled search iterate between two spin Hadamards turns the spin-up
probability into (1 + <psi0|G|psi0>)/2 = sin(theta_g)^2, so a single Z
measurement estimates the initial success probability a0 = sin(theta_g)^2
directly: theta_hat = arccos(-E) and a_hat = sin(theta_hat/2)^2.  From a_hat
the optimal iteration count for a subsequent amplification run follows without
classical knowledge of the prepared profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_state import (
    DEFAULT_GUARD_THRESHOLD,
    MomentumLattice,
    NumericalFault,
    Rep,
    RotorState,
    check_truncation,
)
from .floquet import Direction, InitScheme, apply_U, prepare_initial
from .grover import (
    OracleSpec,
    apply_oracle,
    apply_zero_reflection,
    optimal_iterations,
    success_probability,
)

__all__ = [
    "EstimationResult",
    "SpinRotorState",
    "controlled_grover",
    "controlled_oracle",
    "controlled_U",
    "controlled_zero_reflection",
    "estimate_amplitude",
    "hadamard_spin",
]

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class SpinRotorState:
    """Joint state of the ancilla spin and the rotor: amplitudes[s] is the spin-s branch."""

    amplitudes: np.ndarray
    rep: Rep
    lattice: MomentumLattice

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2, self.lattice.dim):
            raise ValueError(
                f"spin-rotor amplitudes have shape {amps.shape}, "
                f"expected (2, {self.lattice.dim})"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_product(
        cls, spin: tuple[complex, complex], rotor: RotorState
    ) -> "SpinRotorState":
        amps = np.empty((2, rotor.lattice.dim), dtype=np.complex128)
        amps[0] = complex(spin[0]) * rotor.amplitudes
        amps[1] = complex(spin[1]) * rotor.amplitudes
        return cls(amps, rotor.rep, rotor.lattice)

    def branch(self, s: int) -> RotorState:
        """Unnormalized rotor state attached to spin value s (0 or 1)."""
        if s not in (0, 1):
            raise ValueError("spin index must be 0 or 1")
        return RotorState(self.amplitudes[s].copy(), self.rep, self.lattice)

    def spin_probabilities(self) -> tuple[float, float]:
        """Z-measurement probabilities (squared branch norms, rep-invariant)."""
        a = self.amplitudes
        p0 = float(np.real(np.vdot(a[0], a[0])))
        p1 = float(np.real(np.vdot(a[1], a[1])))
        return p0, p1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def hadamard_spin(state: SpinRotorState) -> SpinRotorState:
    """Hadamard on the ancilla: mixes the two rotor branches."""
    a = state.amplitudes
    amps = np.empty_like(a)
    amps[0] = (a[0] + a[1]) * _SQRT_HALF
    amps[1] = (a[0] - a[1]) * _SQRT_HALF
    return SpinRotorState(amps, state.rep, state.lattice)


def _map_spin1_branch(state: SpinRotorState, fn) -> SpinRotorState:
    branch = RotorState(state.amplitudes[1], state.rep, state.lattice)
    new = fn(branch)
    if new.rep is not state.rep:
        raise RuntimeError("branch operation changed representation")
    amps = state.amplitudes.copy()
    amps[1] = new.amplitudes
    return SpinRotorState(amps, state.rep, state.lattice)


def controlled_oracle(state: SpinRotorState, oracle: OracleSpec) -> SpinRotorState:
    """Oracle on the rotor, applied only in the spin-1 branch."""
    return _map_spin1_branch(state, lambda b: apply_oracle(b, oracle))


def controlled_zero_reflection(state: SpinRotorState) -> SpinRotorState:
    """Reflection about momentum |0>, applied only in the spin-1 branch."""
    return _map_spin1_branch(state, apply_zero_reflection)


def controlled_U(
    state: SpinRotorState,
    scheme: InitScheme,
    direction: Direction = Direction.FORWARD,
    *,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> SpinRotorState:
    """Preparation cycle (or its adjoint) applied only in the spin-1 branch."""
    out = _map_spin1_branch(
        state, lambda b: apply_U(b, scheme, direction, guard=None)
    )
    if guard is not None:
        check_truncation(out.branch(1), guard)
    return out


def controlled_grover(
    state: SpinRotorState,
    oracle: OracleSpec,
    scheme: InitScheme,
    *,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> SpinRotorState:
    """One fully-controlled search iterate on the spin-1 branch."""
    out = controlled_oracle(state, oracle)
    out = controlled_U(out, scheme, Direction.REVERSE, guard=None)
    out = controlled_zero_reflection(out)
    out = controlled_U(out, scheme, Direction.FORWARD, guard=None)
    if guard is not None:
        check_truncation(out.branch(1), guard)
    return out


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of one estimation round; a_hat = sin(theta_hat/2)^2 always holds."""

    expectation: float
    theta_hat: float
    a_hat: float
    shots: int
    r_hat: int


def estimate_amplitude(
    lattice: MomentumLattice,
    scheme: InitScheme,
    oracle: OracleSpec,
    shots: int = 0,
    seed: int = 0,
    *,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> EstimationResult:
    """Estimate the initial success probability with one controlled iterate.

    shots = 0 evaluates the spin expectation exactly; shots > 0 draws that many
    Z measurements from a counter-based generator keyed by seed, so results are
    reproducible bit for bit.
    """
    if oracle.count == 0:
        raise ValueError("oracle marks no sites")
    if shots < 0:
        raise ValueError("shots must be >= 0")
    rotor = prepare_initial(lattice, scheme, guard=guard)
    if success_probability(rotor, oracle) == 0.0:
        raise ValueError("initial state carries no probability on the marked sites")
    joint = SpinRotorState.from_product((_SQRT_HALF, _SQRT_HALF), rotor)
    joint = controlled_grover(joint, oracle, scheme, guard=guard)
    joint = hadamard_spin(joint)
    p0, p1 = joint.spin_probabilities()
    total = p0 + p1
    if not math.isfinite(total) or abs(total - 1.0) > 1e-9:
        raise NumericalFault(f"spin-rotor norm drifted to {total!r}")
    expectation = 2.0 * p0 - 1.0
    if abs(expectation) > 1.0 + 1e-9:
        raise NumericalFault(f"spin expectation {expectation!r} outside [-1, 1]")
    if shots > 0:
        rng = np.random.Generator(np.random.Philox(key=[int(seed), 0]))
        hits = int(rng.binomial(shots, min(max(p0, 0.0), 1.0)))
        expectation = 2.0 * (hits / shots) - 1.0
    expectation = min(max(expectation, -1.0), 1.0)
    theta_hat = math.acos(-expectation)
    a_hat = math.sin(0.5 * theta_hat) ** 2
    r_hat = optimal_iterations(a_hat) if a_hat > 0.0 else 0
    return EstimationResult(expectation, theta_hat, a_hat, int(shots), r_hat)
