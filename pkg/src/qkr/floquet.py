"""Kick and free-evolution operators, kick potentials, and initial-state preparation.

One period of the driven rotor is a delta-kick exp(-i*phi*V(theta)) composed with
free evolution exp(-i*n^2*tau/2).  At the resonant period tau = 4*pi the free
evolution is the identity, so repeated kicks commute and momentum spreads
ballistically.  Three preparation schemes build the initial superposition for
the amplification stage: plain resonant cosine kicks, kicks with a harmonic
series potential that flattens the profile, and a resonant kick pair wrapped
around a small controlled detuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np

from .core_state import (
    DEFAULT_GUARD_THRESHOLD,
    MomentumLattice,
    Rep,
    RotorState,
    TruncationError,
    basis_state,
    check_truncation,
    to_angle,
    to_momentum,
)

__all__ = [
    "RESONANT_PERIOD",
    "Direction",
    "DetunedPair",
    "FloquetConfig",
    "InitScheme",
    "KickPotential",
    "ModifiedPotentialKicks",
    "ResonantKicks",
    "apply_free",
    "apply_kick",
    "apply_U",
    "eval_potential",
    "floquet_step",
    "forward_kick_strengths",
    "lattice_for_scheme",
    "prepare_initial",
    "scheme_potential",
    "scheme_steps",
    "total_kick_strength",
]

# Kick period at quantum resonance (hbar = I = 1): free evolution is the identity.
RESONANT_PERIOD = 4.0 * math.pi


@dataclass(frozen=True)
class KickPotential:
    """Cosine Fourier series V(theta) = sum_m v_m cos(m theta)."""

    harmonics: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        terms = tuple((int(m), float(v)) for m, v in self.harmonics)
        if not terms:
            raise ValueError("potential needs at least one harmonic")
        ms = [m for m, _ in terms]
        if any(m < 1 for m in ms) or len(set(ms)) != len(ms) or sorted(ms) != ms:
            raise ValueError("harmonic orders must be distinct, sorted, positive integers")
        object.__setattr__(self, "harmonics", terms)

    @classmethod
    def cosine(cls) -> "KickPotential":
        """Plain V(theta) = cos(theta)."""
        return cls(((1, 1.0),))

    @classmethod
    def modified(cls, M: int) -> "KickPotential":
        """Profile-flattening series V(theta) = sum_{m=1}^{M} cos(m theta)/m^2."""
        if M < 1:
            raise ValueError("M must be >= 1")
        return cls(tuple((m, 1.0 / (m * m)) for m in range(1, M + 1)))

    def evaluate(self, theta: np.ndarray | float) -> np.ndarray | float:
        """V at the given angle(s)."""
        th = np.asarray(theta, dtype=np.float64)
        out = np.zeros_like(th)
        for m, v in self.harmonics:
            out = out + v * np.cos(m * th)
        return float(out) if np.isscalar(theta) else out

    @property
    def m_max(self) -> int:
        return self.harmonics[-1][0]

    def max_slope(self) -> float:
        """max_theta |V'(theta)|, used for lattice sizing (classical kick impulse)."""
        return _max_slope(self.harmonics)


@lru_cache(maxsize=64)
def _max_slope(harmonics: tuple[tuple[int, float], ...]) -> float:
    theta = np.linspace(0.0, 2.0 * math.pi, 8192, endpoint=False)
    dv = np.zeros_like(theta)
    for m, v in harmonics:
        dv -= v * m * np.sin(m * theta)
    return float(np.abs(dv).max())


@dataclass(frozen=True)
class FloquetConfig:
    """One-period evolution parameters: kick strength, potential, period detuning."""

    phi: float
    potential: KickPotential
    detuning: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")
        if not (self.detuning >= 0.0 and math.isfinite(self.detuning)):
            raise ValueError("detuning must be finite and >= 0")


class Direction(Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class ResonantKicks:
    """count resonant cosine kicks of strength phi (a ballistic walk)."""

    phi: float
    count: int = 1

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")


@dataclass(frozen=True)
class ModifiedPotentialKicks:
    """count resonant kicks with the harmonic series potential (flatter profile)."""

    phi: float
    M: int = 100
    count: int = 1

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")


@dataclass(frozen=True)
class DetunedPair:
    """Two cosine kicks of strength phi around a controlled period detuning epsilon.

    epsilon is accepted anywhere in [0, 2*pi); the flattening effect the scheme
    exists for lives in the epsilon << 1 regime.
    """

    phi: float
    epsilon: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")
        if not (0.0 <= self.epsilon < 2.0 * math.pi):
            raise ValueError("epsilon must lie in [0, 2*pi)")


InitScheme = Union[ResonantKicks, ModifiedPotentialKicks, DetunedPair]


def scheme_potential(scheme: InitScheme) -> KickPotential:
    if isinstance(scheme, ModifiedPotentialKicks):
        return KickPotential.modified(scheme.M)
    return KickPotential.cosine()


def scheme_steps(scheme: InitScheme) -> tuple[tuple[str, float], ...]:
    """Chronological ('kick', strength) / ('free', tau) steps of one forward cycle."""
    if isinstance(scheme, (ResonantKicks, ModifiedPotentialKicks)):
        return tuple(("kick", scheme.phi) for _ in range(scheme.count))
    if isinstance(scheme, DetunedPair):
        return (("kick", scheme.phi), ("free", scheme.epsilon), ("kick", scheme.phi))
    raise TypeError(f"unknown scheme {scheme!r}")


def forward_kick_strengths(scheme: InitScheme) -> list[float]:
    """Kick strengths of one forward cycle, in order."""
    return [s for kind, s in scheme_steps(scheme) if kind == "kick"]


def total_kick_strength(scheme: InitScheme) -> float:
    """Total forward kick impulse, used for lattice sizing."""
    return float(sum(abs(s) for s in forward_kick_strengths(scheme)))


def eval_potential(potential: KickPotential, lattice: MomentumLattice) -> np.ndarray:
    """V(theta_k) on the lattice angle grid."""
    return potential.evaluate(lattice.angle_grid)


def apply_kick(state: RotorState, potential: KickPotential, strength: float) -> RotorState:
    """Multiply by exp(-i*strength*V(theta)); negative strength reverses the kick."""
    if not math.isfinite(strength):
        raise ValueError("kick strength must be finite")
    original = state.rep
    ang = to_angle(state)
    v = potential.evaluate(state.lattice.angle_grid)
    out = RotorState(ang.amplitudes * np.exp(-1j * strength * v), Rep.ANGLE, state.lattice)
    return to_momentum(out) if original is Rep.MOMENTUM else out


def apply_free(state: RotorState, tau: float) -> RotorState:
    """Free evolution exp(-i*n^2*tau/2) in the momentum basis.

    tau is reduced modulo the resonant period 4*pi first, so resonant times give
    the identity exactly instead of accumulating argument-reduction error in the
    large n^2*tau phases.
    """
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    original = state.rep
    mom = to_momentum(state)
    tau_eff = math.fmod(tau, RESONANT_PERIOD)
    if tau_eff == 0.0:
        out = mom
    else:
        n = state.lattice.n_values.astype(np.float64)
        out = RotorState(
            mom.amplitudes * np.exp(-0.5j * tau_eff * n * n), Rep.MOMENTUM, state.lattice
        )
    return to_angle(out) if original is Rep.ANGLE else out


def floquet_step(state: RotorState, config: FloquetConfig) -> RotorState:
    """One full period: free evolution over 4*pi + detuning, then the kick."""
    out = apply_free(state, RESONANT_PERIOD + config.detuning)
    return apply_kick(out, config.potential, config.phi)


def apply_U(
    state: RotorState,
    scheme: InitScheme,
    direction: Direction = Direction.FORWARD,
    *,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> RotorState:
    """Apply one preparation cycle of the scheme, or its exact adjoint.

    Reverse runs the steps in reversed order with negated kick strengths and
    negated free-evolution time, so apply_U(apply_U(s, FORWARD), REVERSE) == s
    up to floating-point rounding.
    """
    steps = scheme_steps(scheme)
    if direction is Direction.REVERSE:
        steps = tuple((kind, -value) for kind, value in reversed(steps))
    potential = scheme_potential(scheme)
    out = state
    for kind, value in steps:
        if kind == "kick":
            out = apply_kick(out, potential, value)
        else:
            out = apply_free(out, value)
    if out.rep is not state.rep:
        out = to_momentum(out) if state.rep is Rep.MOMENTUM else to_angle(out)
    if guard is not None:
        check_truncation(out, guard)
    return out


def prepare_initial(
    lattice: MomentumLattice,
    scheme: InitScheme,
    *,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> RotorState:
    """Initial superposition U|0> for the amplification stage (momentum rep)."""
    return apply_U(basis_state(lattice, 0), scheme, Direction.FORWARD, guard=guard)


@lru_cache(maxsize=128)
def lattice_for_scheme(scheme: InitScheme, *, min_n_max: int = 32) -> MomentumLattice:
    """Smallest tested lattice whose prepared state clears the truncation guard.

    Starts from the analytic estimate n_max = ceil(1.15 * S * max|V'|) + m_max
    + 16 (classical edge with slack, one harmonic reach, safety margin; any
    grid with n_max >= m_max also represents every harmonic without aliasing)
    and grows by ~30% until the prepared state's edge-zone mass sits a factor
    4 below the default guard threshold.  Series potentials have slow
    super-classical tails, so the analytic estimate alone is not reliable.
    The search is deterministic: equal schemes always get equal lattices.
    """
    potential = scheme_potential(scheme)
    spread = 1.15 * total_kick_strength(scheme) * potential.max_slope()
    n_max = max(min_n_max, math.ceil(spread) + potential.m_max + 16)
    for _ in range(24):
        lattice = MomentumLattice(n_max)
        state = prepare_initial(lattice, scheme, guard=None)
        if check_truncation(state, None) <= DEFAULT_GUARD_THRESHOLD / 4.0:
            return lattice
        n_max = math.ceil(1.3 * n_max) + 16
    raise TruncationError(
        f"no lattice up to n_max={n_max} confines the prepared state of {scheme!r}"
    )
