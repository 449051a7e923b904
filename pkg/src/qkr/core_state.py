"""Momentum-lattice rotor states, the angle<->momentum transform, and basic observables.

A rotor on a ring is represented on a truncated angular-momentum lattice
n in [-n_max, n_max] (dim = 2*n_max + 1, always odd so the lattice is symmetric
about n = 0).  The conjugate angle grid is theta_k = 2*pi*k/dim.  The unitary
change of basis uses the convention

    psi(theta_k) = dim**-0.5 * sum_n c_n exp(+i n theta_k)

so a momentum eigenstate becomes the plane wave exp(+i n theta) on the grid.
All operations return new states; amplitude arrays are treated as read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

__all__ = [
    "DEFAULT_GUARD_THRESHOLD",
    "DensityMatrix",
    "MomentumLattice",
    "NumericalFault",
    "Rep",
    "RotorState",
    "TruncationError",
    "basis_state",
    "check_truncation",
    "default_guard_margin",
    "edge_mass",
    "mean_energy",
    "momentum_mean",
    "momentum_std",
    "overlap",
    "probabilities",
    "to_angle",
    "to_momentum",
]

# Simulations abort when this much probability reaches the guarded edge zone;
# the physical model lives on an infinite lattice and wrap-around must stay
# far below every tolerance used in the analyses.
DEFAULT_GUARD_THRESHOLD = 1e-8


class TruncationError(RuntimeError):
    """Probability mass reached the guarded edge zone of the finite lattice."""


class NumericalFault(RuntimeError):
    """Non-finite amplitudes or an observable outside its mathematical range."""


class Rep(Enum):
    """Which basis the amplitude vector is expressed in."""

    MOMENTUM = "momentum"
    ANGLE = "angle"


@dataclass(frozen=True)
class MomentumLattice:
    """Truncated angular-momentum basis with its conjugate angle grid.

    Momentum-representation entry j corresponds to n = j - n_max.
    """

    n_max: int

    def __post_init__(self) -> None:
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be a positive integer, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return 2 * self.n_max + 1

    @cached_property
    def angle_grid(self) -> np.ndarray:
        grid = 2.0 * np.pi * np.arange(self.dim) / self.dim
        grid.flags.writeable = False
        return grid

    @cached_property
    def n_values(self) -> np.ndarray:
        vals = np.arange(-self.n_max, self.n_max + 1)
        vals.flags.writeable = False
        return vals

    def index_of(self, n: int) -> int:
        """Array index of momentum n; raises if n is outside the lattice."""
        if abs(int(n)) > self.n_max:
            raise ValueError(f"momentum index {n} outside lattice range +-{self.n_max}")
        return int(n) + self.n_max


@dataclass(frozen=True)
class RotorState:
    """Complex amplitude vector over the lattice, in momentum or angle representation."""

    amplitudes: np.ndarray
    rep: Rep
    lattice: MomentumLattice

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.lattice.dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({self.lattice.dim},)"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def with_amplitudes(self, amps: np.ndarray, rep: Rep | None = None) -> "RotorState":
        return RotorState(amps, self.rep if rep is None else rep, self.lattice)


def basis_state(lattice: MomentumLattice, n: int) -> RotorState:
    """Momentum eigenstate |n> as a lattice state (momentum representation)."""
    amps = np.zeros(lattice.dim, dtype=np.complex128)
    amps[lattice.index_of(n)] = 1.0
    return RotorState(amps, Rep.MOMENTUM, lattice)


def to_angle(state: RotorState) -> RotorState:
    """Unitary transform to the angle representation (identity if already there)."""
    if state.rep is Rep.ANGLE:
        return state
    # ifftshift moves the centered ordering n = -n_max..n_max into FFT ordering
    psi = np.fft.ifft(np.fft.ifftshift(state.amplitudes)) * math.sqrt(state.lattice.dim)
    return RotorState(psi, Rep.ANGLE, state.lattice)


def to_momentum(state: RotorState) -> RotorState:
    """Unitary transform to the momentum representation (identity if already there)."""
    if state.rep is Rep.MOMENTUM:
        return state
    c = np.fft.fftshift(np.fft.fft(state.amplitudes)) / math.sqrt(state.lattice.dim)
    return RotorState(c, Rep.MOMENTUM, state.lattice)


def probabilities(state: RotorState) -> np.ndarray:
    """Momentum-site probabilities |c_n|^2, ordered n = -n_max..n_max."""
    c = to_momentum(state).amplitudes
    return (c.real * c.real + c.imag * c.imag).astype(np.float64)


def mean_energy(state: RotorState) -> float:
    """Kinetic expectation value sum_n |c_n|^2 n^2 / 2."""
    p = probabilities(state)
    n = state.lattice.n_values
    return float(np.dot(p, n.astype(np.float64) ** 2) / 2.0)


def momentum_std(state: RotorState) -> float:
    """Standard deviation of the momentum probability distribution."""
    p = probabilities(state)
    n = state.lattice.n_values.astype(np.float64)
    mean = float(np.dot(p, n))
    var = float(np.dot(p, n * n)) - mean * mean
    return math.sqrt(max(var, 0.0))


def momentum_mean(state: RotorState) -> float:
    """Mean of the momentum probability distribution."""
    p = probabilities(state)
    return float(np.dot(p, state.lattice.n_values.astype(np.float64)))


def edge_mass(state: RotorState, margin: int) -> float:
    """Total probability on sites |n| > n_max - margin (the lattice edge zone)."""
    n_max = state.lattice.n_max
    if not 0 <= margin < n_max:
        raise ValueError(f"margin must satisfy 0 <= margin < n_max, got {margin}")
    p = probabilities(state)
    return float(p[np.abs(state.lattice.n_values) > n_max - margin].sum())


def overlap(a: RotorState, b: RotorState) -> complex:
    """Inner product <a|b>, aligning representations first."""
    if a.lattice.n_max != b.lattice.n_max:
        raise ValueError("states live on different lattices")
    if a.rep is not b.rep:
        b = to_momentum(b) if a.rep is Rep.MOMENTUM else to_angle(b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def default_guard_margin(lattice: MomentumLattice) -> int:
    """Width of the guarded edge zone: ceil(dim/16) sites on each side."""
    return -(-lattice.dim // 16)


def check_truncation(
    state: RotorState,
    threshold: float | None = DEFAULT_GUARD_THRESHOLD,
    margin: int | None = None,
) -> float:
    """Abort if the edge zone holds more probability than the threshold.

    Returns the measured edge mass.  threshold=None disables the abort and
    only reports.  Non-finite amplitudes raise NumericalFault.
    """
    if margin is None:
        margin = default_guard_margin(state.lattice)
    mass = edge_mass(state, margin)
    if not math.isfinite(mass):
        raise NumericalFault("state amplitudes are not finite")
    if threshold is not None and mass > threshold:
        raise TruncationError(
            f"edge zone mass {mass:.3e} exceeds {threshold:.3e} "
            f"(n_max={state.lattice.n_max}, margin={margin}); enlarge the lattice"
        )
    return mass


@dataclass(frozen=True)
class DensityMatrix:
    """Density operator in the angle representation (entries[k, l] = <theta_k|rho|theta_l>)."""

    entries: np.ndarray
    lattice: MomentumLattice

    def __post_init__(self) -> None:
        rho = np.asarray(self.entries, dtype=np.complex128)
        d = self.lattice.dim
        if rho.shape != (d, d):
            raise ValueError(f"density matrix has shape {rho.shape}, expected ({d}, {d})")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_state(cls, state: RotorState) -> "DensityMatrix":
        psi = to_angle(state).amplitudes
        return cls(np.outer(psi, psi.conj()), state.lattice)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def smallest_eigenvalue(self) -> float:
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def momentum_probabilities(self) -> np.ndarray:
        """Diagonal of rho in the momentum basis, ordered n = -n_max..n_max."""
        d = self.lattice.dim
        m = np.fft.fftshift(np.fft.fft(self.entries, axis=0), axes=0) / math.sqrt(d)
        m = np.fft.fftshift(np.fft.ifft(m, axis=1), axes=1) * math.sqrt(d)
        return np.real(np.diagonal(m)).copy()

    def pure_state(self, tol: float = 1e-8) -> RotorState:
        """Extract |psi> when rho = |psi><psi|; raises if the matrix is mixed."""
        herm = 0.5 * (self.entries + self.entries.conj().T)
        vals, vecs = np.linalg.eigh(herm)
        if abs(vals[-1] - 1.0) > tol or abs(vals[:-1]).max(initial=0.0) > tol:
            raise ValueError("density matrix is not a pure state")
        return RotorState(vecs[:, -1], Rep.ANGLE, self.lattice)
