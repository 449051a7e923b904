"""Amplitude amplification on the rotor: oracle, diffusion, iteration counts, runtimes.

The search iterate is G = (1 - 2|psi0><psi0|) (1 - 2 P_marked), realized
physically as oracle -> reverse preparation cycle -> reflection about |0> ->
forward preparation cycle.  On span{marked, rest} the iterate is a rotation by
2*theta_g with sin(theta_g)^2 = a0, so the success probability after k
iterations is sin((2k+1)*theta_g)^2 and the optimal iteration count is
floor(pi/(4*theta_g)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core_state import (
    DEFAULT_GUARD_THRESHOLD,
    MomentumLattice,
    Rep,
    RotorState,
    check_truncation,
    momentum_std,
    probabilities,
    to_angle,
    to_momentum,
)
from .floquet import (
    DetunedPair,
    Direction,
    InitScheme,
    ModifiedPotentialKicks,
    ResonantKicks,
    apply_U,
    lattice_for_scheme,
    prepare_initial,
    scheme_potential,
)

__all__ = [
    "AmplifyResult",
    "OracleSpec",
    "RuntimeScalingResult",
    "amplify",
    "apply_oracle",
    "apply_zero_reflection",
    "average_runtime",
    "grover_iteration",
    "optimal_iterations",
    "optimal_iterations_rounded",
    "profile_flatness",
    "runtime_scaling",
    "runtime_window_profile",
    "success_probability",
    "uniform_reference_runtime",
]

RUNTIME_CAP = 10**6


@dataclass(frozen=True)
class OracleSpec:
    """Marked momentum sites; the oracle flips their amplitude sign."""

    marked: tuple[int, ...]

    def __post_init__(self) -> None:
        marked = tuple(sorted({int(n) for n in self.marked}))
        object.__setattr__(self, "marked", marked)

    def indices(self, lattice: MomentumLattice) -> np.ndarray:
        """Array indices of the marked sites; raises if any lie off the lattice."""
        return np.array([lattice.index_of(n) for n in self.marked], dtype=np.intp)

    @property
    def count(self) -> int:
        return len(self.marked)


@dataclass(frozen=True)
class AmplifyResult:
    """Amplification trajectory: success probability after 0..r iterations."""

    success_by_iteration: np.ndarray
    r_used: int
    a0: float
    theta_g: float
    final_state: RotorState | None = None

    @property
    def peak(self) -> float:
        return float(np.max(self.success_by_iteration))


def apply_oracle(state: RotorState, oracle: OracleSpec) -> RotorState:
    """Flip the sign of the marked momentum amplitudes."""
    original = state.rep
    mom = to_momentum(state)
    amps = mom.amplitudes.copy()
    idx = oracle.indices(state.lattice)
    amps[idx] *= -1.0
    out = RotorState(amps, Rep.MOMENTUM, state.lattice)
    return out if original is Rep.MOMENTUM else _to_rep(out, original)


def apply_zero_reflection(state: RotorState) -> RotorState:
    """Reflection 1 - 2|0><0| about the momentum origin."""
    original = state.rep
    mom = to_momentum(state)
    amps = mom.amplitudes.copy()
    amps[state.lattice.index_of(0)] *= -1.0
    out = RotorState(amps, Rep.MOMENTUM, state.lattice)
    return out if original is Rep.MOMENTUM else _to_rep(out, original)


def _to_rep(state: RotorState, rep: Rep) -> RotorState:
    return to_momentum(state) if rep is Rep.MOMENTUM else to_angle(state)


def success_probability(state: RotorState, oracle: OracleSpec) -> float:
    """Total probability on the marked momentum sites."""
    if oracle.count == 0:
        return 0.0
    p = probabilities(state)
    return float(p[oracle.indices(state.lattice)].sum())


def _validate_overlap(a: float) -> float:
    a = float(a)
    if not math.isfinite(a) or not 0.0 < a <= 1.0:
        raise ValueError(
            f"initial success probability must satisfy 0 < a <= 1, got {a!r}"
        )
    return a


def optimal_iterations(a: float) -> int:
    """floor(pi / (4*arcsin(sqrt(a)))): guarantees success >= 1 - a at that count."""
    theta = math.asin(math.sqrt(_validate_overlap(a)))
    return int(math.floor(math.pi / (4.0 * theta)))


def optimal_iterations_rounded(a: float) -> int:
    """Half-up rounding of pi/(4*theta) - 1/2; can fall one short of the floor rule."""
    theta = math.asin(math.sqrt(_validate_overlap(a)))
    return max(0, int(math.ceil(math.pi / (4.0 * theta) - 0.5)))


def grover_iteration(
    state: RotorState,
    oracle: OracleSpec,
    scheme: InitScheme,
    *,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> RotorState:
    """One search iterate: oracle, reverse cycle, zero reflection, forward cycle."""
    out = apply_oracle(state, oracle)
    out = apply_U(out, scheme, Direction.REVERSE, guard=None)
    out = apply_zero_reflection(out)
    out = apply_U(out, scheme, Direction.FORWARD, guard=None)
    if guard is not None:
        check_truncation(out, guard)
    return out


def _resonant_fast_path(
    lattice: MomentumLattice,
    scheme: ResonantKicks | ModifiedPotentialKicks,
    oracle: OracleSpec,
    r: int | None,
    guard: float | None,
) -> AmplifyResult:
    # Merged trajectory: at resonance all kicks of a cycle combine into one kick
    # of the summed strength, and the whole loop runs in the angle basis.
    potential = scheme_potential(scheme)
    v = potential.evaluate(lattice.angle_grid)
    total = math.fsum([scheme.phi] * scheme.count)
    dim = lattice.dim
    psi0 = np.exp(-1j * total * v) / math.sqrt(dim)
    state0 = RotorState(psi0, Rep.ANGLE, lattice)
    if guard is not None:
        check_truncation(state0, guard)
    idx = oracle.indices(lattice)
    n_marked = lattice.n_values[idx].astype(np.float64)
    chi = np.exp(1j * np.outer(n_marked, lattice.angle_grid)) / math.sqrt(dim)
    proj0 = chi.conj() @ psi0
    a0 = min(float(np.vdot(proj0, proj0).real), 1.0)
    theta_g, r_used = _iteration_plan(a0, r)
    rev = np.full((1, r_used), -total)
    fwd = np.full((1, r_used), total)
    success, final = _kernels.trajectory_success_batch(psi0, v, chi, rev, fwd)
    final_state = RotorState(final[0], Rep.ANGLE, lattice)
    return AmplifyResult(success[0], r_used, a0, theta_g, final_state)


def _iteration_plan(a0: float, r: int | None) -> tuple[float, int]:
    if a0 == 0.0:
        raise ValueError("initial state carries no probability on the marked sites")
    theta_g = math.asin(math.sqrt(a0))
    if r is None:
        r_used = optimal_iterations(a0)
        if r_used > RUNTIME_CAP:
            raise ValueError(
                f"initial overlap {a0:.3e} needs {r_used} iterations, beyond "
                f"the cap {RUNTIME_CAP}; pass r explicitly to override"
            )
    else:
        r_used = int(r)
        if r_used < 0:
            raise ValueError("iteration count must be >= 0")
    return theta_g, r_used


def amplify(
    lattice: MomentumLattice,
    scheme: InitScheme,
    oracle: OracleSpec,
    r: int | None = None,
    *,
    initial_state: RotorState | None = None,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> AmplifyResult:
    """Run r search iterations (default: the optimal count for the prepared state).

    Records the success probability after every iteration, 0 through r.  The
    prepared state is guarded; the iterates stay in the exactly-preserved
    two-dimensional rotation plane of the initial state, so they need no
    further truncation checks on the resonant fast path.
    """
    if oracle.count == 0:
        raise ValueError("oracle marks no sites")
    oracle.indices(lattice)
    if initial_state is None and isinstance(scheme, (ResonantKicks, ModifiedPotentialKicks)):
        return _resonant_fast_path(lattice, scheme, oracle, r, guard)
    if initial_state is None:
        state = prepare_initial(lattice, scheme, guard=guard)
    else:
        if initial_state.lattice.n_max != lattice.n_max:
            raise ValueError("initial state lives on a different lattice")
        state = initial_state
        if guard is not None:
            check_truncation(state, guard)
    a0 = min(success_probability(state, oracle), 1.0)
    theta_g, r_used = _iteration_plan(a0, r)
    success = np.empty(r_used + 1, dtype=np.float64)
    success[0] = a0
    for k in range(r_used):
        state = grover_iteration(state, oracle, scheme, guard=None)
        success[k + 1] = success_probability(state, oracle)
    if guard is not None and r_used > 0:
        check_truncation(state, guard)
    return AmplifyResult(success, r_used, a0, theta_g, state)


def runtime_window_profile(
    initial_state: RotorState, *, cap: int = RUNTIME_CAP
) -> tuple[list[int], int, float, tuple[int, int]]:
    """Per-site optimal iteration counts over the central momentum window.

    The window spans [-floor(sqrt(3)*sigma), +ceil(sqrt(3)*sigma)], matching a
    uniform distribution of the same standard deviation.  Sites with exactly
    zero probability are skipped but counted; positive sites are capped at cap.
    Returns (runtimes, zero_sites, sigma, (lo, hi)).
    """
    p = probabilities(initial_state)
    sigma = momentum_std(initial_state)
    if sigma <= 0.0:
        raise ValueError("momentum distribution has zero spread, no runtime window")
    lo = -math.floor(math.sqrt(3.0) * sigma)
    hi = math.ceil(math.sqrt(3.0) * sigma)
    n_max = initial_state.lattice.n_max
    if hi > n_max:
        raise ValueError(
            f"runtime window [{lo}, {hi}] exceeds the lattice (n_max={n_max})"
        )
    runtimes: list[int] = []
    zero_sites = 0
    for n in range(lo, hi + 1):
        p_n = float(p[n + n_max])
        if p_n <= 0.0:
            zero_sites += 1
            continue
        runtimes.append(min(optimal_iterations(min(p_n, 1.0)), cap))
    if not runtimes:
        raise ValueError("every site in the runtime window carries zero probability")
    return runtimes, zero_sites, sigma, (lo, hi)


def average_runtime(initial_state: RotorState, *, cap: int = RUNTIME_CAP) -> float:
    """Mean single-target search runtime over the central momentum window."""
    runtimes, _, _, _ = runtime_window_profile(initial_state, cap=cap)
    return sum(runtimes) / len(runtimes)


def uniform_reference_runtime(n_sites: int) -> int:
    """Optimal iteration count for a uniform superposition over n_sites sites."""
    if n_sites < 2:
        raise ValueError("need at least 2 sites")
    return optimal_iterations(1.0 / n_sites)


def profile_flatness(state: RotorState) -> float:
    """Max/mean probability ratio over the central momentum window (1 = flat).

    Uses the same window as the runtime average; flat profiles keep every
    per-site runtime near the uniform-search value.
    """
    p = probabilities(state)
    sigma = momentum_std(state)
    if sigma <= 0.0:
        raise ValueError("momentum distribution has zero spread")
    half = math.floor(math.sqrt(3.0) * sigma)
    n_max = state.lattice.n_max
    if half > n_max:
        raise ValueError("profile window exceeds the lattice")
    window = p[n_max - half : n_max + half + 1]
    return float(window.max() / window.mean())


@dataclass(frozen=True)
class RuntimeScalingResult:
    """Log-log scaling of average runtime against effective number of sites."""

    family: str
    rows: tuple[tuple[float, float], ...]
    slope: float


RUNTIME_FAMILIES = ("uniform", "cosine", "modified", "detuned")


def runtime_scaling(
    family: str,
    sizes: tuple[int | float, ...] | list[int | float],
    *,
    phi: float = 2.0,
    M: int = 100,
    epsilon: float = 0.3,
    cap: int = RUNTIME_CAP,
    guard: float | None = DEFAULT_GUARD_THRESHOLD,
) -> RuntimeScalingResult:
    """Average runtime against effective size N for one preparation family.

    ``uniform`` sweeps exact uniform superpositions over the given site counts.
    ``cosine`` / ``modified`` sweep the kick count of the resonant schemes, and
    ``detuned`` sweeps phi at fixed epsilon; for prepared states the effective
    size is N = 2*sqrt(3)*sigma, a uniform distribution of equal spread.
    """
    if family not in RUNTIME_FAMILIES:
        raise ValueError(f"family must be one of {RUNTIME_FAMILIES}, got {family!r}")
    if len(sizes) < 4:
        raise ValueError("need at least 4 sizes for a scaling fit")
    rows: list[tuple[float, float]] = []
    for size in sizes:
        if family == "uniform":
            n_sites = int(size)
            rows.append((float(n_sites), float(uniform_reference_runtime(n_sites))))
            continue
        if family == "cosine":
            scheme: InitScheme = ResonantKicks(phi, int(size))
        elif family == "modified":
            scheme = ModifiedPotentialKicks(phi, M, int(size))
        else:
            scheme = DetunedPair(float(size), epsilon)
        lattice = lattice_for_scheme(scheme)
        psi0 = prepare_initial(lattice, scheme, guard=guard)
        sigma = momentum_std(psi0)
        rows.append((2.0 * math.sqrt(3.0) * sigma, average_runtime(psi0, cap=cap)))
    log_n = np.log([n for n, _ in rows])
    log_t = np.log([t for _, t in rows])
    if np.ptp(log_n) <= 0.0 or not np.all(np.isfinite(log_t)):
        raise ValueError("degenerate scaling fit (repeated sizes or zero runtimes)")
    slope = float(np.polyfit(log_n, log_t, 1)[0])
    return RuntimeScalingResult(family, tuple(rows), slope)
