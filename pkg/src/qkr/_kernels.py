"""Hot numerical kernels: numba-accelerated with a pure-numpy fallback.

The environment variable QKR_BACKEND selects the implementation:

* ``auto``  (default) - numba when importable, otherwise numpy
* ``numba`` - require numba, raise if it is missing
* ``numpy`` - force the pure-numpy path

Both implementations are importable directly (``trajectory_success_batch_numpy``
and the twins in ``qkr._kernels_numba``) so they can be benchmarked against
each other; see ``benchmarks/bench_backends.py``.

All amplification kernels work on angle-representation amplitude vectors.
Marked momentum states appear as their plane waves chi_m[k] =
exp(i*n_m*theta_k)/sqrt(dim), which are orthonormal on the ring, so the oracle
is a reflection across their span and the reflection about |0> subtracts the
mean amplitude.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "accumulate_density",
    "accumulate_density_numpy",
    "active_backend",
    "dephasing_map",
    "dephasing_map_numpy",
    "trajectory_success_batch",
    "trajectory_success_batch_numpy",
]

_NUMBA_OK: bool | None = None


def _numba_available() -> bool:
    global _NUMBA_OK
    if _NUMBA_OK is None:
        try:
            import numba  # noqa: F401

            _NUMBA_OK = True
        except ImportError:
            _NUMBA_OK = False
    return _NUMBA_OK


def active_backend() -> str:
    """Resolve the kernel backend from QKR_BACKEND (auto|numba|numpy)."""
    env = os.environ.get("QKR_BACKEND", "auto").strip().lower()
    if env == "numpy":
        return "numpy"
    if env == "numba":
        if not _numba_available():
            raise RuntimeError("QKR_BACKEND=numba but numba is not importable")
        return "numba"
    if env == "auto" or env == "":
        return "numba" if _numba_available() else "numpy"
    raise ValueError(f"QKR_BACKEND must be one of auto|numba|numpy, got {env!r}")


def trajectory_success_batch_numpy(
    psi0: np.ndarray,
    v: np.ndarray,
    chi: np.ndarray,
    rev_totals: np.ndarray,
    fwd_totals: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch of amplification trajectories with merged resonant kick totals.

    psi0: (dim,) initial angle-representation state shared by all realizations.
    chi: (n_marked, dim) orthonormal marked plane waves.
    rev_totals/fwd_totals: (R, r) summed kick strengths of each reverse/forward
    cycle (reverse totals already carry their sign).
    Returns (success (R, r+1), final angle states (R, dim)).
    """
    rev_totals = np.atleast_2d(np.asarray(rev_totals, dtype=np.float64))
    fwd_totals = np.atleast_2d(np.asarray(fwd_totals, dtype=np.float64))
    n_real, r = rev_totals.shape
    dim = psi0.shape[0]
    psi = np.tile(np.asarray(psi0, dtype=np.complex128), (n_real, 1))
    success = np.empty((n_real, r + 1), dtype=np.float64)
    chi_ct = np.ascontiguousarray(chi.conj().T)
    proj = psi @ chi_ct
    success[:, 0] = np.einsum("rm,rm->r", proj, proj.conj()).real
    for i in range(r):
        psi -= 2.0 * (proj @ chi)
        psi *= np.exp(rev_totals[:, i, None] * (-1j) * v[None, :])
        psi -= (2.0 / dim) * psi.sum(axis=1, keepdims=True)
        psi *= np.exp(fwd_totals[:, i, None] * (-1j) * v[None, :])
        proj = psi @ chi_ct
        success[:, i + 1] = np.einsum("rm,rm->r", proj, proj.conj()).real
    return success, psi


def accumulate_density_numpy(
    psi0: np.ndarray, v: np.ndarray, totals: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate outer products of kicked pure states over noise realizations.

    Realization r evolves psi0 by a merged kick of strength totals[r]; returns
    (mean of |psi_r><psi_r|, elementwise mean of |entry|^2) for error bars.
    """
    totals = np.asarray(totals, dtype=np.float64)
    n_real = totals.shape[0]
    waves = np.asarray(psi0, dtype=np.complex128)[None, :] * np.exp(
        totals[:, None] * (-1j) * v[None, :]
    )
    mean_rho = (waves.T @ waves.conj()) / n_real
    mag = (waves.real**2 + waves.imag**2).T
    second_moment = (mag @ mag.T) / n_real
    return mean_rho, second_moment


def dephasing_map_numpy(
    rho: np.ndarray, v: np.ndarray, m: int, phi_mean: float, delta: float
) -> np.ndarray:
    """Apply m noise-averaged kicks to an angle-representation density matrix.

    Element (k, l) picks up the deterministic phase exp(-i*m*phi*(V_k - V_l))
    and the Gaussian dephasing factor exp(-m*delta^2*(V_k - V_l)^2/2).
    """
    dv = v[:, None] - v[None, :]
    return rho * np.exp((-1j * m * phi_mean) * dv - (0.5 * m * delta * delta) * dv * dv)


def _numba_impls():
    from . import _kernels_numba

    return _kernels_numba


def trajectory_success_batch(
    psi0: np.ndarray,
    v: np.ndarray,
    chi: np.ndarray,
    rev_totals: np.ndarray,
    fwd_totals: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    rev = np.ascontiguousarray(np.atleast_2d(rev_totals), dtype=np.float64)
    fwd = np.ascontiguousarray(np.atleast_2d(fwd_totals), dtype=np.float64)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.float64)
    chi = np.ascontiguousarray(chi, dtype=np.complex128)
    if active_backend() == "numba":
        return _numba_impls().trajectory_success_batch(psi0, v, chi, rev, fwd)
    return trajectory_success_batch_numpy(psi0, v, chi, rev, fwd)


def accumulate_density(
    psi0: np.ndarray, v: np.ndarray, totals: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.float64)
    totals = np.ascontiguousarray(totals, dtype=np.float64)
    if active_backend() == "numba":
        return _numba_impls().accumulate_density(psi0, v, totals)
    return accumulate_density_numpy(psi0, v, totals)


def dephasing_map(
    rho: np.ndarray, v: np.ndarray, m: int, phi_mean: float, delta: float
) -> np.ndarray:
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.float64)
    if active_backend() == "numba":
        return _numba_impls().dephasing_map(rho, v, int(m), float(phi_mean), float(delta))
    return dephasing_map_numpy(rho, v, int(m), float(phi_mean), float(delta))
