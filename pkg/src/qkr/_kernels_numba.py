"""Numba twins of the hot kernels in qkr._kernels.

Imported lazily, only when the numba backend is active, so the package works
without numba installed. Results agree with the numpy implementations to
floating-point reduction order (same math, loops instead of matmuls).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = ["accumulate_density", "dephasing_map", "trajectory_success_batch"]


@njit(cache=True)
def trajectory_success_batch(psi0, v, chi, rev_totals, fwd_totals):
    n_real, r = rev_totals.shape
    dim = psi0.shape[0]
    n_marked = chi.shape[0]
    success = np.empty((n_real, r + 1), dtype=np.float64)
    final = np.empty((n_real, dim), dtype=np.complex128)
    proj = np.empty(n_marked, dtype=np.complex128)
    for a in range(n_real):
        psi = final[a]
        for j in range(dim):
            psi[j] = psi0[j]
        total = 0.0
        for m in range(n_marked):
            acc = 0.0 + 0.0j
            for j in range(dim):
                acc += np.conj(chi[m, j]) * psi[j]
            proj[m] = acc
            total += acc.real * acc.real + acc.imag * acc.imag
        success[a, 0] = total
        for i in range(r):
            for m in range(n_marked):
                c2 = 2.0 * proj[m]
                for j in range(dim):
                    psi[j] -= c2 * chi[m, j]
            s = rev_totals[a, i]
            for j in range(dim):
                ph = -s * v[j]
                psi[j] *= complex(math.cos(ph), math.sin(ph))
            acc0 = 0.0 + 0.0j
            for j in range(dim):
                acc0 += psi[j]
            c0 = 2.0 * acc0 / dim
            for j in range(dim):
                psi[j] -= c0
            s = fwd_totals[a, i]
            for j in range(dim):
                ph = -s * v[j]
                psi[j] *= complex(math.cos(ph), math.sin(ph))
            total = 0.0
            for m in range(n_marked):
                acc = 0.0 + 0.0j
                for j in range(dim):
                    acc += np.conj(chi[m, j]) * psi[j]
                proj[m] = acc
                total += acc.real * acc.real + acc.imag * acc.imag
            success[a, i + 1] = total
    return success, final


@njit(cache=True)
def accumulate_density(psi0, v, totals):
    n_real = totals.shape[0]
    dim = psi0.shape[0]
    s1 = np.zeros((dim, dim), dtype=np.complex128)
    s2 = np.zeros((dim, dim), dtype=np.float64)
    psi = np.empty(dim, dtype=np.complex128)
    for rdx in range(n_real):
        t = totals[rdx]
        for j in range(dim):
            ph = -t * v[j]
            psi[j] = psi0[j] * complex(math.cos(ph), math.sin(ph))
        for k in range(dim):
            pk = psi[k]
            for l in range(dim):
                w = pk * np.conj(psi[l])
                s1[k, l] += w
                s2[k, l] += w.real * w.real + w.imag * w.imag
    inv = 1.0 / n_real
    for k in range(dim):
        for l in range(dim):
            s1[k, l] *= inv
            s2[k, l] *= inv
    return s1, s2


@njit(cache=True)
def dephasing_map(rho, v, m, phi_mean, delta):
    dim = v.shape[0]
    out = np.empty((dim, dim), dtype=np.complex128)
    damp_coeff = 0.5 * m * delta * delta
    phase_coeff = m * phi_mean
    for k in range(dim):
        for l in range(dim):
            dv = v[k] - v[l]
            damp = math.exp(-damp_coeff * dv * dv)
            ph = -phase_coeff * dv
            out[k, l] = rho[k, l] * (damp * complex(math.cos(ph), math.sin(ph)))
    return out
