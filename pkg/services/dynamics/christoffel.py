"""Coriolis/centrifugal matrices from Christoffel symbols of a numeric inertia matrix."""
from typing import Callable

import numpy as np

MassFunction = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-6


def mass_matrix_partials(mass_fn: MassFunction, q: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """dM[i, j, k] = dM_ij / dq_k by central differences"""
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    partials = np.zeros((n, n, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        partials[:, :, k] = (mass_fn(q + step) - mass_fn(q - step)) / (2.0 * h)
    return partials


def christoffel_symbols(mass_fn: MassFunction, q: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """c[i, j, k] = 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i)"""
    dM = mass_matrix_partials(mass_fn, q, h)
    # dM.transpose(2, 0, 1)[i, j, k] = dM_jk / dq_i
    return 0.5 * (dM + dM.transpose(0, 2, 1) - dM.transpose(2, 0, 1))


def christoffel_coriolis(mass_fn: MassFunction, q: np.ndarray, qd: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """C_ij = sum_k c_ijk qd_k"""
    return christoffel_symbols(mass_fn, q, h) @ np.asarray(qd, dtype=float)


def mass_matrix_rate(mass_fn: MassFunction, q: np.ndarray, qd: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """dM/dt along qd"""
    return mass_matrix_partials(mass_fn, q, h) @ np.asarray(qd, dtype=float)
