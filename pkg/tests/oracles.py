"""Independent dense-operator constructions used as test oracles.

Operators are assembled from Kronecker products of 2x2 spin matrices, with
spin 0 as the least significant factor, and never touch the production kernels.
"""

from functools import reduce

import numpy as np
from scipy.linalg import expm

SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
# basis order within a spin: index 0 = down, index 1 = up
SZ = np.array([[-1, 0], [0, 1]], dtype=complex) / 2
ID = np.eye(2, dtype=complex)


def site_op(op, i, N):
    factors = [op if k == i else ID for k in range(N - 1, -1, -1)]
    return reduce(np.kron, factors)


def dq_pair(i, j, N):
    return site_op(SX, i, N) @ site_op(SX, j, N) - site_op(SY, i, N) @ site_op(SY, j, N)


def total_sz(N):
    return sum(site_op(SZ, i, N) for i in range(N))


def hamiltonian(D, h):
    N = len(h)
    H = sum(h[i] * site_op(SZ, i, N) for i in range(N))
    for i in range(N):
        for j in range(i + 1, N):
            if D[i, j] != 0:
                H = H + D[i, j] * dq_pair(i, j, N)
    return H


def trotter_step_matrix(D, h, dt):
    """Symmetric step built literally from matrix exponentials.

    exp(-i dt Z / 2) P_1 ... P_{k-1} P_k^2 P_{k-1} ... P_1 exp(-i dt Z / 2)
    with P_p = exp(-i dt D_p X_p / 2) for the row-major pairs p.
    """
    N = len(h)
    Z = sum(h[i] * site_op(SZ, i, N) for i in range(N))
    half = expm(-0.5j * dt * Z)
    gates = [expm(-0.5j * dt * D[i, j] * dq_pair(i, j, N))
             for i in range(N) for j in range(i + 1, N) if D[i, j] != 0]
    step = half
    for P in gates + gates[::-1]:
        step = P @ step
    return half @ step


def echo_matrix_dense(U, phi, N):
    """``E_ij = 2**-N Tr{A_i R^dag A_j R}`` with ``A_i = U I_i^z U^dag``."""
    R = expm(-1j * phi * total_sz(N))
    A = [U @ site_op(SZ, i, N) @ U.conj().T for i in range(N)]
    E = np.empty((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            E[i, j] = np.trace(A[i] @ R.conj().T @ A[j] @ R) / 2**N
    return E
