"""Computational-basis encoding of N spins-1/2.

Basis integer ``s`` encodes the configuration bitwise: bit ``i`` set means spin
``i`` points up (``I_i^z = +1/2``), cleared means down (``-1/2``). States are
plain complex numpy arrays of length ``2**N``; batches of states are stored as
columns of a ``(2**N, K)`` array and every kernel here accepts either form.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def n_spins(state: np.ndarray) -> int:
    dim = state.shape[0]
    N = dim.bit_length() - 1
    if dim < 2 or 1 << N != dim:
        raise ValueError(f"state length {dim} is not a power of two")
    return N


def _column(vec: np.ndarray, state: np.ndarray) -> np.ndarray:
    return vec if state.ndim == 1 else vec.reshape((-1,) + (1,) * (state.ndim - 1))


@lru_cache(maxsize=None)
def site_sz_table(N: int) -> np.ndarray:
    """``(2**N, N)`` table of ``I_i^z`` eigenvalues, ``bit_i(s) - 1/2``."""
    s = np.arange(1 << N)
    table = ((s[:, None] >> np.arange(N)) & 1) - 0.5
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def magnetization(N: int) -> np.ndarray:
    """Total ``I^z`` eigenvalue ``M_s`` for every basis state."""
    m = site_sz_table(N).sum(axis=1)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def popcount(N: int) -> np.ndarray:
    p = (site_sz_table(N) + 0.5).sum(axis=1).astype(np.int64)
    p.setflags(write=False)
    return p


def apply_site_sz(state: np.ndarray, i: int) -> np.ndarray:
    N = n_spins(state)
    if not 0 <= i < N:
        raise IndexError(f"site {i} out of range for N={N}")
    return state * _column(site_sz_table(N)[:, i], state)


def apply_total_sz(state: np.ndarray) -> np.ndarray:
    return state * _column(magnetization(n_spins(state)), state)


def apply_rotation(state: np.ndarray, phi: float) -> np.ndarray:
    """Apply ``exp(-i phi I^z)``."""
    phase = np.exp(-1j * phi * magnetization(n_spins(state)))
    return state * _column(phase, state)


def random_phase_state(N: int, seed) -> np.ndarray:
    """Uniform-modulus state with i.i.d. phases on ``[0, 2 pi)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=1 << N)
    return np.exp(1j * theta) / np.sqrt(1 << N)


def basis_state(N: int, s: int) -> np.ndarray:
    psi = np.zeros(1 << N, dtype=complex)
    psi[s] = 1.0
    return psi


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    if a.shape != b.shape:
        raise ValueError(f"size mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def norm(state: np.ndarray) -> float:
    return float(np.linalg.norm(state))
