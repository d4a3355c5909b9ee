"""Time evolution under the ring Hamiltonian.

    H = sum_i h_i I_i^z + sum_{i<j} D_ij (I_i^x I_j^x - I_i^y I_j^y)

The production path is a symmetric second-order Trotter product of pair gates;
a dense eigendecomposition serves as the small-N oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import n_spins, popcount, site_sz_table
from .lattice import CouplingTable

ORACLE_MAX_N = 10
DEFAULT_DT = 0.01


@dataclass(frozen=True, eq=False)
class TrotterPlan:
    couplings: CouplingTable
    dt: float = DEFAULT_DT
    pairs: tuple = field(init=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        pairs = tuple((i, j) for i, j in self.couplings.pairs() if self.couplings.D[i, j] != 0)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_half_phase", {})
        object.__setattr__(self, "_sweep", {})

    @property
    def N(self) -> int:
        return self.couplings.N

    def half_zeeman_phase(self, direction: int) -> np.ndarray:
        cache = self._half_phase
        if direction not in cache:
            energies = site_sz_table(self.N) @ self.couplings.h
            cache[direction] = np.exp(-1j * direction * 0.5 * self.dt * energies)
        return cache[direction]

    def sweep(self, direction: int) -> list:
        """Palindromic gate list ``(i, j, cos, sin)`` of the half rotation angles."""
        cache = self._sweep
        if direction not in cache:
            D = self.couplings.D
            gates = []
            for k, (i, j) in enumerate(self.pairs):
                last = k == len(self.pairs) - 1
                theta = direction * D[i, j] * self.dt * (1.0 if last else 0.5)
                gates.append((i, j, np.cos(theta / 2), np.sin(theta / 2)))
            cache[direction] = gates + gates[-2::-1]
        return cache[direction]

    def with_dt(self, dt: float) -> "TrotterPlan":
        return TrotterPlan(self.couplings, dt)


def _check_direction(direction: int) -> int:
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction!r}")
    return direction


def _as_work(state: np.ndarray, inplace: bool) -> np.ndarray:
    if inplace:
        if not state.flags.c_contiguous:
            raise ValueError("in-place evolution needs a C-contiguous array")
        return state
    return np.array(state, dtype=complex, order="C")


def _rotate_pair(work: np.ndarray, N: int, i: int, j: int, c: float, s: float) -> None:
    tensor = work.reshape((2,) * N + work.shape[1:])
    up = [slice(None)] * tensor.ndim
    dn = [slice(None)] * tensor.ndim
    # bit i lives on axis N-1-i of the C-ordered reshape
    up[N - 1 - i] = up[N - 1 - j] = 1
    dn[N - 1 - i] = dn[N - 1 - j] = 0
    # the trailing Ellipsis keeps a writable view even when no axes remain
    a = tensor[tuple(up) + (Ellipsis,)]
    b = tensor[tuple(dn) + (Ellipsis,)]
    saved = a.copy()
    a *= c
    a += (-1j * s) * b
    b *= c
    b += (-1j * s) * saved


def dq_pair_gate(state: np.ndarray, i: int, j: int, theta: float, inplace: bool = False) -> np.ndarray:
    """Apply ``exp(-i theta (I_i^x I_j^x - I_i^y I_j^y))``.

    Only the (up,up)/(down,down) amplitude pairs mix; the zero-quantum pair
    (up,down)/(down,up) is left untouched.
    """
    if i == j:
        raise ValueError("pair gate needs two distinct sites")
    N = n_spins(state)
    if not (0 <= i < N and 0 <= j < N):
        raise IndexError(f"sites ({i}, {j}) out of range for N={N}")
    work = _as_work(state, inplace)
    _rotate_pair(work, N, i, j, np.cos(theta / 2), np.sin(theta / 2))
    return work


def zeeman_gate(state: np.ndarray, h, dt: float, direction: int = 1, inplace: bool = False) -> np.ndarray:
    _check_direction(direction)
    N = n_spins(state)
    phase = np.exp(-1j * direction * dt * (site_sz_table(N) @ np.asarray(h, dtype=float)))
    work = _as_work(state, inplace)
    work *= phase if work.ndim == 1 else phase[:, None]
    return work


def trotter_step(state: np.ndarray, plan: TrotterPlan, direction: int = 1, inplace: bool = False) -> np.ndarray:
    """One symmetric second-order step.

    Half Zeeman phase, a palindromic pair sweep (half angles in row-major
    order, then the same gates reversed, the middle gate merged), half Zeeman
    phase. Overlapping pair terms do not commute, so a single one-way sweep
    would only be first order. The sequence is its own reverse, so the
    backward step (reversed order, negated angles) is the exact inverse.
    """
    _check_direction(direction)
    work = _as_work(state, inplace)
    N = plan.N
    phase = plan.half_zeeman_phase(direction)
    if work.ndim > 1:
        phase = phase[:, None]
    work *= phase
    for i, j, c, s in plan.sweep(direction):
        _rotate_pair(work, N, i, j, c, s)
    work *= phase
    return work


def step_count(t: float, dt: float) -> int:
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t!r}")
    ratio = t / dt
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"t={t!r} is not an integer multiple of dt={dt!r}")
    return n


def evolve(state: np.ndarray, plan: TrotterPlan, t: float, direction: int = 1, inplace: bool = False) -> np.ndarray:
    n = step_count(t, plan.dt)
    work = _as_work(state, inplace)
    for _ in range(n):
        trotter_step(work, plan, direction, inplace=True)
    return work


# -- dense step unitaries -----------------------------------------------------

def parity_blocks(N: int) -> list[np.ndarray]:
    """Basis indices grouped by popcount parity.

    The DQ term changes the popcount by 0 or 2, so evolution never mixes blocks.
    """
    p = popcount(N)
    return [np.flatnonzero(p % 2 == 0), np.flatnonzero(p % 2 == 1)]


def step_unitary_blocks(plan: TrotterPlan) -> list[np.ndarray]:
    """Dense matrix of one forward Trotter step, one block per parity sector."""
    N = plan.N
    blocks = []
    for idx in parity_blocks(N):
        cols = np.zeros((1 << N, idx.size), dtype=complex)
        cols[idx, np.arange(idx.size)] = 1.0
        trotter_step(cols, plan, 1, inplace=True)
        blocks.append(np.ascontiguousarray(cols[idx]))
    return blocks


def trotter_unitary_series(plan: TrotterPlan, counts):
    """Yield ``(n, blocks)`` with ``blocks`` the step unitary raised to ``n``.

    ``counts`` must be non-decreasing. Increments are built by binary powering
    and reused, so a uniform time grid costs one block product per point.
    """
    step = step_unitary_blocks(plan)
    squares = [step]
    increments: dict[int, list[np.ndarray]] = {}

    def power(d):
        if d not in increments:
            while (1 << len(squares)) <= d:
                squares.append([b @ b for b in squares[-1]])
            acc = None
            for k in range(d.bit_length()):
                if d >> k & 1:
                    acc = squares[k] if acc is None else [s @ a for s, a in zip(squares[k], acc)]
            increments[d] = acc
        return increments[d]

    current = [np.eye(b.shape[0], dtype=complex) for b in step]
    last = 0
    for n in counts:
        if n < last:
            raise ValueError("step counts must be non-decreasing")
        if n > last:
            current = [inc @ cur for inc, cur in zip(power(n - last), current)]
            last = n
        yield n, current


# -- dense oracle -------------------------------------------------------------

def dense_hamiltonian(couplings: CouplingTable) -> np.ndarray:
    N = couplings.N
    dim = 1 << N
    H = np.diag(site_sz_table(N) @ couplings.h)
    s = np.arange(dim)
    for i, j in couplings.pairs():
        Dij = couplings.D[i, j]
        if Dij == 0:
            continue
        mask = (1 << i) | (1 << j)
        both_up = s[(s & mask) == mask]
        # I_i^x I_j^x - I_i^y I_j^y = (S+S+ + S-S-)/2
        H[both_up, both_up ^ mask] += Dij / 2
        H[both_up ^ mask, both_up] += Dij / 2
    return H


@dataclass(frozen=True, eq=False)
class ExactPropagator:
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def N(self) -> int:
        return self.vectors.shape[0].bit_length() - 1

    def unitary(self, t: float, direction: int = 1) -> np.ndarray:
        phase = np.exp(-1j * direction * self.energies * t)
        return (self.vectors * phase) @ self.vectors.T


def exact_propagator(couplings: CouplingTable) -> ExactPropagator:
    if couplings.N > ORACLE_MAX_N:
        raise ValueError(f"dense oracle refused for N={couplings.N} > {ORACLE_MAX_N}")
    energies, vectors = np.linalg.eigh(dense_hamiltonian(couplings))
    return ExactPropagator(energies, vectors)


def exact_evolve(prop: ExactPropagator, state: np.ndarray, t: float, direction: int = 1) -> np.ndarray:
    _check_direction(direction)
    V = prop.vectors
    phase = np.exp(-1j * direction * prop.energies * t)
    coeffs = V.T @ state
    coeffs = coeffs * (phase if coeffs.ndim == 1 else phase[:, None])
    return V @ coeffs


def energy(couplings: CouplingTable, state: np.ndarray) -> float:
    return float(np.vdot(state, dense_hamiltonian(couplings) @ state).real)

