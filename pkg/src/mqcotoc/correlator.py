"""Pair echo correlators ``E_ij(t, phi) = 2**-N Tr{I_i^z(t) R^dag I_j^z(t) R}``.

Because ``R = exp(-i phi I^z)`` is diagonal, every correlator is a finite
Fourier series in ``phi``::

    E_ij(t, phi) = sum_m C_ij(t, m) exp(i m phi),   |m| <= N

Both estimators compute the coefficients ``C_ij(t, m)`` once per time and
evaluate any phase grid afterwards; this is the canonical schedule, and the
reason one evolution batch serves the whole phi grid.

Exact estimator
    Averages over all ``2**N`` basis states at once by building the dense
    Trotter unitary ``U`` per parity block. With ``P_mu = U_mu^T conj(U_mu)``
    the Gram matrix of the rows of magnetization ``mu``::

        C_ij(m) = 2**-N sum_mu d_i^T (P_mu * conj(P_{mu+m})) d_j

    where ``d_i`` holds the ``I_i^z`` eigenvalues. No ``N`` separate operator
    products are needed.

Stochastic estimator
    Replaces the basis average by random-phase states ``psi``. Splitting
    ``psi`` into magnetization sectors makes ``R psi`` a phase sum, so one
    backward evolution of the sectors and ``N (N+1)`` forward evolutions give
    every phase. Up to ``DENSE_APPLY_MAX_N`` spins the evolutions apply the
    dense Trotter unitary instead of sweeping gates; both give the same
    product formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .hilbert import magnetization, random_phase_state, site_sz_table
from .propagator import TrotterPlan, evolve, parity_blocks, step_count, trotter_unitary_series

EXACT_MAX_N = 12
DENSE_APPLY_MAX_N = 10
_STOCHASTIC_MAX_COLUMNS = 1 << 22  # amplitudes per evolution batch


@dataclass(frozen=True, eq=False)
class EchoMatrix:
    t: float
    phi: float
    E: np.ndarray
    estimator: str = "exact"
    n_states: int | None = None
    seed: int | None = None
    stderr: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.E.shape[0]


@dataclass(frozen=True, eq=False)
class EchoCoefficients:
    """Fourier coefficients of the echo matrix at one time.

    ``C[i, j, N + m]`` is the weight of ``exp(i m phi)`` in ``E_ij``.
    ``samples`` keeps per-state coefficients for the stochastic estimator.
    """

    t: float
    C: np.ndarray
    estimator: str = "exact"
    n_states: int | None = None
    seed: int | None = None
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.C.shape[0]

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def _phases(self, phis) -> np.ndarray:
        return np.exp(1j * np.outer(np.atleast_1d(phis), self.orders))

    def on_grid(self, phis) -> np.ndarray:
        """Echo matrices at every phase, shape ``(n_phi, N, N)``."""
        return np.einsum("ijm,km->kij", self.C, self._phases(phis))

    def sample_grid(self, phis) -> np.ndarray:
        """Per-state echo matrices, shape ``(n_states, n_phi, N, N)``."""
        if self.samples is None:
            raise ValueError("no per-state samples for the exact estimator")
        return np.einsum("rijm,km->rkij", self.samples, self._phases(phis))

    def at(self, phi: float) -> EchoMatrix:
        E = self.on_grid([phi])[0]
        stderr = None
        if self.samples is not None:
            stderr = complex_stderr(self.sample_grid([phi])[:, 0])
        return EchoMatrix(self.t, float(phi), E, self.estimator, self.n_states, self.seed, stderr)


def complex_stderr(samples: np.ndarray) -> np.ndarray:
    """Standard error of the mean over axis 0, real and imaginary parts combined."""
    n = samples.shape[0]
    if n < 2:
        return np.full(samples.shape[1:], np.nan)
    var = samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1)
    return np.sqrt(var / n)


def _check_exact_size(N: int) -> None:
    if N > EXACT_MAX_N:
        raise ValueError(f"exact estimator limited to N <= {EXACT_MAX_N}, got N={N}")


def _negative_orders(C_pos: np.ndarray, N: int) -> np.ndarray:
    """Fill ``C(-m) = conj(C(m))`` from the ``m >= 0`` half."""
    C = np.zeros(C_pos.shape[:2] + (2 * N + 1,), dtype=complex)
    C[..., N:] = C_pos
    C[..., :N] = np.conj(C_pos[..., :0:-1])
    return C


def coefficients_from_unitary(N: int, blocks) -> np.ndarray:
    """Exact echo coefficients for a unitary given as parity blocks."""
    M = magnetization(N)
    d = site_sz_table(N)
    C_pos = np.zeros((N, N, N + 1), dtype=complex)
    for idx, U in zip(parity_blocks(N), blocks):
        Mb = M[idx]
        db = np.ascontiguousarray(d[idx]).astype(complex)
        levels = np.unique(Mb)
        gram = []
        for mu in levels:
            rows = U[Mb == mu]
            gram.append(rows.T @ rows.conj())
        buf = np.empty_like(gram[0])
        for a, mu in enumerate(levels):
            for b in range(a, len(levels)):
                m = int(round(levels[b] - mu))
                np.conjugate(gram[b], out=buf)
                buf *= gram[a]
                C_pos[:, :, m] += db.T @ (buf @ db)
    C_pos /= 1 << N
    return _negative_orders(C_pos, N)


def exact_coefficient_series(plan: TrotterPlan, times):
    """Yield exact ``EchoCoefficients`` for each time in non-decreasing ``times``."""
    N = plan.N
    _check_exact_size(N)
    times = [float(t) for t in times]
    counts = [step_count(t, plan.dt) for t in times]
    for t, (_, blocks) in zip(times, trotter_unitary_series(plan, counts)):
        yield EchoCoefficients(t, coefficients_from_unitary(N, blocks), "exact")


@lru_cache(maxsize=16)
def _exact_cached(plan: TrotterPlan, n_steps: int) -> EchoCoefficients:
    t = n_steps * plan.dt
    return next(exact_coefficient_series(plan, [t]))


def echo_coefficients_exact(plan: TrotterPlan, t: float) -> EchoCoefficients:
    _check_exact_size(plan.N)
    coeffs = _exact_cached(plan, step_count(t, plan.dt))
    return EchoCoefficients(float(t), coeffs.C, "exact")


def echo_matrix_exact(plan: TrotterPlan, t: float, phi: float) -> EchoMatrix:
    return echo_coefficients_exact(plan, t).at(phi)


# -- stochastic estimator -----------------------------------------------------

def state_seeds(seed: int, n_states: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_states)


@lru_cache(maxsize=8)
def _unitary_blocks(plan: TrotterPlan, n_steps: int) -> list[np.ndarray]:
    return next(trotter_unitary_series(plan, [n_steps]))[1]


def _propagate(cols: np.ndarray, plan: TrotterPlan, t: float, direction: int) -> np.ndarray:
    if plan.N > DENSE_APPLY_MAX_N:
        return evolve(cols, plan, t, direction)
    out = np.empty_like(cols, dtype=complex)
    for idx, U in zip(parity_blocks(plan.N), _unitary_blocks(plan, step_count(t, plan.dt))):
        out[idx] = (U if direction == 1 else U.conj().T) @ cols[idx]
    return out


def _stochastic_batch(plan: TrotterPlan, t: float, states: np.ndarray) -> np.ndarray:
    """Per-state coefficients for the columns of ``states``."""
    N = plan.N
    dim = 1 << N
    K = states.shape[1]
    M = magnetization(N)
    d = site_sz_table(N)
    levels = np.unique(M)
    L = levels.size
    masks = [M == mu for mu in levels]

    sectors = np.zeros((dim, K, L), dtype=complex)
    for v, mask in enumerate(masks):
        sectors[mask, :, v] = states[mask]
    back = _propagate(sectors.reshape(dim, K * L), plan, t, -1).reshape(dim, K, L)

    # forward columns ordered (state, site, sector)
    fwd = np.einsum("xj,xkv->xkjv", d, back).reshape(dim, K * N * L)
    fwd = _propagate(fwd, plan, t, 1).reshape(dim, K, N, L)
    left = fwd.sum(axis=3)  # A_i psi

    C = np.zeros((K, N, N, 2 * N + 1), dtype=complex)
    for a, mu in enumerate(levels):
        rows = masks[a]
        lmu = left[rows].conj()
        fmu = fwd[rows]
        for v, nu in enumerate(levels):
            m = int(round(mu - nu))
            if m % 2:
                continue
            C[:, :, :, N + m] += np.einsum("xki,xkj->kij", lmu, fmu[:, :, :, v])
    return C


def echo_coefficients_stochastic(plan: TrotterPlan, t: float, n_states: int, seed: int) -> EchoCoefficients:
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    N = plan.N
    per_state = (1 << N) * (N + 1) * (N + 1)
    chunk = max(1, _STOCHASTIC_MAX_COLUMNS // per_state)
    seqs = state_seeds(seed, n_states)
    samples = []
    for start in range(0, n_states, chunk):
        states = np.stack([random_phase_state(N, s) for s in seqs[start:start + chunk]], axis=1)
        samples.append(_stochastic_batch(plan, t, states))
    samples = np.concatenate(samples, axis=0)
    return EchoCoefficients(float(t), samples.mean(axis=0), "stochastic", n_states, seed, samples)


def echo_matrix_stochastic(plan: TrotterPlan, t: float, phi: float, n_states: int, seed: int) -> EchoMatrix:
    return echo_coefficients_stochastic(plan, t, n_states, seed).at(phi)


# -- decompositions -----------------------------------------------------------

class EchoDecomposition(NamedTuple):
    M_G: float
    M_L: float
    M_CT: float
    site_L: np.ndarray
    site_CT: np.ndarray


def decompose_echo(echo: EchoMatrix, imag_tol: float | None = None) -> EchoDecomposition:
    """Split the global echo into local and cross-term parts.

    The imaginary residue is checked against ``imag_tol`` (default ``1e-9`` for
    the exact estimator, unchecked for stochastic estimates where it is noise).
    """
    E = echo.E
    N = echo.N
    if imag_tol is None and echo.estimator == "exact":
        imag_tol = 1e-9
    diag = np.diag(E)
    site_L = 4.0 / N * diag
    site_CT = 4.0 / N * (E.sum(axis=1) - diag)
    if imag_tol is not None:
        worst = max(np.abs(site_L.imag).max(), np.abs(site_CT.imag).max())
        if worst > imag_tol:
            raise ValueError(f"imaginary residue {worst:.3e} exceeds {imag_tol:.1e}")
    site_L = site_L.real
    site_CT = site_CT.real
    M_L = float(site_L.sum())
    M_CT = float(site_CT.sum())
    return EchoDecomposition(M_L + M_CT, M_L, M_CT, site_L, site_CT)


def distance_weights(N: int, n: int) -> np.ndarray:
    """Mask selecting the pairs ``(i, i +- n)`` around the ring.

    At ``n = 0`` and, for even ``N``, at the antipodal offset both translates
    hit the same site, which is then counted once.
    """
    if not 0 <= n <= N // 2:
        raise ValueError(f"distance {n} out of range for N={N}")
    W = np.zeros((N, N))
    rows = np.arange(N)
    W[rows, (rows + n) % N] = 1.0
    W[rows, (rows - n) % N] = 1.0
    return W


def distance_echo(echo: EchoMatrix, n: int) -> float:
    N = echo.N
    W = distance_weights(N, n)
    return float((4.0 / N * np.sum(W * echo.E)).real)
