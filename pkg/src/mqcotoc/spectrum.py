"""Coherence spectra and cluster sizes.

Cluster sizes come out of two independent routes: the second moment of the
Fourier-decoded coherence distribution, and the trace of squared commutators
``[I^z, I_i^z(t)]`` built from evolved vectors. The second-moment convention
gives ``K(0) = 0`` (an isolated spin counts as zero, not one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlator import EXACT_MAX_N, EchoCoefficients, state_seeds
from .hilbert import magnetization, random_phase_state, site_sz_table
from .propagator import TrotterPlan, evolve


@dataclass(frozen=True)
class PhiGrid:
    n_phi: int

    def __post_init__(self):
        n = self.n_phi
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_phi must be a power of two, got {n}")

    @classmethod
    def for_spins(cls, N: int, n_phi: int | None = None) -> "PhiGrid":
        """Default grid ``max(32, 2**ceil(log2(2N + 2)))``; explicit sizes are validated."""
        if n_phi is None:
            n_phi = max(32, 1 << int(np.ceil(np.log2(2 * N + 2))))
        if n_phi < 2 * N + 2:
            raise ValueError(f"n_phi={n_phi} aliases coherence orders up to {N}; need >= {2 * N + 2}")
        return cls(n_phi)

    @property
    def values(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_phi // 2, self.n_phi // 2)


@dataclass(frozen=True, eq=False)
class CoherenceSpectrum:
    t: float
    orders: np.ndarray
    g: np.ndarray
    source: str = "G"

    def intensity(self, m: int) -> float:
        k = m - int(self.orders[0])
        if not 0 <= k < self.orders.size:
            return 0.0
        return float(self.g[k])


@dataclass(frozen=True, eq=False)
class KSeries:
    times: np.ndarray
    K_G: np.ndarray
    K_L: np.ndarray
    K_CT: np.ndarray
    site_G: np.ndarray
    site_L: np.ndarray
    site_CT: np.ndarray
    err_G: np.ndarray | None = None
    err_L: np.ndarray | None = None
    err_CT: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.site_G.shape[1]


def _check_uniform(phis, n_phi: int) -> None:
    phis = np.asarray(phis, dtype=float)
    expected = 2 * np.pi * np.arange(n_phi) / n_phi
    if phis.shape != (n_phi,) or not np.allclose(phis, expected, rtol=0, atol=1e-12):
        raise ValueError("samples must lie on the uniform grid 2 pi k / n_phi")


def decode_orders(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """DFT along axis 0 into centered orders ``-n/2 .. n/2-1``.

    Computes ``g_m = (1/n) sum_k M(phi_k) exp(-i m phi_k)`` for every trailing
    index at once.
    """
    n = samples.shape[0]
    g = np.fft.fftshift(np.fft.fft(samples, axis=0), axes=0) / n
    return np.arange(-n // 2, n // 2), g


def decode_spectrum(samples, phis=None, t: float = 0.0, source: str = "G",
                    imag_tol: float | None = 1e-9) -> CoherenceSpectrum:
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n < 2 or n & (n - 1):
        raise ValueError(f"need a power-of-two number of phase samples, got {n}")
    if phis is not None:
        _check_uniform(phis, n)
    orders, g = decode_orders(samples)
    if imag_tol is not None:
        residue = np.abs(g.imag).max()
        if residue > imag_tol:
            raise ValueError(f"imaginary residue {residue:.3e} in decoded spectrum")
    return CoherenceSpectrum(float(t), orders, g.real.copy(), source)


def cluster_size_from_spectrum(spectrum: CoherenceSpectrum) -> float:
    return float(2.0 * np.sum(spectrum.orders.astype(float) ** 2 * spectrum.g))


# -- spectrum route over a whole echo matrix -----------------------------------

def site_echoes(E_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-site local and cross echoes, each normalized to 1 at ``t = 0``.

    ``E_grid`` has shape ``(..., N, N)``; results have shape ``(..., N)``.
    """
    diag = np.diagonal(E_grid, axis1=-2, axis2=-1)
    return 4.0 * diag, 4.0 * (E_grid.sum(axis=-1) - diag)


@dataclass(frozen=True, eq=False)
class SpectrumRoute:
    """Everything derived from one echo coefficient set on a phase grid."""

    t: float
    orders: np.ndarray
    g_G: np.ndarray
    g_L: np.ndarray
    g_CT: np.ndarray
    site_g_L: np.ndarray  # (n_orders, N)
    site_g_CT: np.ndarray
    site_K_L: np.ndarray
    site_K_CT: np.ndarray
    err: tuple | None = None  # (err_G, err_L, err_CT) for stochastic input

    @property
    def K_L(self) -> float:
        return float(self.site_K_L.mean())

    @property
    def K_CT(self) -> float:
        return float(self.site_K_CT.mean())

    @property
    def K_G(self) -> float:
        return self.K_L + self.K_CT

    @property
    def site_K_G(self) -> np.ndarray:
        return self.site_K_L + self.site_K_CT

    def spectrum(self, source: str = "G") -> CoherenceSpectrum:
        g = {"G": self.g_G, "L": self.g_L, "CT": self.g_CT}[source]
        return CoherenceSpectrum(self.t, self.orders, g, source)


def _site_k(E_grid: np.ndarray, imag_tol):
    local, cross = site_echoes(E_grid)
    orders, g_local = decode_orders(local)
    _, g_cross = decode_orders(cross)
    if imag_tol is not None:
        # a single site's cross echo need not be even in phi; only the site sum is
        residue = max(np.abs(g_local.imag).max(), np.abs(g_cross.imag.sum(axis=-1)).max())
        if residue > imag_tol:
            raise ValueError(f"imaginary residue {residue:.3e} in decoded spectrum")
    w = 2.0 * orders.astype(float) ** 2
    k_local = np.tensordot(w, g_local.real, axes=1)
    k_cross = np.tensordot(w, g_cross.real, axes=1)
    return orders, g_local.real, g_cross.real, k_local, k_cross


def spectrum_route(coeffs: EchoCoefficients, grid: PhiGrid | None = None) -> SpectrumRoute:
    """Echo matrices on the phase grid, decoded per site and summed.

    Per-site sizes ``K^i`` average to the totals: ``K = sum_i K^i / N``.
    """
    N = coeffs.N
    grid = grid or PhiGrid.for_spins(N)
    if grid.n_phi < 2 * N + 2:
        raise ValueError("phase grid too coarse for this ring")
    exact = coeffs.estimator == "exact"
    E_grid = coeffs.on_grid(grid.values)
    if not exact:
        E_grid = E_grid.real
    orders, gl, gc, kl, kc = _site_k(E_grid, 1e-9 if exact else None)
    err = None
    if coeffs.samples is not None and coeffs.samples.shape[0] > 1:
        per = coeffs.sample_grid(grid.values).real
        _, _, _, skl, skc = _site_k(np.moveaxis(per, 0, 1), None)
        n = per.shape[0]
        kL, kCT = skl.mean(axis=1), skc.mean(axis=1)
        se = lambda x: float(np.std(x, ddof=1) / np.sqrt(n))  # noqa: E731
        err = (se(kL + kCT), se(kL), se(kCT))
    g_L = gl.sum(axis=1) / N
    g_CT = gc.sum(axis=1) / N
    return SpectrumRoute(coeffs.t, orders, g_L + g_CT, g_L, g_CT, gl, gc, kl, kc, err)


def kseries_from_routes(routes) -> KSeries:
    routes = list(routes)
    times = np.array([r.t for r in routes])
    site_L = np.array([r.site_K_L for r in routes])
    site_CT = np.array([r.site_K_CT for r in routes])
    site_G = site_L + site_CT
    errs = [r.err for r in routes]
    err_G = err_L = err_CT = None
    if all(e is not None for e in errs) and errs:
        err_G, err_L, err_CT = (np.array(x) for x in zip(*errs))
    return KSeries(times, site_G.mean(axis=1), site_L.mean(axis=1), site_CT.mean(axis=1),
                   site_G, site_L, site_CT, err_G, err_L, err_CT)


# -- direct commutator route ----------------------------------------------------

def _commutator_vectors(plan: TrotterPlan, t: float, states: np.ndarray, basis: bool) -> np.ndarray:
    """``[I^z, I_i^z(t)] psi`` for every site and column, shape ``(dim, K, N)``.

    For basis columns ``I^z psi = M_s psi`` and the second evolution per site
    collapses into a scale factor.
    """
    N = plan.N
    dim, K = states.shape
    M = magnetization(N)
    d = site_sz_table(N)
    if basis:
        back = evolve(states, plan, t, -1)
        fwd = np.einsum("xi,xk->xki", d, back).reshape(dim, K * N)
        evolve(fwd, plan, t, 1, inplace=True)
        fwd = fwd.reshape(dim, K, N)
        Ms = states.T.real @ M  # M_s of each basis column
        return M[:, None, None] * fwd - Ms[None, :, None] * fwd
    both = np.concatenate([states, M[:, None] * states], axis=1)
    back = evolve(both, plan, t, -1)
    fwd = np.einsum("xi,xk->xki", d, back).reshape(dim, 2 * K * N)
    evolve(fwd, plan, t, 1, inplace=True)
    fwd = fwd.reshape(dim, 2 * K, N)
    return M[:, None, None] * fwd[:, :K] - fwd[:, K:]


def commutator_gram(plan: TrotterPlan, t: float, estimator: str = "exact",
                    n_states: int = 8, seed: int = 0, chunk: int = 256) -> np.ndarray:
    """``G_ij = -2**-N Tr{[I^z, I_i^z(t)] [I^z, I_j^z(t)]}`` (Hermitian, PSD)."""
    N = plan.N
    dim = 1 << N
    G = np.zeros((N, N), dtype=complex)
    if estimator == "exact":
        if N > EXACT_MAX_N:
            raise ValueError(f"exact estimator limited to N <= {EXACT_MAX_N}, got N={N}")
        for start in range(0, dim, chunk):
            cols = np.arange(start, min(dim, start + chunk))
            states = np.zeros((dim, cols.size), dtype=complex)
            states[cols, np.arange(cols.size)] = 1.0
            X = _commutator_vectors(plan, t, states, basis=True)
            G += np.einsum("xki,xkj->ij", X.conj(), X)
        return G / dim
    if estimator != "stochastic":
        raise ValueError(f"unknown estimator {estimator!r}")
    states = np.stack([random_phase_state(N, s) for s in state_seeds(seed, n_states)], axis=1)
    X = _commutator_vectors(plan, t, states, basis=False)
    return np.einsum("xki,xkj->ij", X.conj(), X) / n_states


def cluster_size_direct(plan: TrotterPlan, t: float, estimator: str = "exact",
                        n_states: int = 8, seed: int = 0) -> tuple[float, float, float]:
    """``(K_G, K_L, K_CT)`` from squared commutators.

    ``K_CT`` is returned as ``K_G - K_L``; it is cross-checked against the
    explicit ``i != j`` sum.
    """
    N = plan.N
    G = commutator_gram(plan, t, estimator, n_states, seed)
    scale = 8.0 / N  # 2 / (N 2**(N-2)) with the 2**N of the trace
    K_G = scale * float(G.sum().real)
    K_L = scale * float(np.trace(G).real)
    K_CT = K_G - K_L
    explicit = scale * float((G.sum() - np.trace(G)).real)
    if abs(explicit - K_CT) > 1e-9 * max(1.0, abs(K_G)):
        raise RuntimeError(f"cross-term mismatch: {K_CT!r} vs explicit {explicit!r}")
    return K_G, K_L, K_CT


def diagonal_offdiagonal_split(plan: TrotterPlan, t: float) -> tuple[float, float, float]:
    """Diagonal, off-diagonal-in-local and cross-site commutator sums.

    Each term is scaled by ``-2 / (N 2**(N-2))`` so that ``diag + offdiag``
    reproduces ``K_L`` and the third term reproduces ``K_CT``.
    """
    N = plan.N
    if N > 8:
        raise ValueError(f"diagonal/off-diagonal split limited to N <= 8, got N={N}")
    dim = 1 << N
    d = site_sz_table(N)
    back = evolve(np.eye(dim, dtype=complex), plan, t, -1)
    fwd = np.einsum("xi,xk->xki", d, back).reshape(dim, dim * N)
    evolve(fwd, plan, t, 1, inplace=True)
    A = np.moveaxis(fwd.reshape(dim, dim, N), 2, 0)  # A[i] = I_i^z(t) as a matrix

    # sum_k (d_k[x] - d_k[y])**2 is the Hamming distance of x and y
    diff = d[:, None, :] - d[None, :, :]
    hamming = np.sum(diff**2, axis=2)
    M = magnetization(N)
    dM = M[:, None] - M[None, :]
    norm = -2.0 / (N * 2.0 ** (N - 2))
    absA2 = np.abs(A) ** 2
    # Tr{[I_q^z, A_i][I_k^z, A_j]} = -sum_xy dq dk A_i conj(A_j)
    diag = -np.sum(hamming * absA2.sum(axis=0))
    local_total = -np.sum(dM**2 * absA2.sum(axis=0))
    S = A.sum(axis=0)
    cross = -np.sum(dM**2 * (np.abs(S) ** 2 - absA2.sum(axis=0)))
    return norm * float(diag), norm * float(local_total - diag), norm * float(cross)
