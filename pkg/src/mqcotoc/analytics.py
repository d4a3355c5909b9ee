"""Post-processing of cluster-size series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .lattice import CouplingTable, coupling_second_moment

SATURATION_TIMES = {1.0: 10.0, 2.0: 20.0, 3.0: 50.0}


def short_time_prediction(couplings: CouplingTable) -> tuple[float, float]:
    """Closed-form short-time coefficients ``(32 S / N, 16 S / N)``.

    ``S`` sums ``D_ij**2`` over ordered pairs and ``K ~ c t**2`` with hbar = 1.
    For spin-1/2 operators this closed form is four times the trace expression
    evaluated by :func:`bch_short_time_coefficients`; the ratio of 2 between
    the global and local laws is unaffected.
    """
    S = coupling_second_moment(couplings)
    N = couplings.N
    return 32.0 * S / N, 16.0 * S / N


def dq_trace_norm(couplings: CouplingTable) -> float:
    """``Tr{H_DQ**2}`` for the field-free coupling part, without building it.

    Each pair term ``D (S+S+ + S-S-) / 2`` has ``2**(N-1)`` entries of size
    ``D / 2`` and distinct pairs are trace-orthogonal.
    """
    N = couplings.N
    return float(np.sum(np.triu(couplings.D, 1) ** 2)) * 2.0 ** (N - 3)


def bch_short_time_coefficients(couplings: CouplingTable) -> tuple[float, float]:
    """Short-time coefficients from the lowest-order commutator expansion.

    To first order ``[I^z, I^z(t)]`` is ``t`` times the double commutator
    ``[I^z, [H_DQ, I^z]]``, whose squared trace norm is ``16 Tr{H_DQ**2}``.
    This gives ``K_G ~ 32 t**2 Tr{H_DQ**2} / (N 2**(N-2))`` and half of that
    for the local law, i.e. ``(8 S / N, 4 S / N)``.
    """
    N = couplings.N
    c_G = 32.0 * dq_trace_norm(couplings) / (N * 2.0 ** (N - 2))
    return c_G, c_G / 2


@dataclass(frozen=True)
class ShortTimeFit:
    c_G: float
    c_L: float
    ratio: float
    quartic_G: float
    quartic_L: float


def fit_short_time(times, K_G, K_L, t_min: float = 0.01, t_max: float = 0.05) -> ShortTimeFit:
    """Least-squares fit of ``K = c t**2 + b t**4`` on ``[t_min, t_max]``.

    ``K`` is even in ``t``, so the quartic term is the first correction; ``c``
    is the quadratic coefficient.
    """
    times = np.asarray(times, dtype=float)
    sel = (times >= t_min - 1e-12) & (times <= t_max + 1e-12)
    if sel.sum() < 5:
        raise ValueError("short-time fit needs at least 5 points in the window")
    t = times[sel]
    X = np.stack([t**2, t**4], axis=1)
    cG, bG = np.linalg.lstsq(X, np.asarray(K_G)[sel], rcond=None)[0]
    cL, bL = np.linalg.lstsq(X, np.asarray(K_L)[sel], rcond=None)[0]
    return ShortTimeFit(float(cG), float(cL), float(cG / cL), float(bG), float(bL))


def default_saturation_time(alpha: float) -> float:
    """Onset of the long-time plateau in units of hbar/J.

    Tabulated at alpha = 1, 2, 3; elsewhere ``log t_s`` is interpolated
    linearly in alpha (and extrapolated from the nearest segment).
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if alpha in SATURATION_TIMES:
        return SATURATION_TIMES[alpha]
    a = sorted(SATURATION_TIMES)
    k = 0 if alpha < a[1] else 1
    lo, hi = np.log(SATURATION_TIMES[a[k]]), np.log(SATURATION_TIMES[a[k + 1]])
    slope = (hi - lo) / (a[k + 1] - a[k])
    return float(np.exp(lo + slope * (alpha - a[k])))


@dataclass(frozen=True, eq=False)
class SaturationStats:
    t_s: float
    t_max: float
    mean: float
    sd: float
    site_mean: np.ndarray
    site_sd: np.ndarray
    site_variance_avg: float
    total_cov: float

    @property
    def N(self) -> int:
        return self.site_mean.size


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    dt = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w / (t[-1] - t[0])


def saturation_stats(times, sites, t_s: float, t_max: float) -> SaturationStats:
    """Time averages and fluctuations of per-site series over ``[t_s, t_max]``.

    ``sites`` has shape ``(n_t, N)``; the aggregate is the site mean. All
    integrals use the trapezoid rule on the sampled grid, so
    ``sd**2 == site_variance_avg / N + total_cov`` holds to rounding.
    """
    if not t_s < t_max:
        raise ValueError(f"need t_s < t_max, got {t_s!r} >= {t_max!r}")
    times = np.asarray(times, dtype=float)
    sites = np.asarray(sites, dtype=float)
    tol = 1e-9 * max(1.0, abs(t_max))
    sel = (times >= t_s - tol) & (times <= t_max + tol)
    t = times[sel]
    if t.size < 2 or abs(t[0] - t_s) > tol or abs(t[-1] - t_max) > tol:
        raise ValueError(f"time grid does not cover the window [{t_s}, {t_max}]")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        raise ValueError("saturation window must be sampled uniformly")
    K = sites[sel]
    N = K.shape[1]
    w = _trapezoid_weights(t)
    site_mean = w @ K
    dev = K - site_mean
    cov = (dev * w[:, None]).T @ dev
    site_var = np.diag(cov).copy()
    total = float(cov.sum())
    total_cov = float((total - site_var.sum()) / N**2)
    mean = float(site_mean.mean())
    agg = K.mean(axis=1)
    sd = float(np.sqrt(max(w @ (agg - mean) ** 2, 0.0)))
    return SaturationStats(float(t[0]), float(t[-1]), mean, sd, site_mean,
                           np.sqrt(site_var), float(site_var.mean()), total_cov)


@dataclass(frozen=True, eq=False)
class ScalingFit:
    model: str
    N: np.ndarray
    values: np.ndarray
    exponent: float  # power-law exponent or exponential rate
    intercept: float
    stderr: float
    ci95: tuple
    residuals: np.ndarray

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "N": [int(n) for n in self.N],
            "values": [float(v) for v in self.values],
            "exponent" if self.model == "power" else "rate": self.exponent,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "residuals": [float(r) for r in self.residuals],
        }


def scaling_fit(N_values, values, model: str = "power") -> ScalingFit:
    """Fit ``y = A N**p`` (log-log) or ``y = A exp(-r N)`` (log-lin).

    For the exponential model the reported rate is ``r`` (positive for decay).
    """
    N_values = np.asarray(N_values, dtype=float)
    values = np.asarray(values, dtype=float)
    if N_values.size < 3:
        raise ValueError("scaling fit needs at least 3 points")
    if np.any(values <= 0) or np.any(N_values <= 0):
        raise ValueError("scaling fit needs positive values")
    if model == "power":
        x = np.log(N_values)
    elif model == "exponential":
        x = N_values
    else:
        raise ValueError(f"unknown model {model!r}")
    y = np.log(values)
    res = stats.linregress(x, y)
    slope = res.slope if model == "power" else -res.slope
    dof = N_values.size - 2
    if dof > 0 and np.isfinite(res.stderr):
        half = float(stats.t.ppf(0.975, dof) * res.stderr)
    else:
        half = float("nan")
    residuals = y - (res.intercept + res.slope * x)
    return ScalingFit(model, N_values, values, float(slope), float(res.intercept),
                      float(res.stderr), (float(slope - half), float(slope + half)), residuals)
