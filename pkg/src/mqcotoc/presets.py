"""Parameter sets mirroring the published figures, scaled to desk size."""

from __future__ import annotations

import math

from .config import RunConfig

PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6")
REFERENCE_N = 16

_FIG4_PHIS = [k * math.pi / 16 for k in (1, 2, 3, 5, 8)]


def _ring(N, alpha, sign_mode="uniform", seed=0):
    return {"N": N, "alpha": alpha, "J": 1.0, "sign_mode": sign_mode,
            "disorder_width": 1.0, "seed": seed}


def _sweep(alphas, Ns, sign_mode="uniform"):
    return [_ring(N, a, sign_mode) for a in alphas for N in Ns]


def preset(name: str, exact_max_N: int = 12, stochastic_max_N: int = 14,
           estimator: str = "exact") -> tuple[RunConfig, dict]:
    """Return ``(config, cap_info)``; ``cap_info`` records any size reduction."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    cap = exact_max_N if estimator == "exact" else stochastic_max_N
    Ns = [n for n in (8, 10, 12, 14, 16) if n <= cap]
    top = min(REFERENCE_N, cap)

    if name == "fig2":
        # echoes vs phi at three times plus the full decay
        raw = {
            "rings": [_ring(top, 3.0)],
            "times": {"t_start": 0.0, "t_end": 100.0, "n_t": 201, "extra": [0.5, 7.5]},
            "phi": {"report": _FIG4_PHIS},
        }
    elif name == "fig3":
        raw = {
            "rings": _sweep([3.0, 2.0, 1.0], Ns) + _sweep([1.0], Ns, "random"),
            "times": {"t_start": 0.0, "t_end": 100.0, "n_t": 201},
            "phi": {"report": [0.0]},
        }
    elif name == "fig4":
        # phi-resolved echo series plus the short-time window
        raw = {
            "rings": [_ring(top, a) for a in (3.0, 2.0, 1.0)],
            "times": {"t_start": 0.0, "t_end": 20.0, "n_t": 201},
            "phi": {"report": _FIG4_PHIS},
            "analytics": {"short_time": True},
        }
    else:
        # saturation statistics (fig5) and their N scaling (fig6)
        raw = {
            "rings": _sweep([3.0, 2.0, 1.0], Ns),
            "times": {"t_start": 0.0, "t_end": 100.0, "n_t": 101},
            "phi": {"report": [0.0]},
            "analytics": {"t_max": 100.0},
        }
    raw["estimator"] = {"kind": estimator}
    raw["limits"] = {"exact_max_N": exact_max_N, "stochastic_max_N": stochastic_max_N}
    raw["preset"] = name
    info = {"preset": name, "requested_N": REFERENCE_N, "cap": cap, "N_values": sorted({r["N"] for r in raw["rings"]})}
    return RunConfig.from_dict(raw), info
