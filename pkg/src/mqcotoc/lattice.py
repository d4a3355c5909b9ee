"""Spin-ring geometry, long-range couplings and disorder fields."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIGN_MODES = ("uniform", "random")

# spawn key for the disorder-field sub-stream, fixed so tables stay reproducible
_FIELDS_KEY = int.from_bytes(b"fields", "little")


@dataclass(frozen=True)
class RingSpec:
    """Parameters of one ring realization.

    Couplings follow ``J / r**alpha`` with ``r`` the bond distance; fields are
    drawn from ``Uniform[-W/2, W/2]``.
    """

    N: int
    alpha: float
    J: float = 1.0
    sign_mode: str = "uniform"
    disorder_width: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if self.disorder_width < 0:
            raise ValueError(f"disorder_width must be >= 0, got {self.disorder_width!r}")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}, got {self.sign_mode!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def tag(self) -> str:
        sign = "r" if self.sign_mode == "random" else "u"
        return f"N{self.N}_a{self.alpha:g}{sign}_W{self.disorder_width:g}_s{self.seed}"


@dataclass(frozen=True, eq=False)
class CouplingTable:
    D: np.ndarray
    h: np.ndarray
    spec: RingSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("D must be a square matrix")
        if h.shape != (D.shape[0],):
            raise ValueError("h must have one entry per site")
        if not np.array_equal(D, D.T) or np.any(np.diag(D) != 0):
            raise ValueError("D must be symmetric with zero diagonal")
        D.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "h", h)

    @property
    def N(self) -> int:
        return self.D.shape[0]

    def pairs(self):
        """Unordered pairs ``(i, j)`` with ``i < j`` in row-major order."""
        N = self.N
        return [(i, j) for i in range(N) for j in range(i + 1, N)]

    def to_csv(self, couplings_path, fields_path) -> None:
        with open(couplings_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "D_ij"])
            for i, j in self.pairs():
                w.writerow([i, j, repr(float(self.D[i, j]))])
        with open(fields_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "h_i"])
            for i, hi in enumerate(self.h):
                w.writerow([i, repr(float(hi))])


def bond_distance(i: int, j: int, N: int) -> int:
    """Minimum number of ring steps between sites ``i`` and ``j``."""
    if not (0 <= i < N and 0 <= j < N):
        raise IndexError(f"site index out of range for N={N}: ({i}, {j})")
    d = abs(i - j)
    return min(d, N - d)


def build_couplings(spec: RingSpec) -> CouplingTable:
    N = spec.N
    D = np.zeros((N, N))
    rng = np.random.default_rng(spec.seed)
    for i in range(N):
        for j in range(i + 1, N):
            value = spec.J / bond_distance(i, j, N) ** spec.alpha
            if spec.sign_mode == "random":
                value *= 1.0 if rng.random() < 0.5 else -1.0
            D[i, j] = D[j, i] = value

    field_seq = np.random.SeedSequence(spec.seed, spawn_key=(_FIELDS_KEY,))
    field_rng = np.random.default_rng(field_seq)
    W = spec.disorder_width
    h = field_rng.uniform(-W / 2, W / 2, size=N) if W > 0 else np.zeros(N)
    return CouplingTable(D=D, h=h, spec=spec)


def coupling_second_moment(table: CouplingTable) -> float:
    """Sum of ``D_ij**2`` over ordered pairs ``i != j``."""
    return float(np.sum(table.D**2))


def load_couplings_csv(couplings_path, fields_path) -> CouplingTable:
    with open(Path(fields_path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    N = len(rows)
    h = np.array([float(r["h_i"]) for r in rows])
    D = np.zeros((N, N))
    with open(couplings_path, newline="") as fh:
        for r in csv.DictReader(fh):
            i, j = int(r["i"]), int(r["j"])
            D[i, j] = D[j, i] = float(r["D_ij"])
    return CouplingTable(D=D, h=h)
