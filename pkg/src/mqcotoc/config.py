"""Run configuration: a YAML document with nested sections.

Schema (every key optional except ``rings``)::

    rings:                      # one entry per ring realization
      - {N: 8, alpha: 3.0, J: 1.0, sign_mode: uniform, disorder_width: 1.0, seed: 0}
    times:
      t_start: 0.0              # hbar/J
      t_end: 10.0
      n_t: 11
      spacing: linear           # linear | log (log needs t_start > 0)
      extra: []                 # additional times merged into the grid
      chunk: 0                  # times per task, 0 = whole series in one task
    phi:
      n_phi: null               # power of two; null picks the default for each N
      report: [0.0, 1.5707963267948966]   # phases for echo, decomposition and distance CSVs
    estimator:
      kind: exact               # exact | stochastic
      n_states: 20
      seed: 0
    trotter:
      dt: 0.01
      convergence_check: false  # rerun at dt/2 and record the change in K_G
    analytics:
      t_s: null                 # null uses the tabulated onset for alpha
      t_max: null               # null uses the last time of the grid
      short_time: false         # add the [0.01, 0.05] fit window to the grid
    limits:
      exact_max_N: 12
      stochastic_max_N: 14
    output:
      dir: runs/default         # relative paths resolve against $MQCOTOC_OUTPUT_ROOT
    workers: 1
    overlays: []                # see mqcotoc.overlay.OverlaySpec
    preset: null

Times are snapped to integer multiples of ``dt`` so every point is reached by
a whole number of Trotter steps.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .correlator import EXACT_MAX_N
from .lattice import RingSpec
from .propagator import DEFAULT_DT
from .spectrum import PhiGrid

OUTPUT_ROOT_ENV = "MQCOTOC_OUTPUT_ROOT"
SHORT_TIME_WINDOW = (0.01, 0.02, 0.03, 0.04, 0.05)


class ConfigError(ValueError):
    pass


@dataclass
class TimeGrid:
    t_start: float = 0.0
    t_end: float = 10.0
    n_t: int = 11
    spacing: str = "linear"
    extra: list = field(default_factory=list)
    chunk: int = 0


@dataclass
class PhiSettings:
    n_phi: int | None = None
    report: list = field(default_factory=lambda: [0.0, math.pi / 2])


@dataclass
class EstimatorSettings:
    kind: str = "exact"
    n_states: int = 20
    seed: int = 0


@dataclass
class TrotterSettings:
    dt: float = DEFAULT_DT
    convergence_check: bool = False


@dataclass
class AnalyticsSettings:
    t_s: float | None = None
    t_max: float | None = None
    short_time: bool = False


@dataclass
class Limits:
    exact_max_N: int = EXACT_MAX_N
    stochastic_max_N: int = 14


@dataclass
class OutputSettings:
    dir: str = "runs/default"


_SECTIONS = {
    "times": TimeGrid,
    "phi": PhiSettings,
    "estimator": EstimatorSettings,
    "trotter": TrotterSettings,
    "analytics": AnalyticsSettings,
    "limits": Limits,
    "output": OutputSettings,
}


@dataclass
class RunConfig:
    rings: list
    times: TimeGrid = field(default_factory=TimeGrid)
    phi: PhiSettings = field(default_factory=PhiSettings)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    trotter: TrotterSettings = field(default_factory=TrotterSettings)
    analytics: AnalyticsSettings = field(default_factory=AnalyticsSettings)
    limits: Limits = field(default_factory=Limits)
    output: OutputSettings = field(default_factory=OutputSettings)
    workers: int = 1
    overlays: list = field(default_factory=list)
    preset: str | None = None

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rings"] = [asdict(r) for r in self.rings]
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(raw) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "rings" not in raw or not raw["rings"]:
            raise ConfigError("config needs at least one ring")
        kwargs = {}
        try:
            kwargs["rings"] = [RingSpec(**r) for r in raw["rings"]]
        except TypeError as exc:
            raise ConfigError(f"bad ring entry: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for name, kind in _SECTIONS.items():
            section = raw.get(name) or {}
            if not isinstance(section, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            try:
                kwargs[name] = kind(**section)
            except TypeError as exc:
                raise ConfigError(f"section {name!r}: {exc}") from None
        for name in ("workers", "overlays", "preset"):
            if name in raw and raw[name] is not None:
                kwargs[name] = raw[name]
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        return cls.from_dict(yaml.safe_load(text))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- derived quantities ---------------------------------------------------

    def step_counts(self) -> list[int]:
        """Sorted unique Trotter step counts for the configured time grid."""
        tg = self.times
        if tg.spacing == "linear":
            grid = np.linspace(tg.t_start, tg.t_end, tg.n_t)
        else:
            grid = np.geomspace(tg.t_start, tg.t_end, tg.n_t)
        pts = list(grid) + [float(t) for t in tg.extra]
        if self.analytics.short_time:
            pts += list(SHORT_TIME_WINDOW)
        dt = self.trotter.dt
        return sorted({int(round(t / dt)) for t in pts})

    def times_for(self) -> np.ndarray:
        dt = self.trotter.dt
        return np.array([snap_time(n, dt) for n in self.step_counts()])

    def phi_grid(self, N: int) -> PhiGrid:
        return PhiGrid.for_spins(N, self.phi.n_phi)

    def output_dir(self) -> Path:
        return resolve_output(self.output.dir)

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        tg = self.times
        if tg.spacing not in ("linear", "log"):
            raise ConfigError(f"times.spacing must be linear or log, got {tg.spacing!r}")
        if tg.n_t < 1:
            raise ConfigError("times.n_t must be >= 1")
        if tg.t_start < 0 or tg.t_end < tg.t_start:
            raise ConfigError("need 0 <= times.t_start <= times.t_end")
        if tg.spacing == "log" and tg.t_start <= 0:
            raise ConfigError("log spacing needs times.t_start > 0")
        if tg.chunk < 0:
            raise ConfigError("times.chunk must be >= 0")
        if any(float(t) < 0 for t in tg.extra):
            raise ConfigError("times.extra must be non-negative")
        if not self.trotter.dt > 0:
            raise ConfigError("trotter.dt must be positive")
        est = self.estimator
        if est.kind not in ("exact", "stochastic"):
            raise ConfigError(f"estimator.kind must be exact or stochastic, got {est.kind!r}")
        if est.n_states < 1:
            raise ConfigError("estimator.n_states must be >= 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        tags = [r.tag for r in self.rings]
        if len(set(tags)) != len(tags):
            raise ConfigError("duplicate ring entries")
        for ring in self.rings:
            try:
                self.phi_grid(ring.N)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        a = self.analytics
        if a.t_s is not None and a.t_max is not None and not a.t_s < a.t_max:
            raise ConfigError("analytics.t_s must be below analytics.t_max")
        if not isinstance(self.overlays, list):
            raise ConfigError("overlays must be a list")
        self.check_cutoffs()

    def check_cutoffs(self) -> None:
        """Fail before any compute if a ring exceeds the estimator's size limit."""
        kind = self.estimator.kind
        limit = self.limits.exact_max_N if kind == "exact" else self.limits.stochastic_max_N
        if kind == "exact":
            limit = min(limit, EXACT_MAX_N)
        bad = [r.N for r in self.rings if r.N > limit]
        if bad:
            raise ConfigError(f"N={bad} exceeds the {kind} estimator cutoff N <= {limit}")


def snap_time(n_steps: int, dt: float) -> float:
    # round away float noise so CSV times read cleanly
    return float(round(n_steps * dt, 10))


def resolve_output(path: str) -> Path:
    p = Path(path).expanduser()
    if p.is_absolute():
        return p
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return Path(root) / p if root else p


def set_key(raw: dict, dotted: str, value) -> None:
    """Assign ``value`` at a dotted path such as ``times.n_t`` or ``rings.0.N``."""
    keys = dotted.split(".")
    node = raw
    for k, nxt in zip(keys[:-1], keys[1:]):
        if isinstance(node, list):
            node = node[int(k)]
            continue
        if node.get(k) is None:
            node[k] = [] if nxt.isdigit() else {}
        node = node[k]
    last = keys[-1]
    if isinstance(node, list):
        idx = int(last)
        if idx == len(node):
            node.append(value)
        else:
            node[idx] = value
    else:
        node[last] = value


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key=value`` strings; values are parsed as YAML scalars or lists."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        try:
            set_key(raw, key.strip(), yaml.safe_load(text))
        except (IndexError, ValueError, TypeError, AttributeError) as exc:
            raise ConfigError(f"cannot apply override {item!r}: {exc}") from None
    return raw


def load_config(path, overrides=()) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return RunConfig.from_dict(apply_overrides(raw or {}, overrides))
