"""Ingestion of external reference curves for side-by-side comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# units the simulated curves are written in
SIMULATED_UNITS = {"phi": "rad", "t": "hbar/J", "value": "normalized"}


class OverlayError(ValueError):
    pass


@dataclass
class OverlaySpec:
    path: str
    x_kind: str = "phi"  # phi | t
    x_column: str = "phi"
    value_column: str = "M"
    label: str = "reference"
    units: dict = field(default_factory=dict)
    # which simulated curve to pair with: the time (for phi curves) or phase (for t curves)
    at: float | None = None
    quantity: str = "M_G"

    @classmethod
    def from_dict(cls, raw: dict) -> "OverlaySpec":
        try:
            spec = cls(**raw)
        except TypeError as exc:
            raise OverlayError(f"bad overlay entry: {exc}") from None
        if spec.x_kind not in ("phi", "t"):
            raise OverlayError(f"x_kind must be phi or t, got {spec.x_kind!r}")
        return spec


@dataclass(frozen=True, eq=False)
class ReferenceSeries:
    label: str
    x_kind: str
    x: np.ndarray
    values: np.ndarray
    units: dict
    warnings: tuple = ()


def overlay_reference(path, column_map: dict, x_kind: str = "phi", label: str = "reference",
                      units: dict | None = None) -> ReferenceSeries:
    """Read a two-column reference curve.

    ``column_map`` names the CSV columns as ``{"x": ..., "value": ...}``.
    Declared units that differ from the simulated ones produce warnings on
    the returned series rather than an error.
    """
    path = Path(path)
    if not path.exists():
        raise OverlayError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise OverlayError(f"{path}: empty file")
        missing = [c for c in (column_map["x"], column_map["value"]) if c not in reader.fieldnames]
        if missing:
            raise OverlayError(f"{path}: missing columns {missing}")
        xs, vs = [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                xs.append(float(row[column_map["x"]]))
                vs.append(float(row[column_map["value"]]))
            except (TypeError, ValueError):
                raise OverlayError(f"{path}:{lineno}: non-numeric entry") from None
    if not xs:
        raise OverlayError(f"{path}: no data rows")

    units = dict(units or {})
    warnings = []
    expected = {"x": SIMULATED_UNITS[x_kind], "value": SIMULATED_UNITS["value"]}
    for key, want in expected.items():
        got = units.get(key)
        if got is not None and got != want:
            warnings.append(f"overlay {label!r}: {key} units {got!r} differ from simulated {want!r}")
    return ReferenceSeries(label, x_kind, np.array(xs), np.array(vs), units, tuple(warnings))


def load_overlay(spec: OverlaySpec) -> ReferenceSeries:
    return overlay_reference(spec.path, {"x": spec.x_column, "value": spec.value_column},
                             spec.x_kind, spec.label, spec.units)
