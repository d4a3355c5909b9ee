"""Batch pipeline: rings -> echoes -> spectra -> cluster sizes -> analytics.

Every ring of the config is one task, optionally split into chunks of times.
Workers are stateless and return compact per-time results; the parent
process is the only writer. Chunking depends on the config alone, so output
bytes do not depend on the worker count.

Layout of an output directory::

    config.yaml  manifest.json  saturation.csv  scaling.json  comparison.csv
    rings/<tag>/ couplings.csv fields.csv echo.csv echo.json decomposition.csv
                 distance_echo.csv spectra.csv site_spectra.csv kseries.csv
                 site_kseries.csv [saturation.csv short_time.csv convergence.csv]
    plotpack/    echoes.csv spectra.csv kseries.csv distance_echo.csv
                 saturation.csv scaling.csv [short_time.csv]
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    bch_short_time_coefficients,
    default_saturation_time,
    fit_short_time,
    saturation_stats,
    scaling_fit,
    short_time_prediction,
)
from .config import SHORT_TIME_WINDOW, RunConfig, load_config, snap_time
from .correlator import (
    EchoCoefficients,
    EchoMatrix,
    complex_stderr,
    decompose_echo,
    distance_echo,
    echo_coefficients_stochastic,
    exact_coefficient_series,
)
from .lattice import RingSpec, build_couplings
from .overlay import OverlayError, OverlaySpec, load_overlay
from .propagator import TrotterPlan
from .spectrum import PhiGrid, SpectrumRoute, spectrum_route

log = logging.getLogger(__name__)

REFERENCE_EXPONENT_WINDOW = (-4.3, -3.1)

HEADERS = {
    "couplings.csv": ["i", "j", "D_ij"],
    "fields.csv": ["i", "h_i"],
    "echo.csv": ["t", "phi", "i", "j", "re", "im", "stderr"],
    "decomposition.csv": ["t", "phi", "M_G", "M_L", "M_CT"],
    "distance_echo.csv": ["t", "phi", "n", "value"],
    "spectra.csv": ["t", "m", "g_m", "source"],
    "site_spectra.csv": ["t", "i", "m", "g_m", "source"],
    "kseries.csv": ["t", "K_G", "K_L", "K_CT", "errG", "errL", "errCT"],
    "site_kseries.csv": ["t", "i", "K_G", "K_L", "K_CT"],
    "saturation.csv": ["N", "alpha", "sign_mode", "seed", "quantity", "t_s", "t_max",
                       "mean", "sd", "mean_over_N", "sd_over_N", "site_variance_avg", "total_cov"],
    "site_saturation.csv": ["quantity", "i", "mean", "sd"],
    "short_time.csv": ["quantity", "fit", "closed_form", "trace_form", "fit_over_closed_form", "ratio"],
    "convergence.csv": ["t", "K_G", "K_G_half_dt", "rel_change"],
}


class RunError(RuntimeError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# -- worker side ----------------------------------------------------------------

@dataclass
class TimeResult:
    t: float
    report_E: np.ndarray  # (n_report, N, N) complex
    report_err: np.ndarray  # (n_report, N, N), zero for exact
    decomposition: np.ndarray  # (n_phi_total, 3)
    distances: np.ndarray  # (n_report, N // 2 + 1)
    route: SpectrumRoute


@dataclass(frozen=True)
class ChunkTask:
    ring: RingSpec
    counts: tuple
    dt: float
    estimator: str
    n_states: int
    seed: int
    n_phi: int
    report: tuple
    half_dt: bool = False


def _summarize(coeffs: EchoCoefficients, grid: PhiGrid, report) -> TimeResult:
    N = coeffs.N
    route = spectrum_route(coeffs, grid)
    phis = list(grid.values) + list(report)
    E_all = coeffs.on_grid(phis)
    decomp = np.empty((len(phis), 3))
    for k, phi in enumerate(phis):
        d = decompose_echo(_matrix(coeffs, phi, E_all[k]))
        decomp[k] = (d.M_G, d.M_L, d.M_CT)
    n_rep = len(report)
    rep_E = E_all[len(phis) - n_rep:]
    if coeffs.samples is not None and coeffs.samples.shape[0] > 1:
        rep_err = complex_stderr(coeffs.sample_grid(list(report))) if n_rep else np.zeros((0, N, N))
    else:
        rep_err = np.zeros(rep_E.shape)
    dist = np.array([[distance_echo(_matrix(coeffs, phi, E), n) for n in range(N // 2 + 1)]
                     for phi, E in zip(report, rep_E)]).reshape(n_rep, N // 2 + 1)
    return TimeResult(coeffs.t, rep_E, rep_err, decomp, dist, route)


def _matrix(coeffs, phi, E):
    return EchoMatrix(coeffs.t, float(phi), E, coeffs.estimator, coeffs.n_states, coeffs.seed)


def compute_chunk(task: ChunkTask):
    """Worker entry point; returns per-time results (or ``K_G`` for a half-dt rerun)."""
    plan = TrotterPlan(build_couplings(task.ring), task.dt)
    times = [snap_time(n, task.dt) for n in task.counts]
    if task.half_dt:
        plan = plan.with_dt(task.dt / 2)
    grid = PhiGrid.for_spins(task.ring.N, task.n_phi)
    if task.estimator == "exact":
        series = exact_coefficient_series(plan, times)
    else:
        series = (echo_coefficients_stochastic(plan, t, task.n_states, task.seed) for t in times)
    if task.half_dt:
        return [spectrum_route(c, grid).K_G for c in series]
    return [_summarize(c, grid, task.report) for c in series]


# -- writer side ----------------------------------------------------------------

class Runner:
    def __init__(self, config: RunConfig, extra_manifest: dict | None = None):
        config.validate()  # cutoff violations surface here, before any compute
        self.config = config
        self.out = config.output_dir()
        self.extra = dict(extra_manifest or {})
        self.warnings: list[str] = []
        self.timings: dict[str, float] = {}
        self.tasks: dict[str, dict] = {}
        self.failed: dict[str, str] = {}

    # bookkeeping

    def ring_dir(self, ring: RingSpec) -> Path:
        return self.out / "rings" / ring.tag

    def ring_key(self, ring: RingSpec) -> str:
        cfg = self.config
        blob = json.dumps({
            "ring": ring.__dict__, "counts": cfg.step_counts(), "dt": cfg.trotter.dt,
            "phi": cfg.phi.__dict__, "estimator": cfg.estimator.__dict__,
            "convergence": cfg.trotter.convergence_check, "analytics": cfg.analytics.__dict__,
            "version": __version__,
        }, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def _previous_manifest(self) -> dict:
        path = self.out / "manifest.json"
        if not path.exists():
            return {}
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError:
            return {}

    def _up_to_date(self, ring: RingSpec, previous: dict) -> bool:
        entry = previous.get("tasks", {}).get(ring.tag)
        if not entry or entry.get("key") != self.ring_key(ring):
            return False
        for rel, digest in entry.get("files", {}).items():
            path = self.out / rel
            if not path.exists() or sha256(path) != digest:
                return False
        return bool(entry.get("files"))

    def _chunk_tasks(self, ring: RingSpec, half_dt=False) -> list[ChunkTask]:
        cfg = self.config
        counts = cfg.step_counts()
        size = cfg.times.chunk or len(counts)
        est = cfg.estimator
        grid = cfg.phi_grid(ring.N)
        return [ChunkTask(ring, tuple(counts[k:k + size]), cfg.trotter.dt, est.kind, est.n_states,
                          est.seed, grid.n_phi, tuple(float(p) for p in cfg.phi.report), half_dt)
                for k in range(0, len(counts), size)]

    # main entry

    def run(self) -> dict:
        cfg = self.config
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.yaml").write_text(cfg.to_yaml())
        previous = self._previous_manifest()

        todo = [r for r in cfg.rings if not self._up_to_date(r, previous)]
        for ring in cfg.rings:
            if ring not in todo:
                self.tasks[ring.tag] = previous["tasks"][ring.tag]
                self.tasks[ring.tag]["skipped"] = True

        jobs = []
        for ring in todo:
            jobs.append((ring, self._chunk_tasks(ring),
                         self._chunk_tasks(ring, half_dt=True) if cfg.trotter.convergence_check else []))

        workers = int(cfg.workers)
        pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 and todo else None
        try:
            submit = (lambda t: pool.submit(compute_chunk, t)) if pool else (lambda t: _Immediate(t))
            pending = [(ring, [submit(t) for t in main], [submit(t) for t in half]) for ring, main, half in jobs]
            for ring, main, half in pending:
                start = time.perf_counter()
                try:
                    results = [r for f in main for r in f.result()]
                    half_K = [k for f in half for k in f.result()] if half else None
                    self._write_ring(ring, results, half_K)
                except Exception as exc:  # keep finished rings, report the failure
                    log.exception("ring %s failed", ring.tag)
                    self.failed[ring.tag] = f"{type(exc).__name__}: {exc}"
                self.timings[ring.tag] = time.perf_counter() - start
                self._write_manifest(status="running")
        finally:
            if pool:
                pool.shutdown()

        self._aggregate()
        manifest = self._write_manifest(status="failed" if self.failed else "complete")
        if self.failed:
            raise RunError(f"{len(self.failed)} ring task(s) failed: {self.failed}")
        return manifest

    # per-ring products

    def _write_ring(self, ring: RingSpec, results: list[TimeResult], half_K) -> None:
        cfg = self.config
        d = self.ring_dir(ring)
        if d.exists():
            shutil.rmtree(d)
        d.mkdir(parents=True)
        N = ring.N
        couplings = build_couplings(ring)
        couplings.to_csv(d / "couplings.csv", d / "fields.csv")
        grid = cfg.phi_grid(N)
        report = [float(p) for p in cfg.phi.report]
        all_phis = list(grid.values) + report
        times = np.array([r.t for r in results])

        write_csv(d / "echo.csv", HEADERS["echo.csv"], (
            (r.t, phi, i, j, r.report_E[k, i, j].real, r.report_E[k, i, j].imag, r.report_err[k, i, j])
            for r in results for k, phi in enumerate(report) for i in range(N) for j in range(N)))
        est = cfg.estimator
        sidecar = {"N": N, "ring": ring.tag, "estimator": est.kind, "dt": cfg.trotter.dt,
                   "phis": report, "n_phi": grid.n_phi}
        if est.kind == "stochastic":
            sidecar.update(n_states=est.n_states, seed=est.seed,
                           state_seeds="numpy SeedSequence(seed).spawn(n_states), same states at every t")
        (d / "echo.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")

        write_csv(d / "decomposition.csv", HEADERS["decomposition.csv"], (
            (r.t, phi, *r.decomposition[k]) for r in results for k, phi in enumerate(all_phis)))
        write_csv(d / "distance_echo.csv", HEADERS["distance_echo.csv"], (
            (r.t, phi, n, r.distances[k, n]) for r in results for k, phi in enumerate(report)
            for n in range(N // 2 + 1)))
        write_csv(d / "spectra.csv", HEADERS["spectra.csv"], (
            (r.t, m, g[k], src) for r in results
            for src, g in (("G", r.route.g_G), ("L", r.route.g_L), ("CT", r.route.g_CT))
            for k, m in enumerate(r.route.orders)))
        write_csv(d / "site_spectra.csv", HEADERS["site_spectra.csv"], (
            (r.t, i, m, g[k, i], src) for r in results
            for src, g in (("L", r.route.site_g_L), ("CT", r.route.site_g_CT))
            for i in range(N) for k, m in enumerate(r.route.orders)))

        K = np.array([(r.route.K_G, r.route.K_L, r.route.K_CT) for r in results])
        errs = np.array([r.route.err if r.route.err else (0.0, 0.0, 0.0) for r in results])
        write_csv(d / "kseries.csv", HEADERS["kseries.csv"], (
            (t, *k, *e) for t, k, e in zip(times, K, errs)))
        site = {
            "G": np.array([r.route.site_K_G for r in results]),
            "L": np.array([r.route.site_K_L for r in results]),
            "CT": np.array([r.route.site_K_CT for r in results]),
        }
        write_csv(d / "site_kseries.csv", HEADERS["site_kseries.csv"], (
            (t, i, site["G"][a, i], site["L"][a, i], site["CT"][a, i])
            for a, t in enumerate(times) for i in range(N)))

        self._ring_analytics(ring, couplings, times, K, site, d)

        if half_K is not None:
            rel = [abs(h - k) / abs(k) if k != 0 else abs(h - k) for k, h in zip(K[:, 0], half_K)]
            write_csv(d / "convergence.csv", HEADERS["convergence.csv"],
                      zip(times, K[:, 0], half_K, rel))

        files = {str(p.relative_to(self.out)): sha256(p) for p in sorted(d.iterdir())}
        self.tasks[ring.tag] = {"key": self.ring_key(ring), "ring": ring.__dict__, "files": files}

    def _ring_analytics(self, ring, couplings, times, K, site, d: Path) -> None:
        cfg = self.config
        t_s = cfg.analytics.t_s if cfg.analytics.t_s is not None else default_saturation_time(ring.alpha)
        t_max = cfg.analytics.t_max if cfg.analytics.t_max is not None else float(times[-1])
        if t_s < t_max:
            try:
                rows, site_rows = [], []
                for q in ("G", "L", "CT"):
                    s = saturation_stats(times, site[q], t_s, t_max)
                    rows.append((ring.N, ring.alpha, ring.sign_mode, ring.seed, q, s.t_s, s.t_max, s.mean, s.sd,
                                 s.mean / ring.N, s.sd / ring.N, s.site_variance_avg, s.total_cov))
                    site_rows += [(q, i, s.site_mean[i], s.site_sd[i]) for i in range(ring.N)]
                write_csv(d / "saturation.csv", HEADERS["saturation.csv"], rows)
                write_csv(d / "site_saturation.csv", HEADERS["site_saturation.csv"], site_rows)
            except ValueError as exc:
                self.warnings.append(f"{ring.tag}: saturation window [{t_s}, {t_max}] skipped ({exc})")
        else:
            self.warnings.append(f"{ring.tag}: saturation window [{t_s}, {t_max}] is empty")

        window = (times >= SHORT_TIME_WINDOW[0] - 1e-12) & (times <= SHORT_TIME_WINDOW[-1] + 1e-12)
        if window.sum() >= 5:
            fit = fit_short_time(times, K[:, 0], K[:, 1])
            closed = short_time_prediction(couplings)
            trace = bch_short_time_coefficients(couplings)
            write_csv(d / "short_time.csv", HEADERS["short_time.csv"], [
                ("G", fit.c_G, closed[0], trace[0], fit.c_G / closed[0], fit.ratio),
                ("L", fit.c_L, closed[1], trace[1], fit.c_L / closed[1], fit.ratio),
            ])

    # run-level products

    def _ring_rows(self, name: str):
        for ring in self.config.rings:
            path = self.ring_dir(ring) / name
            if path.exists():
                for row in read_csv(path):
                    yield ring, row

    def _aggregate(self) -> None:
        out = self.out
        pp = out / "plotpack"
        pp.mkdir(exist_ok=True)
        lead = ["ring", "N", "alpha", "sign_mode"]

        def ring_cols(ring):
            return [ring.tag, ring.N, ring.alpha, ring.sign_mode]

        sat = [(ring, row) for ring, row in self._ring_rows("saturation.csv")]
        write_csv(out / "saturation.csv", ["ring"] + HEADERS["saturation.csv"],
                  ([ring.tag] + [row[h] for h in HEADERS["saturation.csv"]] for ring, row in sat))

        write_csv(pp / "echoes.csv", lead + ["t", "phi", "quantity", "value"], (
            ring_cols(ring) + [row["t"], row["phi"], q, row[q]]
            for ring, row in self._ring_rows("decomposition.csv") for q in ("M_G", "M_L", "M_CT")))
        write_csv(pp / "spectra.csv", lead + ["t", "m", "source", "g_m"], (
            ring_cols(ring) + [row["t"], row["m"], row["source"], row["g_m"]]
            for ring, row in self._ring_rows("spectra.csv")))
        write_csv(pp / "kseries.csv", lead + ["t", "site", "quantity", "value", "err"], self._k_long(ring_cols))
        write_csv(pp / "distance_echo.csv", lead + ["t", "phi", "n", "value"], (
            ring_cols(ring) + [row["t"], row["phi"], row["n"], row["value"]]
            for ring, row in self._ring_rows("distance_echo.csv")))
        write_csv(pp / "saturation.csv", lead + ["quantity", "stat", "value"], (
            ring_cols(ring) + [row["quantity"], stat, row[stat]]
            for ring, row in sat for stat in ("mean_over_N", "sd_over_N", "site_variance_avg", "total_cov")))
        short = list(self._ring_rows("short_time.csv"))
        if short:
            write_csv(pp / "short_time.csv", lead + HEADERS["short_time.csv"], (
                ring_cols(ring) + [row[h] for h in HEADERS["short_time.csv"]] for ring, row in short))

        self._scaling(sat, pp)
        self._overlays()

    def _k_long(self, ring_cols):
        for ring, row in self._ring_rows("kseries.csv"):
            for q, e in (("K_G", "errG"), ("K_L", "errL"), ("K_CT", "errCT")):
                yield ring_cols(ring) + [row["t"], "all", q, row[q], row[e]]
        for ring, row in self._ring_rows("site_kseries.csv"):
            for q in ("K_G", "K_L", "K_CT"):
                yield ring_cols(ring) + [row["t"], row["i"], q, row[q], ""]

    def _scaling(self, sat, pp: Path) -> None:
        groups: dict[tuple, dict[int, float]] = {}
        for ring, row in sat:
            if row["quantity"] != "CT":
                continue
            key = (ring.alpha, ring.sign_mode, ring.J, ring.disorder_width, ring.seed)
            groups.setdefault(key, {})[ring.N] = float(row["mean_over_N"])
        fits, points = [], []
        for (alpha, sign, J, W, seed), by_N in sorted(groups.items()):
            Ns = sorted(by_N)
            vals = [by_N[n] for n in Ns]
            points += [(alpha, sign, seed, n, v) for n, v in zip(Ns, vals)]
            entry = {"alpha": alpha, "sign_mode": sign, "J": J, "disorder_width": W, "seed": seed,
                     "N": Ns, "KCT_over_N": vals}
            if len(Ns) < 3:
                continue
            if min(vals) <= 0:
                self.warnings.append(f"alpha={alpha:g} {sign}: nonpositive <K_CT>/N, scaling fit skipped")
                continue
            entry["power"] = scaling_fit(Ns, vals, "power").to_dict()
            entry["exponential"] = scaling_fit(Ns, vals, "exponential").to_dict()
            entry["monotone_decrease"] = bool(np.all(np.diff(vals) < 0))
            fits.append(entry)
        doc = {"quantity": "<K_CT>/N", "reference_power_exponent_window": list(REFERENCE_EXPONENT_WINDOW),
               "fits": fits}
        (self.out / "scaling.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        write_csv(pp / "scaling.csv", ["alpha", "sign_mode", "seed", "N", "KCT_over_N"], points)

    def _overlays(self) -> None:
        specs = self.config.overlays
        path = self.out / "comparison.csv"
        if not specs:
            if path.exists():
                path.unlink()
            return
        rows, meta = [], []
        decomp = [(ring, row) for ring, row in self._ring_rows("decomposition.csv")
                  if ring == self.config.rings[0]]
        ref_dir = self.out / "overlays"
        ref_dir.mkdir(exist_ok=True)
        for raw in specs:
            try:
                spec = OverlaySpec.from_dict(raw)
                ref = load_overlay(spec)
            except (OverlayError, KeyError) as exc:
                self.warnings.append(f"overlay skipped: {exc}")
                continue
            self.warnings.extend(ref.warnings)
            shutil.copyfile(spec.path, ref_dir / f"{spec.label}.csv")
            rows += [(spec.label, "reference", spec.x_kind, x, v) for x, v in zip(ref.x, ref.values)]
            rows += self._simulated_curve(spec, decomp)
            meta.append({"label": spec.label, "x_kind": spec.x_kind, "units": ref.units,
                         "simulated_units": {"x": "rad" if spec.x_kind == "phi" else "hbar/J",
                                             "value": "normalized"},
                         "quantity": spec.quantity, "source_file": f"overlays/{spec.label}.csv"})
        write_csv(path, ["label", "source", "x_kind", "x", "value"], rows)
        (self.out / "comparison.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    def _simulated_curve(self, spec: OverlaySpec, decomp):
        if not decomp:
            return []
        ts = sorted({float(r["t"]) for _, r in decomp})
        phis = sorted({float(r["phi"]) for _, r in decomp})
        if spec.x_kind == "phi":
            at = ts[-1] if spec.at is None else min(ts, key=lambda t: abs(t - spec.at))
            sel = [r for _, r in decomp if float(r["t"]) == at]
            pts = sorted({float(r["phi"]): r[spec.quantity] for r in sel}.items())
        else:
            target = 0.0 if spec.at is None else spec.at
            at = min(phis, key=lambda p: abs(p - target))
            sel = [r for _, r in decomp if float(r["phi"]) == at]
            pts = sorted({float(r["t"]): r[spec.quantity] for r in sel}.items())
        return [(spec.label, "simulated", spec.x_kind, x, float(v)) for x, v in pts]

    def _write_manifest(self, status: str) -> dict:
        cfg = self.config
        inventory = {}
        for p in sorted(self.out.rglob("*")):
            if p.is_file() and p.name != "manifest.json":
                inventory[str(p.relative_to(self.out))] = sha256(p)
        seeds = {r.tag: {"ring_seed": r.seed} for r in cfg.rings}
        if cfg.estimator.kind == "stochastic":
            for entry in seeds.values():
                entry.update(estimator_seed=cfg.estimator.seed, n_states=cfg.estimator.n_states)
        manifest = {
            "status": status,
            "config_hash": cfg.config_hash(),
            "code_version": __version__,
            "estimator": cfg.estimator.kind,
            "seeds": seeds,
            "timings_s": self.timings,
            "tasks": self.tasks,
            "failed": self.failed,
            "warnings": self.warnings,
            "files": inventory,
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest


class _Immediate:
    """Future-like wrapper that computes lazily in the calling process."""

    def __init__(self, task):
        self.task = task

    def result(self):
        return compute_chunk(self.task)


def run(config: RunConfig, extra_manifest: dict | None = None) -> dict:
    return Runner(config, extra_manifest).run()


def resume(run_dir) -> dict:
    """Re-run the config stored in ``run_dir``; finished rings are skipped by checksum."""
    run_dir = Path(run_dir)
    cfg = load_config(run_dir / "config.yaml")
    cfg.output.dir = str(run_dir.resolve())
    extra = {}
    old = run_dir / "manifest.json"
    if old.exists():
        try:
            prev = json.loads(old.read_text())
            extra = {k: prev[k] for k in ("preset_caps",) if k in prev}
        except json.JSONDecodeError:
            pass
    return run(cfg, extra)


def add_overlay(run_dir, overlay: dict) -> dict:
    """Register a reference curve with an existing run and rebuild the comparison outputs."""
    run_dir = Path(run_dir)
    cfg = load_config(run_dir / "config.yaml")
    cfg.output.dir = str(run_dir.resolve())
    OverlaySpec.from_dict(overlay)
    cfg.overlays = list(cfg.overlays) + [overlay]
    return run(cfg)
