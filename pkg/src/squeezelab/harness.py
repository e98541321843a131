"""Run configured experiments and persist traces, reports and provenance.

Outputs per run, all inside ``output_dir``:

* one CSV per trace set (header row, first column is the sweep parameter,
  floats with 17 significant digits, LF line endings);
* JSON reports for scans and fits;
* ``run_record.json`` with the config echo, timestamps, diagnostics and a
  sha256 manifest of every other file.

CSV and report files depend only on the config and version, never on
timing or worker count.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    classical_family,
    extension_convergence,
    fit_scaling,
    kerr_convergence,
    parity_metrics,
    pump_family,
    spectrum,
)
from .config import ExperimentConfig
from .exceptions import SqueezeLabError
from .fock import build_quantum_pump_chain
from .models import (
    ClassicalPumpModel,
    CoherentPumpEnsemble,
    QuantumPumpModel,
    run_classical,
    run_coherent_ensemble,
    run_quantum_pump,
)
from .propagate import PropagatorConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PHYSICS = 2
EXIT_IO = 3

WORKERS_ENV = "SQUEEZELAB_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", WORKERS_ENV, value)
    return 1


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header: list[str], columns: list) -> str:
    rows = zip(*columns)
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


@dataclass
class RunRecord:
    config: dict
    version: str
    started: str
    finished: str = ""
    status: str = "ok"
    exit_code: int = EXIT_OK
    diagnostics: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    manifest: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "status": self.status,
            "exit_code": self.exit_code,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
            "errors": self.errors,
            "manifest": self.manifest,
        }


class _Outputs:
    """Collects file contents in config order; written by a single writer."""

    def __init__(self):
        self.files: list[tuple[str, str]] = []

    def add(self, name: str, text: str):
        self.files.append((name, text))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _prop(cfg: ExperimentConfig) -> PropagatorConfig:
    return PropagatorConfig(
        method=cfg.method,
        tolerance=cfg.tolerance,
        krylov_max_dim=cfg.krylov_max_dim,
        max_substep=cfg.max_substep,
    )


def _r_grid(cfg: ExperimentConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.r_max, cfg.r_points)


def _classical_model(cfg: ExperimentConfig, m=None) -> ClassicalPumpModel:
    if m is not None:
        return ClassicalPumpModel(cfg.n, m, cfg.chi)
    if cfg.D is not None:
        return ClassicalPumpModel.from_dimension(cfg.n, cfg.D, cfg.chi)
    return ClassicalPumpModel(cfg.n, cfg.m, cfg.chi)


def _map(func, items, workers):
    """Apply ``func`` to each item, capturing per-item errors, preserving order."""

    def safe(item):
        try:
            return item, func(item), None
        except SqueezeLabError as exc:
            return item, None, exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(safe, items))
    return [safe(i) for i in items]


def _run_classical(cfg, out, rec):
    res = run_classical(_classical_model(cfg), _r_grid(cfg), _prop(cfg), distribution_at=cfg.distribution_at)
    out.add(
        "classical.csv",
        csv_text(["r", "n_a", "leakage", "norm_drift"], [res.r_grid, res["n_a"], res.leakage_trace, res.norm_deviation]),
    )
    dists = res.metadata.get("distributions")
    if dists:
        rs, ks, ps = [], [], []
        for rv, p in dists.items():
            rs += [rv] * p.size
            ks += list(res.metadata["fock_numbers"].astype(int))
            ps += list(p)
        out.add("distribution.csv", csv_text(["r", "photons", "probability"], [rs, ks, ps]))
    rec.diagnostics.update(
        m=res.metadata["m"],
        m_parity=res.metadata["m_parity"],
        total_dimension=res.metadata["total_dimension"],
        norm_drift=res.norm_drift,
        max_leakage=res.metadata["max_leakage"],
    )
    rec.warnings += res.warnings


def _run_pump(cfg, out, rec):
    grid = None
    if cfg.r_tilde_max is not None:
        grid = tuple(np.linspace(0.0, cfg.r_tilde_max, cfg.r_points))
    else:
        grid = tuple(_r_grid(cfg) / math.sqrt(cfg.N))
    res = run_quantum_pump(QuantumPumpModel(cfg.n, cfg.N, grid), _prop(cfg))
    out.add(
        "pump.csv",
        csv_text(
            ["r_tilde", "r", "n_a", "n_b", "depletion", "norm_drift"],
            [res.r_grid, res.metadata["r_effective"], res["n_a"], res["n_b"], res["depletion"], res.norm_deviation],
        ),
    )
    rec.diagnostics.update(N=cfg.N, N_parity=res.metadata["N_parity"], norm_drift=res.norm_drift)


def _run_ensemble(cfg, out, rec):
    grid = None
    if cfg.r_tilde_max is not None:
        grid = tuple(np.linspace(0.0, cfg.r_tilde_max, cfg.r_points))
    else:
        grid = tuple(_r_grid(cfg) / math.sqrt(cfg.alpha_sq))
    ens = CoherentPumpEnsemble(cfg.n, cfg.alpha_sq, cfg.epsilon, grid, N_cap=cfg.N_cap)
    res = run_coherent_ensemble(ens, _prop(cfg), workers=cfg.workers)
    out.add(
        "ensemble.csv",
        csv_text(
            ["r_tilde", "n_a", "n_b", "n_a_even", "n_a_odd"],
            [res.r_grid, res["n_a"], res["n_b"], res["n_a_even"], res["n_a_odd"]],
        ),
    )
    out.add("ensemble_weights.csv", csv_text(["N", "weight"], [res.metadata["N_values"], res.metadata["weights"]]))
    md = res.metadata
    rec.diagnostics.update(
        window=list(md["window"]),
        retained_mass=md["retained_mass"],
        even_weight=md["even_weight"],
        odd_weight=md["odd_weight"],
        norm_drift=res.norm_drift,
    )


def _run_spectrum(cfg, out, rec):
    if cfg.model == "pump":
        gen, _ = build_quantum_pump_chain(cfg.n, cfg.N)
    else:
        gen = _classical_model(cfg).generator()
    sp = spectrum(gen)
    out.add("spectrum.csv", csv_text(["index", "eigenvalue"], [np.arange(sp.eigenvalues.size), sp.eigenvalues]))
    report = {
        "dim": gen.dim,
        "pairing_defect": sp.pairing_defect,
        "has_zero_mode": sp.has_zero_mode,
        "min_abs_eigenvalue": sp.min_abs,
    }
    out.add("spectrum_report.json", json_text(report))
    rec.diagnostics.update(report)


def _family(cfg):
    if cfg.model == "pump":
        return pump_family(cfg.n, _r_grid(cfg), _prop(cfg))
    return classical_family(cfg.n, _r_grid(cfg), cfg.chi, _prop(cfg))


def _traces_csv(out, name, r, results, header_prefix):
    header = ["r"] + [f"{header_prefix}_{s}" for s, _ in results]
    out.add(name, csv_text(header, [r] + [t for _, t in results]))


def _sweep(cfg, rec, func, items):
    results = _map(func, items, cfg.workers)
    ok = [(i, v) for i, v, e in results if e is None]
    for i, _, e in results:
        if e is not None:
            rec.errors.append({"member": int(i), "error": type(e).__name__, "detail": str(e)})
    return ok


def _run_parity_scan(cfg, out, rec):
    sizes = sorted(set(cfg.sizes))
    ok = _sweep(cfg, rec, _family(cfg), sizes)
    prefix = "N" if cfg.model == "pump" else "m"
    _traces_csv(out, "parity_traces.csv", _r_grid(cfg), ok, prefix)
    if len(ok) >= 2:
        report = parity_metrics(dict(ok))
        out.add("parity_report.json", json_text({"model": cfg.model, "n": cfg.n, **report.to_dict()}))
        rec.diagnostics.update(ratio=report.ratio, drastic=report.drastic)


def _run_kerr(cfg, out, rec):
    sizes = sorted(set(cfg.sizes))
    report = kerr_convergence(
        cfg.n, cfg.chi, sizes, _r_grid(cfg), _prop(cfg), tolerance=cfg.kerr_tolerance, workers=cfg.workers
    )
    out.add(
        "kerr_convergence.csv",
        csv_text(["size", "next_size", "delta_adjacent"], [list(c) for c in zip(*report.pair_gaps)])
        if report.pair_gaps
        else "size,next_size,delta_adjacent\n",
    )
    out.add("kerr_report.json", json_text({"n": cfg.n, "chi": cfg.chi, **report.to_dict()}))
    rec.diagnostics.update(converged=report.converged, converged_from=report.converged_from)
    if not report.converged:
        rec.warnings.append("Kerr-regularized traces did not converge within the size budget")


def _run_scaling(cfg, out, rec):
    Ns = sorted(set(cfg.N_values))
    ok = _sweep(cfg, rec, pump_family(cfg.n, _r_grid(cfg), _prop(cfg)), Ns)
    traces = dict(ok)
    peak = [traces[N].max() for N in traces]
    mean = [traces[N].mean() for N in traces]
    out.add("scaling.csv", csv_text(["N", "peak_n_a", "mean_n_a"], [list(traces), peak, mean]))
    report = {"n": cfg.n, "r_max": cfg.r_max}
    for name, parity in (("even", 0), ("odd", 1)):
        Ns_p = [N for N in traces if N % 2 == parity]
        if len(Ns_p) >= 6:
            fit = fit_scaling(Ns_p, [traces[N].max() for N in Ns_p], [traces[N].mean() for N in Ns_p])
            report[name] = fit.to_dict()
            rec.diagnostics[f"{name}_peak_exponent"] = fit.peak_fit.exponent
            rec.diagnostics[f"{name}_mean_exponent"] = fit.mean_fit.exponent
    out.add("scaling_report.json", json_text(report))


def _run_extension(cfg, out, rec):
    table = extension_convergence(cfg.n, cfg.sizes, cfg.J)
    cols = [table.sizes] + [table.eigenvalues[:, j] for j in range(cfg.J)]
    out.add("extension_eigenvalues.csv", csv_text(["size"] + [f"lambda_{j}" for j in range(cfg.J)], cols))
    gcols = [table.sizes[1:]] + [table.gaps[:, j] for j in range(cfg.J)]
    out.add("extension_gaps.csv", csv_text(["size"] + [f"gap_{j}" for j in range(cfg.J)], gcols))
    rec.diagnostics.update(final_max_gap=float(table.gaps[-1].max()))


RUNNERS = {
    "classical": _run_classical,
    "pump": _run_pump,
    "ensemble": _run_ensemble,
    "spectrum": _run_spectrum,
    "parity-scan": _run_parity_scan,
    "scaling": _run_scaling,
    "kerr-convergence": _run_kerr,
    "extension-convergence": _run_extension,
}


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Execute ``cfg`` and write its outputs; the record's exit_code is the CLI status."""
    rec = RunRecord(config=cfg.to_dict(), version=__version__, started=_now())
    out = _Outputs()
    outdir = Path(cfg.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        rec.status = "failed"
        rec.exit_code = EXIT_IO
        rec.errors.append({"error": "OSError", "detail": str(exc)})
        rec.finished = _now()
        return rec

    try:
        RUNNERS[cfg.experiment](cfg, out, rec)
    except SqueezeLabError as exc:
        rec.errors.append({"error": type(exc).__name__, "detail": str(exc)})
        rec.status = "failed"
        rec.exit_code = EXIT_PHYSICS
    if rec.errors and rec.status == "ok":
        rec.status = "degraded"
        rec.exit_code = EXIT_PHYSICS

    try:
        for name, text in out.files:
            with open(outdir / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            rec.manifest.append({"file": name, "sha256": sha256(text), "bytes": len(text.encode("utf-8"))})
        rec.finished = _now()
        with open(outdir / "run_record.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json_text(rec.to_dict()))
    except OSError as exc:
        rec.status = "failed"
        rec.exit_code = EXIT_IO
        rec.errors.append({"error": "OSError", "detail": str(exc)})
    return rec
