"""Spectra, parity divergence, oscillation detection and scaling fits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DomainError, FitError
from .fock import build_classical_generator, build_sector_basis
from .models import (
    ClassicalPumpModel,
    QuantumPumpModel,
    default_r_grid,
    run_classical,
    run_quantum_pump,
)
from .propagate import PropagatorConfig, eigensystem

PARITY_RATIO_THRESHOLD = 10.0
GAP_FLOOR = 1e-14
DENSE_CAP = 8192
NOISE_GUARD = 1e-9
DROP_THRESHOLD = 0.1
KERR_TOLERANCE = 1e-6


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    # max |lambda_j + lambda_{dim-1-j}|; only meaningful for zero-diagonal generators
    pairing_defect: float | None
    has_zero_mode: bool
    min_abs: float


def spectrum(gen, dense_cap: int = DENSE_CAP, zero_tol: float = 1e-10) -> Spectrum:
    """Sorted real eigenvalues of H with pairing and zero-mode diagnostics."""
    if gen.dim > dense_cap:
        raise DomainError(f"generator dimension {gen.dim} exceeds the dense cap {dense_cap}")
    w, _ = eigensystem(gen)
    w = np.sort(w)
    pairing = None if gen.has_diagonal else float(np.abs(w + w[::-1]).max())
    min_abs = float(np.abs(w).min())
    return Spectrum(eigenvalues=w, pairing_defect=pairing, has_zero_mode=min_abs <= zero_tol, min_abs=min_abs)


def trace_gap(a, b) -> float:
    """Max-abs difference scaled by (1 + largest magnitude of either trace)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = 1.0 + max(np.abs(a).max(), np.abs(b).max())
    return float(np.abs(a - b).max() / scale)


@dataclass
class ParityReport:
    sizes: list[int]
    delta_same_parity: float
    delta_adjacent: float
    ratio: float
    pair_gaps: list[tuple[int, int, float]] = field(default_factory=list)
    threshold: float = PARITY_RATIO_THRESHOLD
    converged: bool | None = None
    converged_from: int | None = None
    tolerance: float | None = None

    @property
    def drastic(self) -> bool:
        return self.ratio > self.threshold

    def to_dict(self) -> dict:
        return {
            "sizes": [int(s) for s in self.sizes],
            "delta_same_parity": self.delta_same_parity,
            "delta_adjacent": self.delta_adjacent,
            "ratio": self.ratio,
            "threshold": self.threshold,
            "drastic": self.drastic,
            "pair_gaps": [[int(a), int(b), g] for a, b, g in self.pair_gaps],
            "converged": self.converged,
            "converged_from": self.converged_from,
            "tolerance": self.tolerance,
        }


def classical_family(n: int, r_grid=None, chi: float = 0.0, cfg: PropagatorConfig | None = None):
    """size -> <n_a>(r) for the classical model with sector size ``size``."""
    r = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)

    def trace(m):
        return run_classical(ClassicalPumpModel(n, int(m), chi), r, cfg, snapshot_stride=None)["n_a"]

    return trace


def pump_family(n: int, r_effective_grid=None, cfg: PropagatorConfig | None = None):
    """N -> <n_a> on a shared effective-r grid (r_tilde = r / sqrt(N))."""
    r = default_r_grid() if r_effective_grid is None else np.asarray(r_effective_grid, dtype=float)

    def trace(N):
        N = int(N)
        model = QuantumPumpModel(n, N, tuple(r / np.sqrt(N)))
        return run_quantum_pump(model, cfg, snapshot_stride=None)["n_a"]

    return trace


def _run_sizes(family: Callable, sizes: Sequence[int], workers: int) -> dict[int, np.ndarray]:
    sizes = sorted(int(s) for s in sizes)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(family, sizes))
    else:
        traces = [family(s) for s in sizes]
    return dict(zip(sizes, traces))


def parity_metrics(traces: dict[int, np.ndarray]) -> ParityReport:
    """Gap metrics of precomputed traces keyed by size.

    Adjacent gaps compare consecutive sizes after sorting; same-parity gaps
    compare consecutive sizes within each parity class.
    """
    sizes = sorted(traces)
    pair_gaps = [(a, b, trace_gap(traces[a], traces[b])) for a, b in zip(sizes, sizes[1:])]
    same = []
    for parity in (0, 1):
        cls = [s for s in sizes if s % 2 == parity]
        same += [trace_gap(traces[a], traces[b]) for a, b in zip(cls, cls[1:])]
    d_adj = max((g for _, _, g in pair_gaps), default=0.0)
    d_same = max(same, default=0.0)
    return ParityReport(
        sizes=sizes,
        delta_same_parity=d_same,
        delta_adjacent=d_adj,
        ratio=d_adj / max(d_same, GAP_FLOOR),
        pair_gaps=pair_gaps,
    )


def parity_scan(family: Callable, sizes: Sequence[int], workers: int = 1) -> ParityReport:
    """Run ``family`` at each size and compare traces across parities.

    ``family`` maps a size (sector size m, or pump photon number N) to a
    trace on a grid shared by all sizes; see :func:`classical_family` and
    :func:`pump_family`.
    """
    sizes = list(sizes)
    if len(set(sizes)) < 4:
        raise DomainError("parity scan needs at least 4 distinct sizes")
    if len({s % 2 for s in sizes}) < 2:
        raise DomainError("parity scan sizes must include both parities")
    return parity_metrics(_run_sizes(family, sizes, workers))


def kerr_convergence(
    n: int,
    chi: float,
    sizes: Sequence[int],
    r_grid=None,
    cfg: PropagatorConfig | None = None,
    tolerance: float = KERR_TOLERANCE,
    workers: int = 1,
    allow_zero: bool = False,
) -> ParityReport:
    """Size dependence of Kerr-regularized classical dynamics.

    ``converged_from`` is the smallest size beyond which every adjacent gap
    stays below ``tolerance``.  Non-convergence is reported, not raised.
    ``allow_zero`` permits the unregularized control run.
    """
    if chi == 0 and not allow_zero:
        raise DomainError("Kerr convergence needs chi != 0 (pass allow_zero for the control)")
    if len({int(s) % 2 for s in sizes}) < 2:
        raise DomainError("sizes must include both parities")
    traces = _run_sizes(classical_family(n, r_grid, chi, cfg), sizes, workers)
    report = parity_metrics(traces)
    threshold = None
    for a, _, g in reversed(report.pair_gaps):
        if g >= tolerance:
            break
        threshold = a
    report.tolerance = tolerance
    report.converged_from = threshold
    report.converged = threshold is not None
    return report


@dataclass
class OscillationCertificate:
    locations: np.ndarray
    values: np.ndarray
    kinds: list[str]
    drop: float

    def __bool__(self) -> bool:
        return len(self.kinds) > 0

    @property
    def maxima(self) -> np.ndarray:
        return np.array([loc for loc, k in zip(self.locations, self.kinds) if k == "max"])


def _strict_extrema(y: np.ndarray, noise: float):
    """Indices of strict local extrema, merged so kinds alternate."""
    out = []
    for i in range(1, y.size - 1):
        left, right = y[i] - y[i - 1], y[i] - y[i + 1]
        if left > noise and right > noise:
            kind = "max"
        elif left < -noise and right < -noise:
            kind = "min"
        else:
            continue
        if out and out[-1][1] == kind:
            # two of a kind in a row: keep the more extreme one
            j = out[-1][0]
            better = y[i] > y[j] if kind == "max" else y[i] < y[j]
            if better:
                out[-1] = (i, kind)
            continue
        out.append((i, kind))
    return out


def detect_oscillation(trace, r=None, noise: float = NOISE_GUARD, drop_threshold: float = DROP_THRESHOLD):
    """Certify non-monotonic behaviour of a trace.

    The certificate is non-empty when the first local maximum is followed
    by a relative drop of at least ``drop_threshold`` before the next
    maximum (or the end of the trace).
    """
    y = np.asarray(trace, dtype=float)
    if y.size < 5:
        raise DomainError("trace must have at least 5 points")
    x = np.arange(y.size, dtype=float) if r is None else np.asarray(r, dtype=float)
    empty = OscillationCertificate(np.array([]), np.array([]), [], 0.0)
    ext = _strict_extrema(y, noise)
    maxima = [i for i, k in ext if k == "max"]
    if not maxima:
        return empty
    first = maxima[0]
    nxt = next((i for i in maxima[1:]), y.size - 1)
    peak = y[first]
    if peak <= 0:
        return empty
    drop = float(np.clip((peak - y[first : nxt + 1].min()) / peak, 0.0, 1.0))
    if drop < drop_threshold:
        return empty
    idx = [i for i, _ in ext]
    return OscillationCertificate(
        locations=x[idx],
        values=y[idx],
        kinds=[k for _, k in ext],
        drop=drop,
    )


@dataclass
class PowerLawFit:
    exponent: float
    intercept: float
    residual_rms: float


@dataclass
class ScalingFit:
    N_values: np.ndarray
    peak: np.ndarray
    mean: np.ndarray
    peak_fit: PowerLawFit
    mean_fit: PowerLawFit

    def to_dict(self) -> dict:
        return {
            "N_values": [int(v) for v in self.N_values],
            "peak": [float(v) for v in self.peak],
            "mean": [float(v) for v in self.mean],
            "peak_exponent": self.peak_fit.exponent,
            "peak_intercept": self.peak_fit.intercept,
            "peak_residual_rms": self.peak_fit.residual_rms,
            "mean_exponent": self.mean_fit.exponent,
            "mean_intercept": self.mean_fit.intercept,
            "mean_residual_rms": self.mean_fit.residual_rms,
        }


def fit_power_law(x, y) -> PowerLawFit:
    """Least-squares line through (log x, log y); y = exp(intercept) * x**exponent."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise FitError("need matching x and y with at least two points")
    keep = (x > 0) & (y > 0)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if lx.size < 2 or np.ptp(lx) == 0:
        raise FitError("x values are degenerate")
    if np.ptp(ly) == 0:
        raise FitError("response is constant")
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + icpt)
    return PowerLawFit(float(slope), float(icpt), float(np.sqrt(np.mean(resid**2))))


def fit_scaling(N_values, peak, mean) -> ScalingFit:
    """Power-law fits of peak and r-averaged signal photons against N.

    All N must share one parity; even and odd pumps are distinct limits.
    """
    N_values = np.asarray(N_values)
    if N_values.size < 6:
        raise DomainError("scaling fit needs at least 6 values of N")
    if len(set(int(v) % 2 for v in N_values)) != 1:
        raise DomainError("scaling fit must use a single parity class of N")
    return ScalingFit(
        N_values=N_values,
        peak=np.asarray(peak, dtype=float),
        mean=np.asarray(mean, dtype=float),
        peak_fit=fit_power_law(N_values, peak),
        mean_fit=fit_power_law(N_values, mean),
    )


def scaling_study(
    n: int,
    N_values: Sequence[int],
    r_effective_grid=None,
    cfg: PropagatorConfig | None = None,
    workers: int = 1,
) -> dict[str, ScalingFit]:
    """Signal-photon response over a fixed effective-r window, fitted per parity class."""
    traces = _run_sizes(pump_family(n, r_effective_grid, cfg), N_values, workers)
    fits = {}
    for name, parity in (("even", 0), ("odd", 1)):
        Ns = [N for N in traces if N % 2 == parity]
        if not Ns:
            continue
        peak = [traces[N].max() for N in Ns]
        mean = [traces[N].mean() for N in Ns]
        fits[name] = fit_scaling(Ns, peak, mean)
    return fits


@dataclass
class ExtensionTable:
    n: int
    sizes: list[int]
    eigenvalues: np.ndarray  # (len(sizes), J)
    gaps: np.ndarray  # (len(sizes) - 1, J)

    @property
    def limit(self) -> np.ndarray:
        return self.eigenvalues[-1]


def low_lying(gen, J: int = 20) -> np.ndarray:
    """The J smallest non-negative eigenvalues.

    Zero-diagonal spectra are symmetric about zero, so the non-negative half
    carries the full spectrum and gives a stable per-index labelling.
    """
    w = spectrum(gen).eigenvalues
    w = w[w >= -1e-9]
    if w.size < J:
        raise DomainError(f"size too small for {J} low-lying eigenvalues")
    return np.abs(w[:J])


def extension_convergence(n: int, sizes: Sequence[int], J: int = 20) -> ExtensionTable:
    """Low-lying spectra of successive truncations within one parity class."""
    sizes = sorted(int(s) for s in sizes)
    if len(sizes) < 4:
        raise DomainError("need at least 4 sizes")
    if len({s % 2 for s in sizes}) != 1:
        raise DomainError("sizes must share one parity")
    eig = np.array([low_lying(build_classical_generator(build_sector_basis(n, 0, m)), J) for m in sizes])
    return ExtensionTable(n=n, sizes=sizes, eigenvalues=eig, gaps=np.abs(np.diff(eig, axis=0)))


def nearest_distance(values, reference) -> np.ndarray:
    """Distance from each value to the closest entry of ``reference``."""
    ref = np.asarray(reference, dtype=float)
    return np.array([np.abs(ref - v).min() for v in np.asarray(values, dtype=float)])
