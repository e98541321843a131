"""Classical-pump, quantum-pump and coherent-pump squeezing models.

Each ``run_*`` function returns an :class:`EvolutionResult` whose traces are
photon-number expectations versus the squeezing parameter.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .exceptions import DomainError
from .fock import (
    SectorBasis,
    StateVector,
    build_classical_generator,
    build_kerr_diagonal,
    build_quantum_pump_chain,
    build_sector_basis,
    number_observable,
    sector_basis_from_dimension,
    vacuum,
)
from .propagate import EvolutionResult, PropagatorConfig, evolve

DEFAULT_R_MAX = 3.0
DEFAULT_R_POINTS = 301
DEFAULT_SNAPSHOT_STRIDE = 10
LEAKAGE_WARNING = 1e-6
DEFAULT_N_CAP = 5000


def default_r_grid(r_max: float = DEFAULT_R_MAX, points: int = DEFAULT_R_POINTS) -> np.ndarray:
    return np.linspace(0.0, r_max, points)


def effective_r(r_tilde, N):
    """Classical-pump squeezing parameter r = r_tilde * sqrt(N) of a pump with N photons."""
    if np.any(np.asarray(N) < 1):
        raise DomainError(f"pump photon number must be >= 1, got {N}")
    return np.asarray(r_tilde) * np.sqrt(N) if np.ndim(r_tilde) else r_tilde * math.sqrt(N)


@dataclass(frozen=True)
class ClassicalPumpModel:
    """Order-n squeezing with a classical pump, truncated to a residue sector.

    ``m`` is the sector size.  Use :meth:`from_dimension` to specify a total
    Fock truncation D instead; D is kept for the run metadata.
    """

    n: int
    m: int
    chi: float = 0.0
    initial_state: StateVector | None = None
    total_dimension: int | None = None

    def __post_init__(self):
        if self.m < 2:
            raise DomainError(f"sector size m must be >= 2, got {self.m}")
        if self.initial_state is not None and self.initial_state.dim != self.m:
            raise DomainError("initial state dimension does not match sector size")

    @classmethod
    def from_dimension(cls, n: int, D: int, chi: float = 0.0, **kwargs) -> "ClassicalPumpModel":
        basis = sector_basis_from_dimension(n, D)
        return cls(n=n, m=basis.size, chi=chi, total_dimension=D, **kwargs)

    @property
    def basis(self) -> SectorBasis:
        b = build_sector_basis(self.n, 0, self.m)
        if self.total_dimension is not None:
            b = SectorBasis(self.n, 0, self.m, self.total_dimension)
        return b

    def generator(self):
        gen = build_classical_generator(self.basis)
        if self.chi != 0:
            gen = gen.with_diagonal(build_kerr_diagonal(self.basis, self.chi))
        return gen

    def psi0(self) -> StateVector:
        return self.initial_state if self.initial_state is not None else vacuum(self.m)


@dataclass(frozen=True)
class QuantumPumpModel:
    """Two-mode model with the pump mode initially in the Fock state |N>.

    When ``r_tilde_grid`` is omitted, the grid is chosen so the effective
    squeezing parameter spans the default classical range.
    """

    n: int
    N: int
    r_tilde_grid: tuple | None = None

    def __post_init__(self):
        if self.N < 1:
            raise DomainError(f"pump photon number N must be >= 1, got {self.N}")

    def grid(self) -> np.ndarray:
        if self.r_tilde_grid is None:
            return default_r_grid() / math.sqrt(self.N)
        return np.asarray(self.r_tilde_grid, dtype=float)


@dataclass(frozen=True)
class CoherentPumpEnsemble:
    """Pump in a coherent state with mean photon number ``mean_photons``.

    The ensemble is a Poisson-weighted mixture of :class:`QuantumPumpModel`
    members; the retained window holds at least ``1 - epsilon`` of the mass.
    """

    n: int
    mean_photons: float
    epsilon: float = 1e-8
    r_tilde_grid: tuple | None = None
    window: tuple[int, int] | None = None
    N_cap: int = DEFAULT_N_CAP

    def __post_init__(self):
        if not self.mean_photons > 0:
            raise DomainError(f"mean pump photon number must be > 0, got {self.mean_photons}")
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def grid(self) -> np.ndarray:
        if self.r_tilde_grid is None:
            return default_r_grid() / math.sqrt(self.mean_photons)
        return np.asarray(self.r_tilde_grid, dtype=float)


def run_classical(
    model: ClassicalPumpModel,
    r_grid=None,
    cfg: PropagatorConfig | None = None,
    distribution_at=None,
    snapshot_stride: int | None = DEFAULT_SNAPSHOT_STRIDE,
) -> EvolutionResult:
    """Vacuum-seeded (by default) dynamics of the classical-pump model.

    ``distribution_at`` lists r values (nearest grid points are used) at
    which the full photon-number distribution is stored in
    ``metadata["distributions"]``.
    """
    r = default_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    basis = model.basis
    numbers = number_observable(basis)
    need_states = distribution_at is not None
    res = evolve(
        model.generator(),
        model.psi0(),
        r,
        cfg,
        observables={"n_a": numbers},
        snapshot_stride=snapshot_stride,
        keep_states=need_states,
    )
    res.metadata.update(
        model="classical",
        n=model.n,
        m=model.m,
        m_parity=basis.parity,
        total_dimension=model.total_dimension,
        chi=model.chi,
        fock_numbers=numbers,
        max_leakage=float(res.leakage_trace.max()),
    )
    if need_states:
        dists = {}
        for rv in np.atleast_1d(distribution_at):
            i = int(np.argmin(np.abs(r - rv)))
            dists[float(r[i])] = np.abs(res.states[i]) ** 2
        res.metadata["distributions"] = dists
        res.states = None
    if res.metadata["max_leakage"] > LEAKAGE_WARNING:
        res.warnings.append(
            f"leakage {res.metadata['max_leakage']:.3e} exceeds {LEAKAGE_WARNING:g}: truncation-dominated regime"
        )
    return res


def run_quantum_pump(
    model: QuantumPumpModel,
    cfg: PropagatorConfig | None = None,
    snapshot_stride: int | None = DEFAULT_SNAPSHOT_STRIDE,
) -> EvolutionResult:
    """Exact dynamics of the pump model on its invariant chain."""
    gen, labels = build_quantum_pump_chain(model.n, model.N)
    r_tilde = model.grid()
    res = evolve(
        gen,
        vacuum(gen.dim),
        r_tilde,
        cfg,
        observables={
            "n_a": number_observable(labels, "signal"),
            "n_b": number_observable(labels, "pump"),
        },
        snapshot_stride=snapshot_stride,
    )
    res.observable_traces["depletion"] = (model.N - res["n_b"]) / model.N
    res.metadata.update(
        model="pump",
        n=model.n,
        N=model.N,
        N_parity="even" if model.N % 2 == 0 else "odd",
        labels=labels,
        r_effective=effective_r(r_tilde, model.N),
    )
    return res


def conserved_charge_trace(result: EvolutionResult) -> np.ndarray:
    """Q = n_a + n*n_b evaluated on the stored snapshots of a pump run.

    Returned in snapshot order; for an exact run every entry equals n*N.
    """
    labels = result.metadata.get("labels")
    if labels is None:
        raise DomainError("result is not a quantum-pump run")
    if not result.snapshots:
        raise DomainError("pump run has no snapshots; run with snapshot_stride >= 1")
    q = labels.signal + labels.n * labels.pump
    return np.array([np.abs(result.snapshots[i]) ** 2 @ q for i in sorted(result.snapshots)])


def poisson_window(mean: float, epsilon: float, N_cap: int = DEFAULT_N_CAP) -> tuple[int, int]:
    """Smallest contiguous window of Poisson(mean) support holding >= 1 - epsilon.

    Grows outward from floor(mean), always adding the heavier neighbour.
    """
    lo = hi = int(math.floor(mean))
    mass = poisson.pmf(lo, mean)
    while mass < 1.0 - epsilon:
        left = poisson.pmf(lo - 1, mean) if lo > 0 else -1.0
        right = poisson.pmf(hi + 1, mean)
        if right >= left:
            hi += 1
            mass += right
        else:
            lo -= 1
            mass += left
        if hi > N_cap:
            raise DomainError(f"Poisson window for mean {mean} exceeds the N cap {N_cap}")
        if left <= 0 and right == 0:
            break
    return lo, hi


def _member_trace(n: int, N: int, r_tilde: np.ndarray, cfg):
    if N == 0:
        return np.zeros(r_tilde.size), np.zeros(r_tilde.size), 0.0
    res = run_quantum_pump(QuantumPumpModel(n, N, tuple(r_tilde)), cfg, snapshot_stride=None)
    return res["n_a"], res["n_b"], res.norm_drift


def run_coherent_ensemble(
    ensemble: CoherentPumpEnsemble,
    cfg: PropagatorConfig | None = None,
    workers: int = 1,
) -> EvolutionResult:
    """Poisson-weighted sum of per-N pump traces.

    Pump photon-number sectors never interfere in diagonal observables, so
    the coherent-pump expectation is the weighted sum of Fock-pump runs.
    Even-N and odd-N partial sums are returned as ``n_a_even``/``n_a_odd``.
    """
    mu = ensemble.mean_photons
    if ensemble.window is not None:
        lo, hi = ensemble.window
        if lo < 0 or hi < lo:
            raise DomainError(f"invalid window {ensemble.window}")
        if hi > ensemble.N_cap:
            raise DomainError(f"window {ensemble.window} exceeds the N cap {ensemble.N_cap}")
    else:
        lo, hi = poisson_window(mu, ensemble.epsilon, ensemble.N_cap)
    Ns = np.arange(lo, hi + 1)
    weights = poisson.pmf(Ns, mu)
    r_tilde = ensemble.grid()

    def job(N):
        return _member_trace(ensemble.n, int(N), r_tilde, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(job, Ns))
    else:
        members = [job(N) for N in Ns]

    # ordered fold keeps the sum bitwise independent of scheduling
    n_a = np.zeros(r_tilde.size)
    n_b = np.zeros(r_tilde.size)
    n_a_even = np.zeros(r_tilde.size)
    n_a_odd = np.zeros(r_tilde.size)
    drift = 0.0
    for N, w, (a, b, d) in zip(Ns, weights, members):
        n_a += w * a
        n_b += w * b
        if N % 2 == 0:
            n_a_even += w * a
        else:
            n_a_odd += w * a
        drift = max(drift, d)
    even = Ns % 2 == 0
    res = EvolutionResult(
        r_grid=r_tilde,
        observable_traces={"n_a": n_a, "n_b": n_b, "n_a_even": n_a_even, "n_a_odd": n_a_odd},
        norm_drift=drift,
        leakage_trace=np.zeros(r_tilde.size),
        norm_deviation=np.zeros(r_tilde.size),
        method=(cfg or PropagatorConfig()).method,
    )
    res.metadata.update(
        model="ensemble",
        n=ensemble.n,
        mean_photons=mu,
        window=(int(lo), int(hi)),
        N_values=Ns,
        weights=weights,
        retained_mass=float(weights.sum()),
        even_weight=float(weights[even].sum()),
        odd_weight=float(weights[~even].sum()),
        r_effective=r_tilde * math.sqrt(mu),
    )
    return res


def pump_classical_discrepancy(n: int, N: int, m: int, r_effective_grid, cfg: PropagatorConfig | None = None) -> float:
    """Max |<n_a>_pump - <n_a>_classical| on a shared effective-r grid.

    A monitored quantity only: how closely the two models should agree at
    large N is not pinned down, so no tolerance is attached.
    """
    r = np.asarray(r_effective_grid, dtype=float)
    classical = run_classical(ClassicalPumpModel(n, m), r, cfg, snapshot_stride=None)["n_a"]
    pumped = run_quantum_pump(QuantumPumpModel(n, N, tuple(r / math.sqrt(N))), cfg, snapshot_stride=None)["n_a"]
    return float(np.abs(pumped - classical).max())
