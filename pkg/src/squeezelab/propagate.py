"""Propagation of states under U(r) = exp(-i r H).

Three interchangeable methods are provided and are expected to agree:

* ``spectral``  - one tridiagonal eigendecomposition reused for every r;
* ``krylov``    - Lanczos approximation of exp(-i dr H) psi with adaptive
  substeps, for truncations too large to diagonalize comfortably;
* ``reference`` - adaptive explicit Runge-Kutta (DOP853), used as an
  independent oracle in tests.

All three work in the frame where H is real.  With D = diag(1, i, -1, -i, ...)
the generator i*A + diag(d) equals D T D^* where T is the real symmetric
tridiagonal matrix with off-diagonal ``band`` and diagonal ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.linalg.lapack import dstev

from .exceptions import (
    DomainError,
    EigensolverError,
    KrylovConvergenceError,
    StepSizeError,
)
from .fock import Generator, StateVector

METHODS = ("spectral", "krylov", "reference")
REFERENCE_MAX_DIM = 1024
_BREAKDOWN = 1e-13
# convergence of the Krylov approximation is tested every few Lanczos steps
_CHECK_EVERY = 4


@dataclass(frozen=True)
class PropagatorConfig:
    method: str = "spectral"
    tolerance: float = 1e-10
    krylov_max_dim: int = 48
    # cap on |dr| * ||H|| per Krylov substep; None leaves steps fully adaptive
    max_substep: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.tolerance <= 1e-4:
            raise DomainError(f"tolerance must lie in (0, 1e-4], got {self.tolerance}")
        if self.krylov_max_dim < 4:
            raise DomainError(f"krylov_max_dim must be >= 4, got {self.krylov_max_dim}")
        if self.max_substep is not None and not self.max_substep > 0:
            raise DomainError(f"max_substep must be positive, got {self.max_substep}")


@dataclass
class EvolutionResult:
    r_grid: np.ndarray
    observable_traces: dict[str, np.ndarray]
    norm_drift: float
    leakage_trace: np.ndarray
    norm_deviation: np.ndarray
    method: str
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    states: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observable_traces[name]

    def final_state(self) -> np.ndarray:
        if self.states is None:
            raise ValueError("states were not kept; pass keep_states=True")
        return self.states[-1]


def _phases(dim: int) -> np.ndarray:
    return (1j) ** (np.arange(dim) % 4)


def _as_amplitudes(psi0, dim: int) -> np.ndarray:
    if not isinstance(psi0, StateVector):
        psi0 = StateVector(psi0)
    if psi0.dim != dim:
        raise DomainError(f"state dimension {psi0.dim} does not match generator dimension {dim}")
    return np.array(psi0.amplitudes)


def _check_grid(r_grid) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if r.ndim != 1 or r.size == 0:
        raise DomainError("r_grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(r)):
        raise DomainError("r_grid must be finite")
    d = np.diff(r)
    if not (np.all(d >= 0) or np.all(d <= 0)):
        raise DomainError("r_grid must be sorted")
    return r


def eigensystem(gen: Generator) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the real tridiagonal frame T."""
    if gen.dim == 1:
        return np.array(gen.diagonal, dtype=float), np.ones((1, 1))
    try:
        w, V = eigh_tridiagonal(gen.diagonal, gen.band)
    except (LinAlgError, ValueError) as exc:
        nz = gen.band[gen.band > 0]
        cond = float(nz.max() / nz.min()) if nz.size else None
        raise EigensolverError(
            f"tridiagonal eigensolver failed for dim={gen.dim} (coupling ratio {cond}): {exc}",
            dim=gen.dim,
            condition=cond,
        ) from exc
    return w, V


def leakage(psi, q: int | None = None) -> float:
    """Population held in the top ``q`` basis states.

    Default ``q = max(2, dim // 20)``, clipped to ``dim - 1`` for tiny bases.
    """
    amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    dim = amps.shape[-1]
    if q is None:
        q = min(max(2, dim // 20), dim - 1)
    if not 1 <= q < dim:
        raise DomainError(f"tail count q must satisfy 1 <= q < {dim}, got {q}")
    return np.sum(np.abs(amps[..., dim - q :]) ** 2, axis=-1)


def _summarize(states, r, method, observables, leakage_tail, snapshot_stride, keep_states):
    pops = np.abs(states) ** 2
    norms = np.sqrt(pops.sum(axis=1))
    deviation = np.abs(norms - 1.0)
    traces = {name: pops @ np.asarray(diag, dtype=float) for name, diag in (observables or {}).items()}
    dim = states.shape[1]
    if dim > 1:
        leak = leakage(states, leakage_tail)
    else:
        leak = np.zeros(len(r))
    snaps = {}
    if snapshot_stride:
        for i in range(0, len(r), snapshot_stride):
            snaps[i] = states[i].copy()
        snaps[len(r) - 1] = states[-1].copy()
    return EvolutionResult(
        r_grid=r,
        observable_traces=traces,
        norm_drift=float(deviation.max()),
        leakage_trace=np.asarray(leak, dtype=float),
        norm_deviation=deviation,
        method=method,
        snapshots=snaps,
        states=states if keep_states else None,
    )


def spectral_states(gen: Generator, psi0, r_grid) -> np.ndarray:
    """States exp(-i r H) psi0 for every r, shape (len(r_grid), dim)."""
    r = _check_grid(r_grid)
    amps = _as_amplitudes(psi0, gen.dim)
    w, V = eigensystem(gen)
    D = _phases(gen.dim)
    coeff = V.T @ (np.conj(D) * amps)
    out = np.empty((r.size, gen.dim), dtype=complex)
    # bound the (rows x dim) phase block to ~32 MB
    chunk = max(1, 2_000_000 // gen.dim)
    for s in range(0, r.size, chunk):
        phase = np.exp(-1j * np.outer(r[s : s + chunk], w)) * coeff
        out[s : s + chunk] = (phase @ V.T) * D
    # exp(0) is the identity; avoid the V V^T round-off there
    out[r == 0] = amps
    return out


def evolve_spectral(
    gen: Generator,
    psi0,
    r_grid,
    observables=None,
    leakage_tail=None,
    snapshot_stride=None,
    keep_states=False,
) -> EvolutionResult:
    r = _check_grid(r_grid)
    states = spectral_states(gen, psi0, r)
    return _summarize(states, r, "spectral", observables, leakage_tail, snapshot_stride, keep_states)


def _branches(r: np.ndarray):
    """Index orders that visit r >= 0 and r < 0 outward from r = 0."""
    idx = np.arange(r.size)
    pos = idx[r >= 0]
    neg = idx[r < 0]
    pos = pos[np.argsort(r[pos], kind="stable")]
    neg = neg[np.argsort(-r[neg], kind="stable")]
    return pos, neg


class _Lanczos:
    """exp(-i tau T) phi for real symmetric tridiagonal T via Lanczos."""

    def __init__(self, diag, off, max_dim):
        self.diag = diag
        self.off = off
        self.max_dim = max_dim

    def _tmul(self, x):
        y = self.diag * x
        y[1:] += self.off * x[:-1]
        y[:-1] += self.off * x[1:]
        return y

    @staticmethod
    def _small_exp(alpha, beta, tau):
        if alpha.size == 1:
            return np.array([np.exp(-1j * tau * alpha[0])])
        w, S, info = dstev(alpha, beta, compute_v=1)
        if info != 0:
            raise KrylovConvergenceError(f"projected eigensolver failed (info={info})")
        return S @ (np.exp(-1j * tau * w) * S[0])

    @staticmethod
    def _noise(beta0, b, k):
        # the estimate's own rounding floor: |y[-1]| is only known to ~k*eps
        return 10.0 * k * np.finfo(float).eps * beta0 * b

    def step(self, phi, tau, tol_step):
        """Advance phi by tau, shrinking tau by halves if needed.

        Returns (new_phi, tau_taken, krylov_dim_used).
        """
        dim = phi.size
        beta0 = np.linalg.norm(phi)
        if beta0 == 0.0:
            return phi.copy(), tau, 0
        kmax = min(self.max_dim, dim)
        V = np.empty((kmax, dim), dtype=complex)
        alpha = np.empty(kmax)
        beta = np.empty(kmax)
        V[0] = phi / beta0
        for j in range(kmax):
            w = self._tmul(V[j])
            alpha[j] = np.vdot(V[j], w).real
            w -= alpha[j] * V[j]
            if j > 0:
                w -= beta[j - 1] * V[j - 1]
            # full re-orthogonalization, twice is enough
            for _ in range(2):
                w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
            b = np.linalg.norm(w)
            beta[j] = b
            breakdown = b < _BREAKDOWN * max(1.0, abs(alpha[: j + 1]).max())
            if not breakdown and (j + 1) % _CHECK_EVERY and j + 1 < kmax:
                V[j + 1] = w / b
                continue
            y = self._small_exp(alpha[: j + 1], beta[:j], tau)
            if breakdown:
                return beta0 * (y @ V[: j + 1]), tau, j + 1
            err = beta0 * b * abs(y[-1])
            if err <= max(tol_step(tau), self._noise(beta0, b, j + 1)):
                return beta0 * (y @ V[: j + 1]), tau, j + 1
            if j + 1 < kmax:
                V[j + 1] = w / b
        # subspace exhausted: halve tau on the same basis until accurate
        while True:
            tau = tau / 2.0
            y = self._small_exp(alpha, beta[:-1], tau)
            err = beta0 * beta[-1] * abs(y[-1])
            if err <= max(tol_step(tau), self._noise(beta0, beta[-1], kmax)):
                return beta0 * (y @ V), tau, kmax
            if abs(tau) < 1e-300 or err != err:
                raise KrylovConvergenceError(
                    f"Krylov substep failed to converge (residual {err:.3e})",
                    residual=err,
                    step=tau,
                )


def krylov_states(gen: Generator, psi0, r_grid, cfg: PropagatorConfig | None = None) -> np.ndarray:
    cfg = cfg or PropagatorConfig(method="krylov")
    r = _check_grid(r_grid)
    amps = _as_amplitudes(psi0, gen.dim)
    D = _phases(gen.dim)
    phi0 = np.conj(D) * amps
    out = np.empty((r.size, gen.dim), dtype=complex)
    span = max(1.0, float(np.abs(r).max()))
    tol_step = lambda tau: cfg.tolerance * abs(tau) / span  # noqa: E731
    lanczos = _Lanczos(np.asarray(gen.diagonal, float), np.asarray(gen.band, float), cfg.krylov_max_dim)
    hnorm = gen.norm_bound()
    cap = np.inf if (cfg.max_substep is None or hnorm == 0) else cfg.max_substep / hnorm
    min_step = 1e-14 * span
    for order in _branches(r):
        phi = phi0.copy()
        pos = 0.0
        guess = None
        for i in order:
            target = r[i]
            while pos != target:
                remaining = target - pos
                tau = remaining if guess is None else np.sign(remaining) * min(abs(guess), abs(remaining))
                tau = np.sign(tau) * min(abs(tau), cap)
                if abs(tau) < min_step and abs(remaining) > min_step:
                    raise KrylovConvergenceError(
                        f"Krylov substep underflow at r={pos:.6g}", residual=None, step=tau
                    )
                phi, taken, used = lanczos.step(phi, tau, tol_step)
                pos = target if taken == remaining else pos + taken
                if taken != tau or guess is None or abs(tau) >= abs(guess):
                    # only a step that was not clipped to the grid informs the next guess
                    grow = 2.0 if used < cfg.krylov_max_dim // 2 else 1.0
                    guess = abs(taken) * grow
            out[i] = phi
    return out * D


def evolve_krylov(
    gen: Generator,
    psi0,
    r_grid,
    cfg: PropagatorConfig | None = None,
    observables=None,
    leakage_tail=None,
    snapshot_stride=None,
    keep_states=False,
) -> EvolutionResult:
    r = _check_grid(r_grid)
    states = krylov_states(gen, psi0, r, cfg)
    return _summarize(states, r, "krylov", observables, leakage_tail, snapshot_stride, keep_states)


def reference_states(gen: Generator, psi0, r_grid, rtol: float = 1e-12, atol: float = 1e-12) -> np.ndarray:
    if gen.dim > REFERENCE_MAX_DIM:
        raise DomainError(f"reference propagator is limited to dim <= {REFERENCE_MAX_DIM}, got {gen.dim}")
    r = _check_grid(r_grid)
    amps = _as_amplitudes(psi0, gen.dim)
    out = np.empty((r.size, gen.dim), dtype=complex)

    def rhs(_, y):
        return -1j * gen.matvec(y)

    for order in _branches(r):
        if order.size == 0:
            continue
        targets = r[order]
        end = targets[-1]
        if end == 0.0:
            out[order] = amps
            continue
        sol = solve_ivp(rhs, (0.0, end), amps, method="DOP853", t_eval=targets, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise StepSizeError(f"reference integration failed: {sol.message}")
        out[order] = sol.y.T
    return out


def evolve_reference(
    gen: Generator,
    psi0,
    r_grid,
    observables=None,
    leakage_tail=None,
    snapshot_stride=None,
    keep_states=False,
) -> EvolutionResult:
    r = _check_grid(r_grid)
    states = reference_states(gen, psi0, r)
    return _summarize(states, r, "reference", observables, leakage_tail, snapshot_stride, keep_states)


def evolve(gen: Generator, psi0, r_grid, cfg: PropagatorConfig | None = None, **kwargs) -> EvolutionResult:
    """Dispatch to the propagator named by ``cfg.method``."""
    cfg = cfg or PropagatorConfig()
    if cfg.method == "spectral":
        return evolve_spectral(gen, psi0, r_grid, **kwargs)
    if cfg.method == "krylov":
        return evolve_krylov(gen, psi0, r_grid, cfg, **kwargs)
    return evolve_reference(gen, psi0, r_grid, **kwargs)
