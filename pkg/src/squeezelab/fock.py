"""Fock-space sectors, ladder coefficients and generator construction.

The order-n squeezing generator i[(a†)^n - a^n] only couples photon numbers
that differ by n, so the Fock space splits into n residue classes.  Each
class is a chain, and the restriction of the generator to a chain is

    H = i A + diag(d)

with A real, antisymmetric and tridiagonal.  Only the strictly-lower band of
A and the diagonal are stored; the factor i is never materialized unless a
dense matrix is explicitly requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

# Above this k*n the running product is done in log space.
_LOG_SPACE_THRESHOLD = 10**6


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def ladder_coeff(n: int, k: int) -> float:
    """Matrix element <k+n|(a†)^n|k> = sqrt((k+1)(k+2)...(k+n)).

    Computed as an n-term product, never through factorials, so large k
    does not overflow.
    """
    if n < 1:
        raise DomainError(f"order n must be >= 1, got {n}")
    if k < 0:
        raise DomainError(f"photon count k must be >= 0, got {k}")
    if k * n > _LOG_SPACE_THRESHOLD:
        return math.exp(0.5 * math.fsum(math.log(k + j) for j in range(1, n + 1)))
    prod = 1.0
    for j in range(1, n + 1):
        prod *= k + j
    return math.sqrt(prod)


def ladder_coeffs(n: int, ks) -> np.ndarray:
    """Vectorized :func:`ladder_coeff` over an array of photon counts."""
    if n < 1:
        raise DomainError(f"order n must be >= 1, got {n}")
    ks = np.asarray(ks, dtype=float)
    if ks.size and ks.min() < 0:
        raise DomainError("photon counts must be >= 0")
    if ks.size == 0:
        return np.zeros(0)
    if ks.max() * n > _LOG_SPACE_THRESHOLD:
        logs = sum(np.log(ks + j) for j in range(1, n + 1))
        return np.exp(0.5 * logs)
    prod = np.ones_like(ks)
    for j in range(1, n + 1):
        prod *= ks + j
    return np.sqrt(prod)


@dataclass(frozen=True)
class SectorBasis:
    """Photon numbers residue, residue+n, ..., residue+(size-1)n."""

    n: int
    residue: int
    size: int
    total_dimension: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"order n must be >= 1, got {self.n}")
        if not 0 <= self.residue < self.n:
            raise DomainError(f"residue must lie in [0, {self.n}), got {self.residue}")
        if self.size < 1:
            raise DomainError(f"sector size must be >= 1, got {self.size}")

    @property
    def fock_numbers(self) -> np.ndarray:
        return self.residue + self.n * np.arange(self.size)

    @property
    def parity(self) -> str:
        return "even" if self.size % 2 == 0 else "odd"


def build_sector_basis(n: int, residue: int, size: int) -> SectorBasis:
    return SectorBasis(n=n, residue=residue, size=size)


def sector_size_from_dimension(n: int, D: int, residue: int = 0) -> int:
    """Number of Fock states 0..D-1 that fall in the given residue class."""
    if n < 1:
        raise DomainError(f"order n must be >= 1, got {n}")
    if D < 1:
        raise DomainError(f"total dimension must be >= 1, got {D}")
    if not 0 <= residue < n:
        raise DomainError(f"residue must lie in [0, {n}), got {residue}")
    return max(0, math.ceil((D - residue) / n))


def sector_basis_from_dimension(n: int, D: int, residue: int = 0) -> SectorBasis:
    """Sector of a total Fock truncation 0..D-1; D is recorded alongside m."""
    m = sector_size_from_dimension(n, D, residue)
    if m < 1:
        raise DomainError(f"dimension {D} holds no state of residue {residue}")
    return SectorBasis(n=n, residue=residue, size=m, total_dimension=D)


@dataclass(frozen=True, eq=False)
class Generator:
    """Hermitian H = i*A + diag(diagonal), A antisymmetric tridiagonal.

    ``band[j]`` is A[j+1, j] (so A[j, j+1] = -band[j]).
    """

    band: np.ndarray
    diagonal: np.ndarray = field(default=None)

    def __post_init__(self):
        band = _frozen(self.band)
        if band.ndim != 1:
            raise DomainError("band must be one-dimensional")
        if not np.all(np.isfinite(band)) or np.any(band < 0):
            raise DomainError("band entries must be finite and >= 0")
        dim = band.size + 1
        if self.diagonal is None:
            diagonal = _frozen(np.zeros(dim))
        else:
            diagonal = _frozen(self.diagonal)
            if diagonal.shape != (dim,):
                raise DomainError(f"diagonal must have length {dim}, got {diagonal.shape}")
            if not np.all(np.isfinite(diagonal)):
                raise DomainError("diagonal entries must be finite")
        object.__setattr__(self, "band", band)
        object.__setattr__(self, "diagonal", diagonal)

    @property
    def dim(self) -> int:
        return self.band.size + 1

    @property
    def has_diagonal(self) -> bool:
        return bool(np.any(self.diagonal != 0))

    def with_diagonal(self, diagonal) -> "Generator":
        return Generator(self.band, diagonal)

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral radius (Gershgorin)."""
        b = self.band
        rows = np.abs(self.diagonal).copy()
        rows[:-1] += b
        rows[1:] += b
        return float(rows.max()) if rows.size else 0.0

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """H @ x without forming H."""
        x = np.asarray(x)
        y = self.diagonal * x
        y = y.astype(np.result_type(x, np.complex128))
        # (iA x)[j+1] += i*band[j]*x[j];  (iA x)[j] -= i*band[j]*x[j+1]
        y[1:] += 1j * self.band * x[:-1]
        y[:-1] -= 1j * self.band * x[1:]
        return y

    def antisymmetric_dense(self) -> np.ndarray:
        A = np.zeros((self.dim, self.dim))
        idx = np.arange(self.dim - 1)
        A[idx + 1, idx] = self.band
        A[idx, idx + 1] = -self.band
        return A

    def to_dense(self) -> np.ndarray:
        """Dense complex Hermitian matrix of H."""
        return 1j * self.antisymmetric_dense() + np.diag(self.diagonal)


@dataclass(frozen=True)
class PumpChainLabels:
    """Labels of the invariant chain |kn, N-k>, k = 0..N, of the pump model."""

    n: int
    N: int

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.N + 1)

    @property
    def signal(self) -> np.ndarray:
        return self.n * self.k

    @property
    def pump(self) -> np.ndarray:
        return self.N - self.k


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise DomainError("amplitudes must be a non-empty vector")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"state must have unit norm, got {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, dim: int, index: int = 0) -> "StateVector":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def vacuum(dim: int) -> StateVector:
    return StateVector.basis(dim, 0)


def build_classical_generator(basis: SectorBasis) -> Generator:
    """Restriction of i[(a†)^n - a^n] to a truncated residue sector."""
    return Generator(ladder_coeffs(basis.n, basis.fock_numbers[:-1]))


def build_kerr_diagonal(basis: SectorBasis, chi: float) -> np.ndarray:
    """Diagonal of chi * (a†a)^2 on the sector."""
    if not math.isfinite(chi):
        raise DomainError(f"Kerr coefficient must be finite, got {chi}")
    k = basis.fock_numbers.astype(float)
    return chi * k**2


def build_quantum_pump_chain(n: int, N: int) -> tuple[Generator, PumpChainLabels]:
    """Two-mode pump Hamiltonian i[b (a†)^n - b† a^n] on its invariant chain.

    The state |kn, N-k> couples to |(k+1)n, N-k-1> with strength
    sqrt(N-k) * ladder_coeff(n, kn).
    """
    if n < 1:
        raise DomainError(f"order n must be >= 1, got {n}")
    if N < 1:
        raise DomainError(f"pump photon number N must be >= 1, got {N}")
    k = np.arange(N)
    band = np.sqrt(N - k) * ladder_coeffs(n, k * n)
    return Generator(band), PumpChainLabels(n=n, N=N)


def number_observable(space, mode: str = "signal") -> np.ndarray:
    """Diagonal of a photon-number operator.

    For a :class:`SectorBasis` this is a†a.  For :class:`PumpChainLabels`,
    ``mode`` selects the signal (a†a) or pump (b†b) mode.
    """
    if isinstance(space, SectorBasis):
        return space.fock_numbers.astype(float)
    if isinstance(space, PumpChainLabels):
        if mode == "signal":
            return space.signal.astype(float)
        if mode == "pump":
            return space.pump.astype(float)
        raise DomainError(f"mode must be 'signal' or 'pump', got {mode!r}")
    raise TypeError(f"expected SectorBasis or PumpChainLabels, got {type(space).__name__}")
