"""Numerical laboratory for generalized n-th order squeezing."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DomainError,
    EigensolverError,
    FitError,
    KrylovConvergenceError,
    PropagationError,
    SqueezeLabError,
    StepSizeError,
)
from .fock import (  # noqa: E402
    Generator,
    PumpChainLabels,
    SectorBasis,
    StateVector,
    build_classical_generator,
    build_kerr_diagonal,
    build_quantum_pump_chain,
    build_sector_basis,
    ladder_coeff,
    number_observable,
    sector_basis_from_dimension,
    vacuum,
)
from .propagate import (  # noqa: E402
    EvolutionResult,
    PropagatorConfig,
    evolve,
    evolve_krylov,
    evolve_reference,
    evolve_spectral,
    leakage,
)
from .models import (  # noqa: E402
    ClassicalPumpModel,
    CoherentPumpEnsemble,
    QuantumPumpModel,
    conserved_charge_trace,
    effective_r,
    run_classical,
    run_coherent_ensemble,
    run_quantum_pump,
)
from .analysis import (  # noqa: E402
    detect_oscillation,
    extension_convergence,
    fit_scaling,
    kerr_convergence,
    parity_scan,
    spectrum,
)

__all__ = [
    "__version__",
    "DomainError",
    "EigensolverError",
    "FitError",
    "KrylovConvergenceError",
    "PropagationError",
    "SqueezeLabError",
    "StepSizeError",
    "Generator",
    "PumpChainLabels",
    "SectorBasis",
    "StateVector",
    "build_classical_generator",
    "build_kerr_diagonal",
    "build_quantum_pump_chain",
    "build_sector_basis",
    "ladder_coeff",
    "number_observable",
    "sector_basis_from_dimension",
    "vacuum",
    "EvolutionResult",
    "PropagatorConfig",
    "evolve",
    "evolve_krylov",
    "evolve_reference",
    "evolve_spectral",
    "leakage",
    "ClassicalPumpModel",
    "CoherentPumpEnsemble",
    "QuantumPumpModel",
    "conserved_charge_trace",
    "effective_r",
    "run_classical",
    "run_coherent_ensemble",
    "run_quantum_pump",
    "detect_oscillation",
    "extension_convergence",
    "fit_scaling",
    "kerr_convergence",
    "parity_scan",
    "spectrum",
]
