"""Ensemble-averaged classical-path variational dynamics for the spin-boson
model: thermal Wigner sampling of a harmonic bath, classically driven
two-level dynamics via McLachlan's variational principle on a ZXZ ansatz,
simulated Hadamard-test measurement with shot and gate noise, and Monte
Carlo ensemble averaging."""

__version__ = "0.1.0"

from .bath import (
    BathInitialCondition,
    BathMode,
    BathSpec,
    SpectralDensityParams,
    ThermalParams,
    discretize,
    driving_force,
    sample_wigner,
    spectral_density,
    trajectory,
)
from .circuits import NoiseParams, ShotConfig, build_a_circuit, build_c_circuit, run
from .ensemble import (
    EnsembleConfig,
    EnsembleResult,
    ErrorStats,
    convergence_scan,
    run_ensemble,
    shot_error_stats,
)
from .mclachlan import (
    AnalyticBackend,
    EvolutionConfig,
    McLachlanSystem,
    TrajectoryResult,
    assemble_analytic,
    evolve,
    theta_dot,
)
from .numeric import matrix_exp_2x2, rk4_step, solve_regularized
from .system import PopulationSample, SystemParams, hamiltonian, populations, propagate_exact

__all__ = [
    "__version__",
    "AnalyticBackend",
    "BathInitialCondition",
    "BathMode",
    "BathSpec",
    "EnsembleConfig",
    "EnsembleResult",
    "ErrorStats",
    "EvolutionConfig",
    "McLachlanSystem",
    "NoiseParams",
    "PopulationSample",
    "ShotConfig",
    "SpectralDensityParams",
    "SystemParams",
    "ThermalParams",
    "TrajectoryResult",
    "assemble_analytic",
    "build_a_circuit",
    "build_c_circuit",
    "convergence_scan",
    "discretize",
    "driving_force",
    "evolve",
    "hamiltonian",
    "matrix_exp_2x2",
    "populations",
    "propagate_exact",
    "rk4_step",
    "run",
    "run_ensemble",
    "sample_wigner",
    "shot_error_stats",
    "solve_regularized",
    "spectral_density",
    "theta_dot",
    "trajectory",
]
