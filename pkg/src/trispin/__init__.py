"""Numerical laboratory for chains with three-spin interactions derived from
a two-species Bose-Hubbard triangle: exact diagonalization, analytic
correlators, correlation lengths, and localizable entanglement.
"""

from .bose_hubbard import (
    BoseHubbardParams,
    EffectiveCouplings,
    FockBasis,
    TruncationReport,
    build_full_hamiltonian,
    effective_couplings,
    validate_perturbation,
)
from .correlations import SurveyReport, n_point, survey, two_point_connected
from .free_fermion import (
    CorrelationSeries,
    Dispersion,
    LengthEstimate,
    QuadratureError,
    correlation_length,
    czz_analytic,
    energy_gap,
)
from .localizable import (
    AnnealConfig,
    BranchResult,
    LocEntResult,
    MeasurementPlan,
    branch_average,
    cluster_scheme_plan,
    concurrence_pure,
    entanglement_length,
    optimize_plan,
    lower_bound_plan,
    scheme_seed_plans,
)
from .spin_core import (
    ConvergenceError,
    PauliString,
    ResourceLimitError,
    SpinChainSpec,
    StateVector,
    apply,
    cluster_hamiltonian,
    dense_matrix,
    dense_spectrum,
    expectation,
    ground_state,
    lowest_eigenvalues,
    spectral_gap,
    triangle_chain_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "BoseHubbardParams",
    "BranchResult",
    "ConvergenceError",
    "CorrelationSeries",
    "Dispersion",
    "EffectiveCouplings",
    "FockBasis",
    "LengthEstimate",
    "LocEntResult",
    "MeasurementPlan",
    "PauliString",
    "QuadratureError",
    "ResourceLimitError",
    "SpinChainSpec",
    "StateVector",
    "SurveyReport",
    "TruncationReport",
    "apply",
    "branch_average",
    "build_full_hamiltonian",
    "cluster_hamiltonian",
    "cluster_scheme_plan",
    "concurrence_pure",
    "correlation_length",
    "czz_analytic",
    "dense_matrix",
    "dense_spectrum",
    "effective_couplings",
    "energy_gap",
    "entanglement_length",
    "expectation",
    "ground_state",
    "lowest_eigenvalues",
    "n_point",
    "optimize_plan",
    "lower_bound_plan",
    "scheme_seed_plans",
    "spectral_gap",
    "survey",
    "triangle_chain_hamiltonian",
    "two_point_connected",
    "validate_perturbation",
]
