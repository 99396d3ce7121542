"""Krylov chain methods for quantum dynamics with time-dependent generators.

The package builds the time-dependent Lanczos chain of a driven model,
propagates spread complexity along it, checks the chain speed limits
and light-cone envelopes, and covers the discrete (circuit) and
periodically driven (extended-space) constructions plus the chain
operator algebra. The `krylovtd` console script runs configured
experiments and the built-in verification suite.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegeneracyError,
    KrylovError,
    NumericalError,
    StructuralError,
)
from .numcore import (
    DEFLATION_RTOL,
    ComplexTridiag,
    HermTridiag,
    TimeGrid,
    cumulative_integral,
    finite_diff_series,
    orthonormalize_against,
    tridiag_expm_apply,
)
from .models import (
    FIXED,
    INSTANTANEOUS,
    Drive,
    ModelSpec,
    custom_model,
    hamiltonian_at,
    ising_free_fermion,
    lmg,
    oracle_lanczos,
    oscillator_dilate,
    oscillator_translate,
    single_spin,
    spin_heisenberg_complexity,
    spin_operators,
)
from .lanczos_td import (
    KrylovData,
    TildeData,
    krylov_data_from_oracle,
    phase_transform,
    row_margin,
    run_lanczos_td,
    verify_basis,
)
from .chain import (
    ChainState,
    QslMargins,
    SpreadReport,
    check_dispersion_bound,
    check_qsl,
    direct_evolution,
    lr_envelope,
    propagate_chain,
    reconstruct_and_compare,
    spread_report,
)
from .arnoldi import (
    ArnoldiRecord,
    UnitaryStepModel,
    arnoldi_step,
    full_orthogonalization_step,
    hessenberg_from_z,
    run_discrete_evolution,
)
from .floquet import (
    FloquetLanczosData,
    SambeVector,
    chain_phases,
    floquet_reconstruct,
    populations,
    sambe_lanczos,
    static_reference,
)
from .algebra import (
    AlgebraTriple,
    build_triple,
    check_commutators,
    closure_prerequisite,
    heisenberg_direct,
    heisenberg_evolve,
    operator_qsl,
)

__all__ = [
    "__version__",
    "ConfigurationError",
    "DegeneracyError",
    "KrylovError",
    "NumericalError",
    "StructuralError",
    "DEFLATION_RTOL",
    "ComplexTridiag",
    "HermTridiag",
    "TimeGrid",
    "cumulative_integral",
    "finite_diff_series",
    "orthonormalize_against",
    "tridiag_expm_apply",
    "FIXED",
    "INSTANTANEOUS",
    "Drive",
    "ModelSpec",
    "custom_model",
    "hamiltonian_at",
    "ising_free_fermion",
    "lmg",
    "oracle_lanczos",
    "oscillator_dilate",
    "oscillator_translate",
    "single_spin",
    "spin_heisenberg_complexity",
    "spin_operators",
    "KrylovData",
    "TildeData",
    "krylov_data_from_oracle",
    "phase_transform",
    "row_margin",
    "run_lanczos_td",
    "verify_basis",
    "ChainState",
    "QslMargins",
    "SpreadReport",
    "check_dispersion_bound",
    "check_qsl",
    "direct_evolution",
    "lr_envelope",
    "propagate_chain",
    "reconstruct_and_compare",
    "spread_report",
    "ArnoldiRecord",
    "UnitaryStepModel",
    "arnoldi_step",
    "full_orthogonalization_step",
    "hessenberg_from_z",
    "run_discrete_evolution",
    "FloquetLanczosData",
    "SambeVector",
    "chain_phases",
    "floquet_reconstruct",
    "populations",
    "sambe_lanczos",
    "static_reference",
    "AlgebraTriple",
    "build_triple",
    "check_commutators",
    "closure_prerequisite",
    "heisenberg_direct",
    "heisenberg_evolve",
    "operator_qsl",
]
