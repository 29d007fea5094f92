"""Discrete Lohe sphere and Lohe matrix aggregation schemes, with diagnostics and reference solvers."""
from .linalg import (
    EigensolverError,
    SingularMatrixError,
    StructureError,
    StructureTolerance,
    expm_skew_hermitian,
    expm_taylor_oracle,
    frobenius_norm,
    is_unitary,
    operator_norm,
    project_unitary,
    random_hermitian,
    random_hermitian_zero_trace_sum,
    random_unit_vector,
    random_unitary,
)
from .sphere import SphereEnsemble, StepRejected, kuramoto_step, sphere_diagnostics, sphere_step
from .thresholds import (
    FrameworkInputs,
    FrameworkReport,
    check_framework,
    cubic_alphas,
    find_beta0,
    find_beta1,
    lambda_of,
    m_of,
)
from .unitary import UnitaryEnsemble, dlm_step, matrix_diagnostics, relative_position_distance
from .continuous import ContinuousRunConfig, continuous_evolve, uniform_convergence_experiment

__version__ = "0.1.0"
