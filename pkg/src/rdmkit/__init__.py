"""Reduced density operators of fermionic and bosonic product states."""

from .asymptotics import (
    AssumptionCheck,
    ExplicitEigenvalues,
    ObservableFamily,
    SweepConfig,
    SweepRecord,
    Thermal,
    Uniform,
    check_assumptions,
    observable_panel,
    run_sweep,
    sigma1_asymptotic,
    sigmak_product_approx,
    sigmak_tensor_approx,
    strong_metric,
    weak_metric,
)
from .contraction import (
    ContractionResult,
    Path,
    SpectralContraction,
    XiTable,
    contract,
    contract_bruteforce,
    contract_explicit,
    contract_recurrence,
    sigma_k,
    spectral_contraction,
    xi_table,
)
from .errors import (
    BadArity,
    DegenerateState,
    DimensionOverflow,
    NegativeEigenvalue,
    NormBoundViolated,
    NotHermitian,
    NotInvertible,
    RdmError,
)
from .operators import (
    SingleParticleState,
    hermitian_spectrum,
    operator_norm,
    partial_trace_last,
    random_state,
    tensor_power,
    tensor_product,
    trace_norm,
)
from .symmetry import (
    Permutation,
    Sector,
    cycle_decompose,
    graded_power,
    graded_product,
    permutation_operator,
    sector_trace,
    symmetrizer,
)

__version__ = "0.1.0"
