"""Quantum state and process estimation from informationally incomplete data.

The package provides measurement (POM) constructors and analysis, Born-rule
simulation, iterative maximum-likelihood and maximum-entropy state estimators
(including extended-likelihood variants for lossy detectors), and the
corresponding trace-preserving process estimators, plus a JSON-based CLI.
"""

from .linalg import (
    eigh,
    hermitize,
    kron,
    matrix_log_floored,
    matrix_sqrt_psd,
    partial_trace,
    trace_inner,
)
from .states import (
    BlochVector,
    DensityMatrix,
    bloch_to_rho,
    maximally_mixed,
    purity,
    random_density_matrix,
    rho_to_bloch,
    truncate_state,
    von_neumann_entropy,
)
from .poms import (
    GramReport,
    Pom,
    apply_efficiencies,
    gram_report,
    hermite_functions,
    make_phase_randomized_fock_mixture,
    make_qutrit_two_outcome,
    make_quadrature_pom,
    make_six,
    make_trine,
    make_von_neumann,
    optical_trine_outcomes,
)
from .subspaces import (
    OperatorBasis,
    SubspaceDecomposition,
    decompose_state,
    gram_schmidt_operator_basis,
)
from .sampling import (
    CountsRecord,
    ProcessDataset,
    born_probabilities,
    process_probabilities,
    sample_counts,
    simulate_process_dataset,
)
from .estimate import (
    EstimationConfig,
    EstimationReport,
    QutritTwoOutcomeMl,
    closed_form_trine_mlme,
    closed_form_von_neumann_mlme,
    extended_log_likelihood,
    extended_ml_estimate,
    extended_mlme_estimate,
    log_likelihood,
    ml_estimate,
    mlme_estimate,
    qutrit_exception_ml,
    r_operator,
    trine_uniqueness_check,
)
from .processes import (
    ChiMatrix,
    ChoiOperator,
    KrausSet,
    ProcessEstimationReport,
    chi_to_choi,
    choi_apply,
    choi_to_chi,
    hs_process_error,
    kraus_apply,
    kraus_to_chi,
    kraus_to_choi,
    matrix_unit_basis,
    pauli_operator_basis,
    process_entropy,
    qpt_ml_estimate,
    qpt_mlme_estimate,
    random_tp_choi,
    random_tp_kraus,
    sequential_stopping,
    w0_operator,
    w_ml_operator,
)

__version__ = "0.1.0"
