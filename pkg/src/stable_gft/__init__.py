"""Numerically stable approximate graph Fourier bases for directed graphs."""

from .graph_io import (
    DatasetDescriptor,
    GraphFormatError,
    RandomGraphSpec,
    builtin_descriptor,
    directed_cycle,
    erdos_renyi,
    jordan_block,
    load_dataset,
    load_edge_list,
    load_graph,
    load_matrix_market,
    save_edge_list,
    save_matrix_market,
)
from .linalg import (
    LinalgError,
    LsqrSettings,
    SchurError,
    SingularMatrixError,
    SparseShift,
    SylvesterOperator,
    dense_min_norm,
    invert,
    lsqr_min_norm,
    schur,
    singular_extremes,
)
from .metrics import (
    MetricsReport,
    accuracy,
    angle,
    component_errors,
    condition_number,
    inverse_error,
    lr_discrepancy,
    metrics_report,
)
from .sgfa import (
    EpsilonSchur,
    SgfaConfig,
    SgfaError,
    SgfaResult,
    Termination,
    epsilon_schur,
    jordan_oracle,
    sgfa_run,
    sgfa_run_left,
    sgfa_steps,
)
from .spectral import SpectralBasis, gft, gft_inverse, order_by_tv, total_variation

__version__ = "0.1.0"
