"""Mutual percolation on two interdependent networks with tunable dependency maps."""

from .analysis import (
    CriticalPoint,
    MapSpec,
    PercolationCurve,
    PinfTable,
    QcEstimate,
    SystemSpec,
    find_contrast_configuration,
    find_pc,
    find_qc,
    noi_vs_q,
    predict_pc,
    solve_fixed_point,
    survival_threshold,
    sweep_p,
    tabulate_pinf,
)
from .cascade import AttackSpec, CascadeResult, SystemState, attack, run_cascade, run_cascade_partial
from .config import ExperimentConfig
from .depmap import (
    DependencyMap,
    block_local_map,
    derangements,
    expected_fixed_points,
    identity_map,
    linear_map,
    p_same,
    rewire_map,
)
from .entropy import ApEnParams, apen, apen_of_map
from .errors import InsufficientDataError, InvalidParameterError, NoTransitionError
from .graphs import Graph, generate, generate_square_lattice, giant_component, giant_fraction

__version__ = "0.1.0"
