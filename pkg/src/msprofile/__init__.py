"""Motion-sickness-aware speed profiles along a fixed path.

Receding-horizon optimisation of the longitudinal jerk of a point-mass
vehicle, with an optional motion-sickness term in the running cost.
"""

from ._accel import backend
from .costs import CostKind, CostSpec, stage_cost
from .dynamics import Limits, TrajectoryTrace, VehicleState, ControlInput, step_spatial
from .errors import (InvalidInputError, MissionInfeasibleError, MsProfileError,
                     NLPEvaluationError, SolverFailureError)
from .geometry import PathSpline, SyntheticRoadSpec, fit_spline, generate_synthetic_road, load_road
from .harness import RunMatrix, cross_metric_report, reference_matrix_rows, pareto_report, run_matrix
from .mpc import MissionResult, MpcConfig, receding_loop, solve_horizon
from .nlp import solve_nlp
from .qp import solve_qp
from .sickness import ConflictModelParams, SicknessState, evaluate_trace

__version__ = "0.1.0"

__all__ = [
    "backend", "CostKind", "CostSpec", "stage_cost", "Limits", "TrajectoryTrace", "VehicleState",
    "ControlInput", "step_spatial", "InvalidInputError", "MissionInfeasibleError", "MsProfileError",
    "NLPEvaluationError", "SolverFailureError", "PathSpline", "SyntheticRoadSpec", "fit_spline",
    "generate_synthetic_road", "load_road", "RunMatrix", "cross_metric_report", "reference_matrix_rows",
    "pareto_report", "run_matrix", "MissionResult", "MpcConfig", "receding_loop", "solve_horizon",
    "solve_nlp", "solve_qp", "ConflictModelParams", "SicknessState", "evaluate_trace",
]
