"""Risk-aware UAV path planning for wilderness search and rescue."""

__version__ = "0.1.0"

from .errors import InvalidArgument, NumericalFailure, PlanningFailure, StageError  # noqa: E402,F401
from .terrain import TerrainGrid, generate_terrain  # noqa: E402,F401
from .lost_person import BeliefGrid, LostPersonParams, StartDistribution, simulate_heatmap  # noqa: E402,F401
from .searcher import Sector, SearcherParams, lawnmower_waypoints, simulate_searcher  # noqa: E402,F401
from .gp import GibbsKernelParams, MortonConfig, ObservationSet, posterior, sparse_posterior  # noqa: E402,F401
from .trajectory import TrajectorySet, fit_to_polyline  # noqa: E402,F401
from .risk import ObjectiveConfig, RiskObjective, RiskParams, risk_cost  # noqa: E402,F401
from .planner import NoFlyZone, rrt_plan, rrt_star_plan  # noqa: E402,F401
from .optimizer import OptimizerConfig, optimize  # noqa: E402,F401
