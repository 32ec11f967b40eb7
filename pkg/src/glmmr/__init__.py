"""GLM-MHD finite volumes with cell-average multiresolution on a graded quadtree."""
from .errors import GlmMhdError
from .fv import FvSolver, TimeController, UniformGrid
from .mr import MrSolver, QuadtreeMesh, ThresholdPolicy
from .physics import GlmParams
from .problems import PROBLEMS, get_problem
from .runner import RunConfig, compare, run

__all__ = [
    "FvSolver", "GlmMhdError", "GlmParams", "MrSolver", "PROBLEMS", "QuadtreeMesh",
    "RunConfig", "ThresholdPolicy", "TimeController", "UniformGrid", "compare",
    "get_problem", "run",
]
__version__ = "0.1.0"
