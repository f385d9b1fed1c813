"""Sub-Laplacian toolkit: scaling data, X-balls and mean values, heat
semigroups, fractional powers and the extension problem."""
from .errors import *  # noqa: F401,F403
from .models import ModelKind, ModelSpace, fundamental_solution, heat_kernel
from .nsw import ScalingData
from .testfunctions import TestFunction
from .fractional import FracParams, TailBoundMode, balakrishnan, riesz_apply
from .extension import ExtensionPoint, dtn_trace, solve_extension

__version__ = "0.1.0"
