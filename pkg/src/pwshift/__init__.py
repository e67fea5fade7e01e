"""Piecewise smooth planar vector fields coded into countable-state shifts.

The package simulates the canonical two-branch switching field, codes its
trajectories into integer itineraries, and computes the symbolic side of the
picture at desk scale: Gurevich entropy and pressure of countable graphs,
first-return recurrence verdicts, Lyapunov drift certificates with geometric
mixing-time bounds, entropy at infinity and the resulting Hausdorff
dimension bounds.
"""

__version__ = "0.1.0"

from . import dimension, fields, graphs, markov, shift, thermo, trajectory  # noqa: F401
from .fields import canonical_field, classify_boundary_point, eval_field, lie_derivative  # noqa: F401
from .graphs import full_graph, two_way_path_graph, z_infinity_graph  # noqa: F401
from .shift import gurevich_entropy, sequence_distance  # noqa: F401
from .thermo import gurevich_pressure, neg_log_first_potential, zero_potential  # noqa: F401
from .trajectory import build_trajectory, integrate_flow, itinerary, time_one  # noqa: F401
