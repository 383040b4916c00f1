"""Static figures for rolling-disk billiard runs.

Consumes only the simulator's documented CSV/JSON outputs; no in-process
coupling to the simulation library.
"""

from .figures import MARKER_BOUNDARY_TOL, PlotSpec, plot_ensemble, plot_trajectory
from .io import PlotDataError, find_snapshots, read_events, read_run_geometry, read_snapshot, read_trajectory

__version__ = "0.1.0"
