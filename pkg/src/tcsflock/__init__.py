"""Multiscale thermomechanical Cucker-Smale simulations on the 1-D torus.

Model hierarchy covered: interacting two-species particle systems, scaled
kinetic equations solved by weighted particle characteristics, the background
hydrodynamic system solved by a staggered central scheme, and the limiting
macroscopic systems (strong and weak relaxation) solved by WENO5 transport
with an implicit linear velocity solve. A diagnostics layer checks
concentration rates, conservation laws, and the hydrodynamic limit.
"""

__version__ = "0.1.0"

from .backends import ACTIVE as kernel_backend
from .torus import (
    AggregationPotential,
    Grid1D,
    InfluenceFn,
    influence_row,
    gradient_row,
    periodic_convolve,
    torus_add,
    torus_dist,
    torus_disp,
    torus_neg,
    wrap,
)
from .kinetic import KineticCloud, ScalingRegime, sample_cloud
from .fluid import BackgroundRun, FluidState, make_state
from .macro import run_macro, solve_velocity, transport_step
from .diagnostics import (
    bounded_lipschitz,
    epsilon_sweep,
    fit_decay,
    order_parameter,
    wasserstein1_periodic,
)
from .config import ExperimentConfig, load_config
from .runner import check, run, sweep
