"""Stochastic reaction-diffusion dynamics on multi-well landscapes.

A toolkit for simulating a two-component reaction-diffusion system on a 1-D
interval whose reaction term is the gradient of a smoothed multi-well
potential, driven by additive spatially-correlated noise, together with the
diagnostics that make noise-induced basin transitions quantitative: exit
times, occupation fractions, stationary spread, quasi-potential barriers,
and path action.
"""

from .landscape import (
    Well,
    RawLandscape,
    MollifiedLandscape,
    LimitMeasure,
    build_landscape,
    mollify,
    potential_value,
    drift,
    hessian_dets,
    limit_measure,
    classify_basin,
)
from .noise import NoiseModel, NoiseIncrement, build_noise, white_noise, sample_increment, cholesky_oracle, stream
from .solver import Discretization, FieldState, SimConfig, build_discretization, em_step, simulate, simulate_ensemble
from .diagnostics import (
    Trajectory,
    TransitionEvent,
    OccupationReport,
    l2_average,
    classify_series,
    first_exit,
    occupation,
    transition_sequence,
    stationary_histogram,
)
from .largedev import (
    QuasiPotentialReport,
    ExitStudy,
    quasi_potential,
    barrier,
    action_functional,
    exit_rate_fit,
)

__version__ = "0.1.0"
