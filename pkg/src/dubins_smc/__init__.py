"""Robust sliding-mode path tracking for Dubins vehicles under bounded
multiplicative disturbances, with numerical invariance and convergence
certificates."""
from .controller import (ControllerParams, InfeasibleBoundsError, ParameterError, audit, control, feasible,
                         min_p, min_path_radius, benchmark_params, q_window, synthesize)
from .frenet import TransverseState, from_transverse, to_transverse, transverse_rates
from .invariant import (InvariantSetSpec, attractiveness_certificate, classify_region, contains,
                        nagumo_certificate)
from .plant import DisturbanceBounds, DisturbanceSignal, Pose, integrate_step
from .refpath import ReferencePath, circle, line, benchmark_path, project, validate_assumptions
from .sim import Scenario, SimLog, benchmark_suite, build_benchmark_path, run, run_batch

__version__ = "0.1.0"
