"""Graded Lagrangian curves on the flat torus: phases, flow, surgery and stability."""

from .torus import (
    STANDARD,
    GradedClass,
    TorusCY,
    exact_slope,
    graded_class,
    omega_integral,
    phase_and_slope,
    shift_grading,
)
from .curves import (
    DiscreteCurve,
    FlowDiagnostics,
    NotGradeable,
    RefinementRequired,
    average_phase,
    flux,
    maslov,
    moment_norm,
    swept_area,
    theta_lift_compute,
    weighted_metric,
)
from .flow import FlowConfig, FlowResult, mcf_step, run_flow
from .surgery import (
    GradedSumError,
    IntersectionPoint,
    NeckParameters,
    connect_sum,
    connect_sum_components,
    grading_compatible,
    intersections,
    neck_moduli_dimension,
)
from .stability import StabilityVerdict, enumerate_decompositions, is_stable
from .mirror import SheafClass, WallScenario, extension_wall, mirror_map, mukai_sum, sheaf_stable

__version__ = "0.1.0"
