"""Motion estimation from event-camera streams by sharpness maximization.

The estimator warps events along candidate point trajectories, scores the
sharpness of the resulting image of warped events, and counteracts the
degenerate sharpness maxima (event collapse) with a geometric penalty on the
rate of area change of the warp — plus slower event-based baselines for
comparison.
"""

from .events import (
    CameraGeometry,
    Event,
    EventFormatError,
    EventWindow,
    IngestReport,
    load_events,
    normalize_time,
    slice_by_count,
    slice_by_duration,
    write_events,
)
from .gridio import normalize_to_u8, read_grid_csv, read_pgm, write_grid_csv, write_pgm
from .iwe import Iwe, Objective, ObjectiveKind, build_iwe, objective_value, splat
from .metrics import (
    GroundTruthFlow,
    MetricsReport,
    aee_npe,
    fwl,
    read_flow_text,
    rms_angular_velocity,
    time_to_contact,
    write_flow_text,
)
from .optimizer import (
    COLLAPSE_THRESHOLD,
    DEFAULT_LAMBDA,
    CompositeProblem,
    SolveReport,
    composite_value,
    default_bounds,
    landscape_sweep,
    minimize_box,
    solve,
)
from .regularizers import (
    DeformationMap,
    RegKind,
    RegularizerOptions,
    deformation_map_3dof,
    rate_map,
    reg_event_based,
    reg_geometric,
    reg_translation_2dof,
    reg_zoom_1dof,
)
from .synth import SceneSpec, generate, generate_velocity_stream, velocity_scene
from .warps import (
    DOF_BY_KIND,
    FlowField,
    SingularWarpError,
    WarpKind,
    WarpModel,
    displacement_field,
    flow_field,
    incremental_jacobian_det,
    rate_of_area_change,
    so3_exp,
    trajectory_point,
    warp_event,
)

__version__ = "0.1.0"

__all__ = [
    "CameraGeometry",
    "Event",
    "EventFormatError",
    "EventWindow",
    "IngestReport",
    "load_events",
    "normalize_time",
    "slice_by_count",
    "slice_by_duration",
    "write_events",
    "normalize_to_u8",
    "read_grid_csv",
    "read_pgm",
    "write_grid_csv",
    "write_pgm",
    "Iwe",
    "Objective",
    "ObjectiveKind",
    "build_iwe",
    "objective_value",
    "splat",
    "GroundTruthFlow",
    "MetricsReport",
    "aee_npe",
    "fwl",
    "read_flow_text",
    "rms_angular_velocity",
    "time_to_contact",
    "write_flow_text",
    "COLLAPSE_THRESHOLD",
    "DEFAULT_LAMBDA",
    "CompositeProblem",
    "SolveReport",
    "composite_value",
    "default_bounds",
    "landscape_sweep",
    "minimize_box",
    "solve",
    "DeformationMap",
    "RegKind",
    "RegularizerOptions",
    "deformation_map_3dof",
    "rate_map",
    "reg_event_based",
    "reg_geometric",
    "reg_translation_2dof",
    "reg_zoom_1dof",
    "SceneSpec",
    "generate",
    "generate_velocity_stream",
    "velocity_scene",
    "DOF_BY_KIND",
    "FlowField",
    "SingularWarpError",
    "WarpKind",
    "WarpModel",
    "displacement_field",
    "flow_field",
    "incremental_jacobian_det",
    "rate_of_area_change",
    "so3_exp",
    "trajectory_point",
    "warp_event",
    "__version__",
]
