"""graspkit: synthetic grasp dataset generation and evaluation.

Top-down heightmap scenes are annotated with parallel-jaw grasp rectangles
by running deterministic simulated grasp trials, and predictions can be
scored either against those annotations (rectangle criterion) or by
replaying the trial itself, locally or over HTTP.
"""

__version__ = "0.1.0"

from .errors import (
    EmptyGroundTruthError,
    FormatError,
    GraspKitError,
    PlacementError,
)
from .grasp import (
    Grasp,
    GraspSet,
    RectCriterionConfig,
    angle_diff,
    batch_accuracy,
    iou,
    min_grasp_distance,
    normalize_angle,
    rect_corners,
    rect_match,
)
from .heightmap import (
    ObjectModel,
    load_object,
    rasterize_mesh,
    rescale_object,
    rescale_to,
    save_object,
)
from .scene import (
    CameraConfig,
    PlanarPose,
    Scene,
    render_depth,
    render_mask,
    settle,
)
from .simulate import (
    FailureReason,
    GripperConfig,
    TrialOutcome,
    simulate_grasp,
    snap_jaw_size,
    trial_all_jaw_sizes,
)
from .sampler import (
    SamplerConfig,
    edge_map,
    probability_map,
    sample_candidates,
    uniform_probability_map,
)
from .pipeline import (
    AnnotationEntry,
    AnnotationSet,
    Dataset,
    DedupConfig,
    LoadedScene,
    RunConfig,
    annotate_scene,
    dedup,
    derive_seed,
    generate_dataset,
    read_dataset,
)
from .storage import (
    DatasetManifest,
    SceneRecord,
    manifest_digest,
    read_grasp_lines,
    read_predictions,
    write_grasp_lines,
    write_predictions,
)
from .service import SubmissionLog, create_app, serve

__all__ = [
    "__version__",
    "EmptyGroundTruthError",
    "FormatError",
    "GraspKitError",
    "PlacementError",
    "Grasp",
    "GraspSet",
    "RectCriterionConfig",
    "angle_diff",
    "batch_accuracy",
    "iou",
    "min_grasp_distance",
    "normalize_angle",
    "rect_corners",
    "rect_match",
    "ObjectModel",
    "load_object",
    "rasterize_mesh",
    "rescale_object",
    "rescale_to",
    "save_object",
    "CameraConfig",
    "PlanarPose",
    "Scene",
    "render_depth",
    "render_mask",
    "settle",
    "FailureReason",
    "GripperConfig",
    "TrialOutcome",
    "simulate_grasp",
    "snap_jaw_size",
    "trial_all_jaw_sizes",
    "SamplerConfig",
    "edge_map",
    "probability_map",
    "sample_candidates",
    "uniform_probability_map",
    "AnnotationEntry",
    "AnnotationSet",
    "Dataset",
    "DedupConfig",
    "LoadedScene",
    "RunConfig",
    "annotate_scene",
    "dedup",
    "derive_seed",
    "generate_dataset",
    "read_dataset",
    "DatasetManifest",
    "SceneRecord",
    "manifest_digest",
    "read_grasp_lines",
    "read_predictions",
    "write_grasp_lines",
    "write_predictions",
    "SubmissionLog",
    "create_app",
    "serve",
]
