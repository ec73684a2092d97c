"""Two-view relative pose estimation from point matches with monocular depth
priors: minimal solvers that jointly recover pose plus depth scale/shift,
an LO-RANSAC robust estimator, and a synthetic benchmark harness.
"""

from .geometry import (
    CameraIntrinsics,
    Correspondence,
    DepthAffineParams,
    EliminationSystem,
    ImagePoint,
    Pose,
    PoseCandidate,
    Rotation,
    lift_point,
    normalize_point,
)
from .smallmath import (
    DegenerateGeometryError,
    QuadraticPoly,
    eig_real_small,
    gauss_jordan,
    rigid_align,
    solve_quartic,
)
from .solvers import (
    SOLVERS,
    DegenerateSampleError,
    MinimalSample,
    solve_3pt_s00_f,
    solve_3pt_s00_f12,
    solve_3pt_suv,
    solve_4pt_suv_f,
    solve_4pt_suv_f12,
    solve_7pt,
    solve_minimal,
    solve_p3p,
)
from .robust import (
    EstimateReport,
    PureRotationError,
    RansacConfig,
    essential_from_pose,
    fundamental_from,
    local_optimize,
    pose_from_fundamental,
    ransac_estimate,
    sampson_error,
    score_msac,
)
from .synthbench import (
    BenchCell,
    DepthCorruption,
    SceneConfig,
    ScenePair,
    focal_error,
    focal_error_two,
    generate_scene,
    mean_average_accuracy,
    pose_error,
    rotation_error_deg,
    run_benchmark,
    translation_error_deg,
)
from .estimator import RelativePoseRansac, validate_matches

__version__ = "0.1.0"
