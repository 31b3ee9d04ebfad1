"""Local structure of planar self-affine sets: zooms, singular directions, tangents."""

from tangent_lens.symbolic import (
    BernoulliWeights,
    cylinder_measure,
    incomparable,
    make_rng,
    sample_word,
)
from tangent_lens.affine import (
    AffineMap2,
    IFSSystem,
    PointCloud,
    Address,
    attractor_sample,
    canonical_project,
    compose_along,
    cylinder_cover,
    strong_separation,
)
from tangent_lens.spectral import (
    SingularFrame,
    carpet_lyapunov,
    lyapunov_estimate,
    oseledets_direction,
    singular_frame,
)
from tangent_lens.screens import (
    ApproxScenery,
    Pattern,
    Screen,
    approx_scenery,
    construction_level,
    detect_pattern,
    epsilon_bound,
    scenery,
)
from tangent_lens.tangents import (
    TangentApprox,
    TraceRow,
    hausdorff_distance,
    modified_tangent,
    porosity_estimate,
)
from tangent_lens.conditions import (
    ConditionReport,
    check_carpet,
    check_line_condition,
    check_lyapunov_distinct,
    check_pinching,
    check_projection_sufficient,
    check_separation,
    check_twisting,
    forbidden_measure_bound,
)
from tangent_lens.config import RunConfig, load_config, parse_config, serialize

__version__ = "0.1.0"
