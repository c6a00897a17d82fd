"""Hard-to-approximate convex bodies from quasi-orthogonal designs.

The package builds scaled Gaussian vector systems whose pairwise inner
products are uniformly small, forms the convex bodies they generate
(symmetric hulls, their ball regularizations and polars, and the lifted
two-parameter family K(eta, kappa)), and exposes certified membership,
support, and gauge oracles for all of them. On top of the oracles sit
Monte Carlo estimators (widths, volumes, barycenters), separation and
covering certificates quantifying how many vertices any approximating
polytope must carry, and the axis-shift polarity map closing the family
under duality.
"""

from .approx import RatioEstimate, greedy_polytope, random_vertex_polytope, sandwich_ratio
from .bodies import (
    BodyDescriptor,
    BodyOracle,
    HardBodyParams,
    LiftedPoint,
    Membership,
    ball_oracle,
    box_oracle,
    build_k_eta_kappa,
    build_q,
    build_qt,
    build_qt_polar,
    cone_oracle,
    cross_section,
    from_halfspaces,
    scale_oracle,
    shift_oracle,
)
from .centers import (
    GAMMA_G_THRESHOLD,
    CenterEstimate,
    CenterMethod,
    ConeVolumeKind,
    cone_volume_closed_form,
    cone_volume_quadrature,
    estimate_barycenter,
    estimate_santalo,
    gamma_g_check,
    grunbaum_check,
)
from .design import (
    DesignConfig,
    DesignReport,
    Mode,
    QuasiOrthogonalSystem,
    design_from_json,
    design_to_json,
    generate_design,
    tail_probability,
    verify_design,
)
from .errors import (
    CenterNotInterior,
    ChordDegenerate,
    ContainmentViolated,
    DimensionTooLarge,
    EtaTooLarge,
    EtaZero,
    HardBodyError,
    HOutOfRange,
    InvalidConfig,
    IterationLimit,
    NonPositiveT,
    NonUnitDirection,
    NotInBody,
    OriginNotInterior,
    RootNotBracketed,
    StartNotInterior,
)
from .hardness import (
    CandidatePolytope,
    CoveringCertificate,
    CoveringConclusion,
    HardnessConstants,
    SandwichReport,
    SeparationReport,
    TestVectorPair,
    VertexDecomposition,
    covering_certificate,
    decompose_vertex,
    hardness_constants,
    separation_report,
    test_vectors,
    verify_sandwich,
)
from .polarity import (
    DualCountReport,
    PolarShiftCheck,
    PolarShiftResult,
    dual_count,
    polar_oracle,
    polar_shift,
    verify_polar_shift,
)
from .sampling import (
    ChainConfig,
    Estimate,
    effective_sample_size,
    hit_and_run,
    mean_width,
    urysohn_bound,
    volume_mc,
    volume_ratio_qt_polar,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # design
    "Mode", "DesignConfig", "QuasiOrthogonalSystem", "DesignReport",
    "generate_design", "verify_design", "tail_probability",
    "design_to_json", "design_from_json",
    # bodies
    "Membership", "LiftedPoint", "BodyDescriptor", "BodyOracle",
    "HardBodyParams", "build_q", "build_qt", "build_qt_polar",
    "cross_section", "build_k_eta_kappa", "cone_oracle", "ball_oracle",
    "box_oracle", "from_halfspaces", "scale_oracle", "shift_oracle",
    # sampling
    "Estimate", "ChainConfig", "hit_and_run", "effective_sample_size",
    "mean_width", "volume_mc", "volume_ratio_qt_polar", "urysohn_bound",
    # centers
    "GAMMA_G_THRESHOLD", "CenterMethod", "CenterEstimate", "ConeVolumeKind",
    "estimate_barycenter", "grunbaum_check", "cone_volume_closed_form",
    "cone_volume_quadrature", "estimate_santalo", "gamma_g_check",
    # hardness
    "TestVectorPair", "SeparationReport", "VertexDecomposition",
    "CandidatePolytope", "CoveringConclusion", "CoveringCertificate",
    "SandwichReport", "HardnessConstants", "test_vectors",
    "separation_report", "decompose_vertex", "covering_certificate",
    "verify_sandwich", "hardness_constants",
    # polarity
    "PolarShiftResult", "PolarShiftCheck", "DualCountReport", "polar_shift",
    "polar_oracle", "verify_polar_shift", "dual_count",
    # approx
    "RatioEstimate", "random_vertex_polytope", "greedy_polytope",
    "sandwich_ratio",
    # errors
    "HardBodyError", "InvalidConfig", "NonUnitDirection", "IterationLimit",
    "NonPositiveT", "EtaTooLarge", "EtaZero", "NotInBody", "HOutOfRange",
    "OriginNotInterior", "DimensionTooLarge", "CenterNotInterior",
    "StartNotInterior", "ChordDegenerate", "ContainmentViolated",
    "RootNotBracketed",
]
