"""Numerical engine for connections on fibre bundles over coordinate patches.

Expression-defined fields, finite-difference Lie calculus, connection
coefficient transformations, RK4 parallel transport and geodesics, covariant
derivatives, curvature, flatness certification, and bundle morphisms.
"""

from .calculus import (
    CurvatureValues,
    DualSectionField,
    SectionField,
    covariant_derivative,
    curvature,
    curvature_commutator_oracle,
    curvature_general_frame,
    dual_covariant_derivative,
    fibre_curvature_general,
    flat_fundamental_matrix,
    horizontal_lift,
    is_flat,
    nabla_hat_oracle,
    vertical_lift,
)
from .connection import (
    AffineCoefficients,
    CoefficientField3,
    CoordinateChange,
    FrameChange,
    TwoIndexField,
    adapted_frame_matrix,
    fibre_coefficients,
    transform_inhomogeneous,
    transform_three_index,
    transform_two_index,
    two_index_from_affine,
    two_index_from_linear,
)
from .errors import (
    ConfigError,
    DomainExit,
    EngineError,
    NonFinite,
    NotFlat,
    ParseError,
    SingularFrame,
    SingularJacobian,
    StepCountTooSmall,
    UnboundVariable,
)
from .exprlang import evaluate, parse
from .fields import (
    FrameField,
    MatrixField,
    Region,
    ScalarField,
    anholonomy,
    compose_frame,
    lie_derivative,
    lie_gamma,
)
from .morphism import (
    BundleMorphism,
    compose,
    jacobi_adapted,
    jacobi_natural,
    preserves_connection,
    tangent_map_second_order,
    vb_morphism_coeffs,
)
from .registry import REGISTRY
from .transport import (
    PathSpec,
    TransportResult,
    covariant_derivative_limit,
    fundamental_solution,
    geodesic,
    transport_affine,
    transport_general,
    transport_linear,
)

__version__ = "0.1.0"

__all__ = [
    "AffineCoefficients",
    "BundleMorphism",
    "CoefficientField3",
    "ConfigError",
    "CoordinateChange",
    "CurvatureValues",
    "DomainExit",
    "DualSectionField",
    "EngineError",
    "FrameChange",
    "FrameField",
    "MatrixField",
    "NonFinite",
    "NotFlat",
    "ParseError",
    "PathSpec",
    "REGISTRY",
    "Region",
    "ScalarField",
    "SectionField",
    "SingularFrame",
    "SingularJacobian",
    "StepCountTooSmall",
    "TransportResult",
    "TwoIndexField",
    "UnboundVariable",
    "__version__",
    "adapted_frame_matrix",
    "anholonomy",
    "compose",
    "compose_frame",
    "covariant_derivative",
    "covariant_derivative_limit",
    "curvature",
    "curvature_commutator_oracle",
    "curvature_general_frame",
    "dual_covariant_derivative",
    "evaluate",
    "fibre_coefficients",
    "fibre_curvature_general",
    "flat_fundamental_matrix",
    "fundamental_solution",
    "geodesic",
    "horizontal_lift",
    "is_flat",
    "jacobi_adapted",
    "jacobi_natural",
    "lie_derivative",
    "lie_gamma",
    "nabla_hat_oracle",
    "parse",
    "preserves_connection",
    "tangent_map_second_order",
    "transform_inhomogeneous",
    "transform_three_index",
    "transform_two_index",
    "transport_affine",
    "transport_general",
    "transport_linear",
    "two_index_from_affine",
    "two_index_from_linear",
    "vb_morphism_coeffs",
    "vertical_lift",
]
