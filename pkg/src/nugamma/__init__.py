"""Certified enclosures for a threshold-exceedance functional on BV data.

The package measures, with guaranteed two-sided bounds, the weighted
mass of pairs whose increment beats a power-law threshold, follows that
mass along threshold sweeps towards its large-threshold limit, and
extends the evaluation to N-dimensional catalog fields by integrating
over line sections.
"""

from .asymptotics import (
    LimitVerdict,
    SweepResult,
    covering_select,
    gadget_cantor_measure,
    gadget_jump_measure,
    gadget_smooth_mass,
    lambda_sweep,
    limit_estimate,
    liminf_rhs,
    sbv_target,
    verify_sweep,
    write_sweep_csv,
)
from .bvmodel import (
    BVFunction1D,
    CantorPiece,
    JumpPiece,
    Piece,
    SmoothPiece,
    VariationTriple,
    affine_ramp,
    cantor_eval,
    cantor_piece,
    cantor_staircase,
    polynomial_piece,
    sine_ramp,
    single_jump,
    smoothstep_piece,
)
from .functional1d import (
    BoxVerdict,
    ExceedanceQuery,
    F_value,
    ZeroVariationError,
    classify_box,
    closed_form_jump_F,
    f_enclosures_batch,
    measure_exceedance,
    pair_increment_bounds,
    truncation_radius,
)
from .numeasure import (
    Enclosure,
    GammaParam,
    PlaneBox,
    kernel_mass,
    nu_curved,
    nu_quadrature_oracle,
    nu_slab,
    nu_triangle,
)
from .sectionnd import (
    AffineClampField,
    BallIndicatorField,
    FieldND,
    F_nd_estimate,
    MCEstimate,
    RadialPolynomialField,
    SectionLine,
    c_n_constant,
    extract_section,
    sectioning_variation_check,
    sphere_area,
    unit_ball_volume,
    variation_check_target,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # bvmodel
    "BVFunction1D",
    "CantorPiece",
    "JumpPiece",
    "Piece",
    "SmoothPiece",
    "VariationTriple",
    "affine_ramp",
    "cantor_eval",
    "cantor_piece",
    "cantor_staircase",
    "polynomial_piece",
    "sine_ramp",
    "single_jump",
    "smoothstep_piece",
    # numeasure
    "Enclosure",
    "GammaParam",
    "PlaneBox",
    "kernel_mass",
    "nu_curved",
    "nu_quadrature_oracle",
    "nu_slab",
    "nu_triangle",
    # functional1d
    "BoxVerdict",
    "ExceedanceQuery",
    "F_value",
    "ZeroVariationError",
    "classify_box",
    "closed_form_jump_F",
    "f_enclosures_batch",
    "measure_exceedance",
    "pair_increment_bounds",
    "truncation_radius",
    # asymptotics
    "LimitVerdict",
    "SweepResult",
    "covering_select",
    "gadget_cantor_measure",
    "gadget_jump_measure",
    "gadget_smooth_mass",
    "lambda_sweep",
    "limit_estimate",
    "liminf_rhs",
    "sbv_target",
    "verify_sweep",
    "write_sweep_csv",
    # sectionnd
    "AffineClampField",
    "BallIndicatorField",
    "FieldND",
    "F_nd_estimate",
    "MCEstimate",
    "RadialPolynomialField",
    "SectionLine",
    "c_n_constant",
    "extract_section",
    "sectioning_variation_check",
    "sphere_area",
    "unit_ball_volume",
    "variation_check_target",
]
