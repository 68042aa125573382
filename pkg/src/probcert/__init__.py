"""Certified probability bounds for decoder networks with Gaussian latents."""

from .dual import (
    Certificate,
    DualVariables,
    assemble_bound,
    box_complement_probability,
    dual_value_at,
    dual_value_deterministic,
    gaussian_tail,
    input_term,
    latent_coefficient,
    relu_conjugate_max,
)
from .intervals import IntervalBounds, LatentBox, propagate
from .model import (
    DecoderModel,
    LinearLayer,
    ModelFormatError,
    ReluLayer,
    forward,
    forward_batch,
    load_model,
    model_digest,
    save_model,
    validate,
)
from .optimize import OptimizerConfig, init_duals, gradient, optimize
from .oracles import ViolationEstimate, grid_max_violation, mc_violation, quadrature_violation
from .specs import (
    AffineInputMap,
    Box,
    SpecFormatError,
    VerificationProblem,
    build_bounded_above,
    build_bounded_below,
    build_midpoint_convexity,
    build_monotonicity,
    fold_affine_input,
    load_spec,
    stack_network,
)

__version__ = "0.1.0"
