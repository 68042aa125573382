"""Encode output properties as verification problems over a single network.

Each builder produces a :class:`VerificationProblem`: a (possibly stacked and
affine-folded) network over free box variables ``u`` and the shared latent
``z``, together with the linear specification ``(c, d)`` and the violation
threshold ``epsilon``.  The violation event is ``c^T f(u, z) + d >= 0``
(non-strict: boundary points count as violations).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import DecoderModel, LinearLayer, ReluLayer, model_digest


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape:
            raise ValueError(f"box lower/upper shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class AffineInputMap:
    """Stacked conditioning input = T @ u + t for free variables u."""

    T: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "T", np.asarray(self.T, dtype=np.float64))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.float64))
        if self.T.ndim != 2 or self.t.ndim != 1 or self.T.shape[0] != self.t.shape[0]:
            raise ValueError("affine map shapes inconsistent")


@dataclass(frozen=True)
class VerificationProblem:
    network: DecoderModel
    c: np.ndarray
    d: float
    free_box: Box
    epsilon: float
    copies: int = 1
    model_digest: str = ""
    spec_descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=np.float64))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", float(self.d))
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if c.shape[0] != self.network.out_dim:
            raise ValueError(
                f"c has length {c.shape[0]} but network out_dim is {self.network.out_dim}"
            )
        if self.free_box.dim != self.network.x_dim:
            raise ValueError(
                f"free box dim {self.free_box.dim} != network conditioning dim "
                f"{self.network.x_dim}"
            )

    def spec_digest(self) -> str:
        canon = json.dumps(self.spec_descriptor, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def violation_value(self, u, z) -> float:
        """c^T f(u, z) + d; >= 0 is a violation."""
        from .model import forward

        return float(self.c @ forward(self.network, u, z) + self.d)


def stack_network(model: DecoderModel, copies: int) -> DecoderModel:
    """Replicate the network over `copies` conditioning inputs sharing one z.

    The first layer keeps a single latent block (replicated rows); the
    conditioning block and all later linear layers become block-diagonal.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if copies == 1:
        return model
    layers: list = []
    first = model.layers[0]
    Wx = first.W[:, : model.x_dim]
    Wz = first.W[:, model.x_dim :]
    Wx_s = scipy.linalg.block_diag(*[Wx] * copies)
    Wz_s = np.vstack([Wz] * copies)
    b_s = np.tile(first.b, copies)
    layers.append(LinearLayer(np.hstack([Wx_s, Wz_s]), b_s))
    for layer in model.layers[1:]:
        if isinstance(layer, ReluLayer):
            layers.append(ReluLayer())
        else:
            layers.append(
                LinearLayer(scipy.linalg.block_diag(*[layer.W] * copies), np.tile(layer.b, copies))
            )
    return DecoderModel(model.x_dim * copies, model.z_dim, tuple(layers))


def fold_affine_input(model: DecoderModel, amap: AffineInputMap) -> DecoderModel:
    """Substitute x = T u + t into the first layer, exactly.

    Returns a model over free variables u with forward'(u, z) = forward(Tu+t, z).
    """
    if amap.T.shape[0] != model.x_dim:
        raise ValueError(
            f"affine map produces {amap.T.shape[0]} conditioning values, "
            f"model expects {model.x_dim}"
        )
    first = model.layers[0]
    Wx = first.W[:, : model.x_dim]
    Wz = first.W[:, model.x_dim :]
    W_new = np.hstack([Wx @ amap.T, Wz])
    b_new = first.b + Wx @ amap.t
    layers = (LinearLayer(W_new, b_new),) + model.layers[1:]
    return DecoderModel(amap.T.shape[1], model.z_dim, layers)


def build_bounded_above(model: DecoderModel, a: float, x_box: Box, epsilon: float) -> VerificationProblem:
    """Violation event: f(x, z) - a >= 0, i.e. the output exceeds a."""
    if model.out_dim != 1:
        raise ValueError("bounded_above requires a scalar-output model")
    return VerificationProblem(
        network=model,
        c=np.array([1.0]),
        d=-float(a),
        free_box=x_box,
        epsilon=epsilon,
        copies=1,
        model_digest=model_digest(model),
        spec_descriptor={
            "property": "bounded_above",
            "a": float(a),
            "x_box": {"lower": x_box.lower.tolist(), "upper": x_box.upper.tolist()},
            "epsilon": float(epsilon),
        },
    )


def build_bounded_below(model: DecoderModel, b: float, x_box: Box, epsilon: float) -> VerificationProblem:
    """Violation event: b - f(x, z) >= 0, i.e. the output drops to or below b."""
    if model.out_dim != 1:
        raise ValueError("bounded_below requires a scalar-output model")
    return VerificationProblem(
        network=model,
        c=np.array([-1.0]),
        d=float(b),
        free_box=x_box,
        epsilon=epsilon,
        copies=1,
        model_digest=model_digest(model),
        spec_descriptor={
            "property": "bounded_below",
            "b": float(b),
            "x_box": {"lower": x_box.lower.tolist(), "upper": x_box.upper.tolist()},
            "epsilon": float(epsilon),
        },
    )


def build_monotonicity(
    model: DecoderModel, x1_box: Box, gap_max: float, epsilon: float
) -> VerificationProblem:
    """Violation event: f(x1, z) - f(x2, z) >= 0 for some x1 <= x2.

    The constrained pair set {x1 <= x2} is not a box, so we substitute
    x2 = x1 + s with s in [0, gap_max]; the free variables are u = (x1, s).
    The substitution is exact, not a relaxation.
    """
    if model.x_dim != 1:
        raise ValueError("monotonicity supports scalar conditioning inputs only")
    if model.out_dim != 1:
        raise ValueError("monotonicity requires a scalar-output model")
    if gap_max < 0:
        raise ValueError("gap_max must be >= 0")
    stacked = stack_network(model, 2)
    amap = AffineInputMap(T=np.array([[1.0, 0.0], [1.0, 1.0]]), t=np.zeros(2))
    network = fold_affine_input(stacked, amap)
    free_box = Box(
        lower=np.array([x1_box.lower[0], 0.0]),
        upper=np.array([x1_box.upper[0], float(gap_max)]),
    )
    return VerificationProblem(
        network=network,
        c=np.array([1.0, -1.0]),
        d=0.0,
        free_box=free_box,
        epsilon=epsilon,
        copies=2,
        model_digest=model_digest(model),
        spec_descriptor={
            "property": "monotonicity",
            "x_box": {"lower": x1_box.lower.tolist(), "upper": x1_box.upper.tolist()},
            "gap_max": float(gap_max),
            "epsilon": float(epsilon),
        },
    )


def build_midpoint_convexity(
    model: DecoderModel, x1_box: Box, x2_box: Box | None, epsilon: float
) -> VerificationProblem:
    """Violation event: (f(x1,z) + f(x2,z))/2 - f((x1+x2)/2, z) >= 0.

    Free variables u = (x1, x2); the third stacked input is their midpoint.
    """
    if model.out_dim != 1:
        raise ValueError("midpoint_convexity requires a scalar-output model")
    if x2_box is None:
        x2_box = x1_box
    n = model.x_dim
    if x1_box.dim != n or x2_box.dim != n:
        raise ValueError("input boxes must match the model conditioning dimension")
    stacked = stack_network(model, 3)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    T = np.vstack(
        [
            np.hstack([eye, zero]),
            np.hstack([zero, eye]),
            np.hstack([eye / 2.0, eye / 2.0]),
        ]
    )
    network = fold_affine_input(stacked, AffineInputMap(T=T, t=np.zeros(3 * n)))
    free_box = Box(
        lower=np.concatenate([x1_box.lower, x2_box.lower]),
        upper=np.concatenate([x1_box.upper, x2_box.upper]),
    )
    return VerificationProblem(
        network=network,
        c=np.array([0.5, 0.5, -1.0]),
        d=0.0,
        free_box=free_box,
        epsilon=epsilon,
        copies=3,
        model_digest=model_digest(model),
        spec_descriptor={
            "property": "midpoint_convexity",
            "x_box": {"lower": x1_box.lower.tolist(), "upper": x1_box.upper.tolist()},
            "x2_box": {"lower": x2_box.lower.tolist(), "upper": x2_box.upper.tolist()},
            "epsilon": float(epsilon),
        },
    )


class SpecFormatError(ValueError):
    """Raised when a spec file cannot be parsed into a problem."""


def load_spec(path, model: DecoderModel) -> VerificationProblem:
    """Build a VerificationProblem from a JSON spec file.

    Schema: {"property": ..., "a"|"b": number?, "x_box": {"lower": [...],
    "upper": [...]}, "x2_box": {...}?, "gap_max": number?, "epsilon": number}
    """
    if hasattr(path, "read"):
        obj = json.load(path)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    try:
        prop = obj["property"]
        epsilon = float(obj["epsilon"])
        x_box = Box(lower=obj["x_box"]["lower"], upper=obj["x_box"]["upper"])
    except (KeyError, TypeError) as exc:
        raise SpecFormatError(f"spec file missing required field: {exc}") from exc

    if prop == "bounded_above":
        if "a" not in obj:
            raise SpecFormatError("bounded_above spec requires field 'a'")
        return build_bounded_above(model, float(obj["a"]), x_box, epsilon)
    if prop == "bounded_below":
        if "b" not in obj:
            raise SpecFormatError("bounded_below spec requires field 'b'")
        return build_bounded_below(model, float(obj["b"]), x_box, epsilon)
    if prop == "monotonicity":
        gap = float(obj.get("gap_max", x_box.upper[0] - x_box.lower[0]))
        return build_monotonicity(model, x_box, gap, epsilon)
    if prop == "midpoint_convexity":
        x2 = obj.get("x2_box")
        x2_box = Box(lower=x2["lower"], upper=x2["upper"]) if x2 else None
        return build_midpoint_convexity(model, x_box, x2_box, epsilon)
    raise SpecFormatError(f"unknown property {prop!r}")
