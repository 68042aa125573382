"""Dual function evaluation and the certified probability bound.

The dual value G(lambda, z) = g(lambda) + zeta^T z upper-bounds the
specification expression for every u in the free box and z in the latent box
(weak duality).  Since zeta^T z is Gaussian with standard deviation ||zeta||,
P(G >= 0) has a closed erfc form, and adding the latent-box complement
probability yields a bound on the violation probability that is valid for
ANY multipliers and any latent box.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .intervals import IntervalBounds, LatentBox
from .packing import PackedProblem, pack_problem
from .specs import VerificationProblem

SQRT2 = 1.4142135623730951
DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class DualVariables:
    """One multiplier vector per intermediate layer (may be empty)."""

    lambdas: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "lambdas",
            tuple(np.atleast_1d(np.asarray(l, dtype=np.float64)) for l in self.lambdas),
        )

    @classmethod
    def zeros(cls, problem: VerificationProblem) -> "DualVariables":
        packed = pack_problem(problem)
        sizes = np.diff(packed.seg_off)[: packed.n_layers - 1]
        return cls(tuple(np.zeros(int(n)) for n in sizes))


@dataclass(frozen=True)
class Certificate:
    """The certified violation-probability bound with its components."""

    bound: float
    erfc_term: float
    tail_term: float
    g_value: float
    latent_coeff_norm: float
    alpha: np.ndarray
    beta: np.ndarray
    steps_taken: int
    model_digest: str = ""
    spec_digest: str = ""

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "erfc_term": self.erfc_term,
            "tail_term": self.tail_term,
            "g": self.g_value,
            "coeff_norm": self.latent_coeff_norm,
            "alpha": np.asarray(self.alpha).tolist(),
            "beta": np.asarray(self.beta).tolist(),
            "steps": self.steps_taken,
            "model_digest": self.model_digest,
            "spec_digest": self.spec_digest,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, obj: dict) -> "Certificate":
        return cls(
            bound=float(obj["bound"]),
            erfc_term=float(obj["erfc_term"]),
            tail_term=float(obj["tail_term"]),
            g_value=float(obj["g"]),
            latent_coeff_norm=float(obj["coeff_norm"]),
            alpha=np.asarray(obj["alpha"], dtype=np.float64),
            beta=np.asarray(obj["beta"], dtype=np.float64),
            steps_taken=int(obj["steps"]),
            model_digest=obj.get("model_digest", ""),
            spec_digest=obj.get("spec_digest", ""),
        )

    @classmethod
    def load(cls, path) -> "Certificate":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def relu_conjugate_max(nu: float, lam: float, l: float, u: float) -> float:
    """max over x in [l, u] of nu * relu(x) - lam * x, exactly.

    The objective is piecewise linear with one breakpoint, so the maximum is
    attained at l, u, or (when the box straddles it) 0.
    """
    if l > u:
        raise ValueError("requires l <= u")
    best = nu * max(l, 0.0) - lam * l
    if l < 0.0 < u and 0.0 >= best:
        best = 0.0
    v_u = nu * max(u, 0.0) - lam * u
    if v_u >= best:
        best = v_u
    return best


def input_term(nu0: np.ndarray, l0: np.ndarray, u0: np.ndarray) -> float:
    """max over the input box of nu0^T x: each coordinate picks its endpoint."""
    nu0 = np.asarray(nu0, dtype=np.float64)
    l0 = np.asarray(l0, dtype=np.float64)
    u0 = np.asarray(u0, dtype=np.float64)
    if np.any(l0 > u0):
        raise ValueError("requires l0 <= u0")
    return float(np.sum(np.maximum(nu0 * l0, nu0 * u0)))


def _lam_all(packed: PackedProblem, problem: VerificationProblem, duals: DualVariables):
    lam_free = packed.pack_duals(duals.lambdas)
    return np.concatenate([lam_free, problem.c]), lam_free


def latent_coefficient(problem: VerificationProblem, duals: DualVariables) -> np.ndarray:
    """Coefficient of z inside the dual value: latent block transposed times
    the first multiplier (the spec coefficients themselves when the network
    has no intermediate layers)."""
    net = problem.network
    Wz = net.layers[0].W[:, net.x_dim :]
    lam0 = problem.c if len(duals.lambdas) == 0 else duals.lambdas[0]
    return Wz.T @ lam0


def _bounds_flat(packed: PackedProblem, bounds: IntervalBounds):
    return np.concatenate(bounds.lower), np.concatenate(bounds.upper)


def dual_value_deterministic(
    problem: VerificationProblem, duals: DualVariables, bounds: IntervalBounds
) -> float:
    """The z-free part of the dual value: G(lambda, z) = g + zeta^T z."""
    packed = pack_problem(problem)
    lam_all, _ = _lam_all(packed, problem, duals)
    l_flat, u_flat = _bounds_flat(packed, bounds)
    g, _zeta, _x0, _xs, _codes = kernels.dual_terms(packed.tup, l_flat, u_flat, lam_all)
    return float(g)


def dual_value_at(
    problem: VerificationProblem,
    duals: DualVariables,
    bounds: IntervalBounds,
    z,
) -> float:
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    g = dual_value_deterministic(problem, duals, bounds)
    zeta = latent_coefficient(problem, duals)
    return float(g + zeta @ z)


def gaussian_tail(g: float, coeff_norm: float) -> float:
    """P(zeta^T z >= -g) for z standard normal with ||zeta|| = coeff_norm.

    Degenerate coefficient: the dual value is deterministic, so the
    probability is the indicator of g >= 0.
    """
    if coeff_norm < 0:
        raise ValueError("coeff_norm must be >= 0")
    if coeff_norm < DEGENERATE_NORM:
        return 1.0 if g >= 0.0 else 0.0
    return 0.5 * math.erfc(-g / (SQRT2 * coeff_norm))


def box_complement_probability(latent: LatentBox) -> float:
    """P(z outside [alpha, beta]) for independent standard normal coordinates."""
    alpha, beta = latent.alpha, latent.beta
    keep = 1.0
    for i in range(alpha.shape[0]):
        keep *= 0.5 * math.erfc(-beta[i] / SQRT2) - 0.5 * math.erfc(-alpha[i] / SQRT2)
    return 1.0 - keep


def assemble_bound(
    problem: VerificationProblem,
    duals: DualVariables,
    latent: LatentBox,
    steps_taken: int = 0,
    packed: PackedProblem | None = None,
) -> Certificate:
    """Recompute bounds for the latent box and assemble the certified bound.

    Sound for any multipliers and any latent box with alpha <= beta; the
    choice affects tightness only.
    """
    if packed is None:
        packed = pack_problem(problem)
    lam_all, lam_free = _lam_all(packed, problem, duals)
    obj, erfc_term, tail_term, g, s = kernels.objective_value(
        packed.tup, lam_free, latent.alpha, latent.eta
    )
    if not math.isfinite(obj):
        raise OverflowError("bound assembly produced a non-finite value")
    return Certificate(
        bound=min(1.0, float(obj)),
        erfc_term=float(erfc_term),
        tail_term=float(tail_term),
        g_value=float(g),
        latent_coeff_norm=float(s),
        alpha=latent.alpha.copy(),
        beta=latent.beta.copy(),
        steps_taken=steps_taken,
        model_digest=problem.model_digest,
        spec_digest=problem.spec_digest(),
    )
