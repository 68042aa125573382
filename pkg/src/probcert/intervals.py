"""Per-layer interval bounds conditioned on the latent box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .packing import PackedProblem, pack_problem
from .specs import VerificationProblem


@dataclass(frozen=True)
class LatentBox:
    """Latent conditioning region [alpha, beta] with beta = alpha + eta^2."""

    alpha: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64))
        e = np.atleast_1d(np.asarray(self.eta, dtype=np.float64))
        if a.shape != e.shape:
            raise ValueError("alpha and eta must have the same shape")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "eta", e)

    @property
    def beta(self) -> np.ndarray:
        return self.alpha + self.eta * self.eta

    @classmethod
    def from_bounds(cls, alpha, beta) -> "LatentBox":
        a = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
        b = np.atleast_1d(np.asarray(beta, dtype=np.float64))
        if np.any(b < a):
            raise ValueError("beta must be >= alpha elementwise")
        return cls(alpha=a, eta=np.sqrt(b - a))

    @classmethod
    def symmetric(cls, z_dim: int, half_width: float = 3.0) -> "LatentBox":
        return cls.from_bounds(np.full(z_dim, -half_width), np.full(z_dim, half_width))


@dataclass(frozen=True)
class IntervalBounds:
    """Boxes [l_k, u_k] for the free input and every linear layer output.

    lower[k]/upper[k] bound the k-th linear layer's pre-activation output
    (the final entry bounds the network output).
    """

    input_lower: np.ndarray
    input_upper: np.ndarray
    lower: tuple[np.ndarray, ...]
    upper: tuple[np.ndarray, ...]

    @property
    def output_lower(self) -> np.ndarray:
        return self.lower[-1]

    @property
    def output_upper(self) -> np.ndarray:
        return self.upper[-1]


def propagate(
    problem: VerificationProblem,
    latent: LatentBox,
    packed: PackedProblem | None = None,
) -> IntervalBounds:
    """Sound elementwise boxes for all u in the free box, z in [alpha, beta]."""
    if packed is None:
        packed = pack_problem(problem)
    if latent.alpha.shape[0] != packed.z_dim:
        raise ValueError(
            f"latent box dim {latent.alpha.shape[0]} != network z_dim {packed.z_dim}"
        )
    l_flat, u_flat = kernels.ibp_bounds(packed.tup, latent.alpha, latent.beta)
    if not (np.all(np.isfinite(l_flat)) and np.all(np.isfinite(u_flat))):
        raise OverflowError("interval propagation produced non-finite bounds")
    return IntervalBounds(
        input_lower=problem.free_box.lower.copy(),
        input_upper=problem.free_box.upper.copy(),
        lower=tuple(seg.copy() for seg in packed.bound_segments(l_flat)),
        upper=tuple(seg.copy() for seg in packed.bound_segments(u_flat)),
    )
