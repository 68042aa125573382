"""Gradient descent over (multipliers, alpha, eta) to tighten the bound.

Every iterate yields a valid certificate, so optimization quality affects
tightness only; the best iterate seen is returned, never the last.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dual import Certificate, DualVariables
from .intervals import IntervalBounds, LatentBox
from .packing import PackedProblem, pack_problem
from .specs import VerificationProblem

logger = logging.getLogger(__name__)

INIT_HALF_WIDTH = 3.0
INIT_SCALE_GRID = (1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 0.0)


@dataclass(frozen=True)
class OptimizerConfig:
    """Normalized subgradient descent: each step moves a fixed distance
    `step_size` along the unit (sub)gradient direction, halving the distance
    every `decay_every` steps.

    Raw gradient steps are unusable here: the objective's gradient magnitude
    scales with 1 / (latent coefficient norm), which varies by orders of
    magnitude across iterates, so unnormalized steps either stall or
    overshoot into a saturated plateau they never leave.  Normalized steps
    are scale-free, and soundness never depends on the trajectory: every
    iterate is a valid certificate and the best one is returned.
    """

    steps: int = 500
    step_size: float = 0.05
    decay_every: int = 125
    decay_factor: float = 0.5
    seed: int = 0
    finite_difference_check: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")


def init_duals(problem: VerificationProblem, bounds: IntervalBounds) -> DualVariables:
    """Backward pass of the spec coefficients through transposed layers.

    Each crossing of an activation multiplies elementwise by a derivative
    surrogate: 1 on always-active neurons, 0 on dead ones, 0.5 otherwise.
    """
    linears = problem.network.linear_layers
    K = len(linears)
    if K == 1:
        return DualVariables(())
    lambdas: list[np.ndarray] = [None] * (K - 1)
    lam = problem.c
    for k in range(K - 1, 0, -1):
        nu = linears[k].W.T @ lam
        lo, hi = bounds.lower[k - 1], bounds.upper[k - 1]
        surrogate = np.where(lo >= 0.0, 1.0, np.where(hi <= 0.0, 0.0, 0.5))
        lam = nu * surrogate
        lambdas[k - 1] = lam
    return DualVariables(tuple(lambdas))


def gradient(
    problem: VerificationProblem, duals: DualVariables, latent: LatentBox
) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """Exact (sub)gradients of the unclamped objective erfc_term + tail_term."""
    packed = pack_problem(problem)
    lam_free = packed.pack_duals(duals.lambdas)
    (_obj, _e, _t, _g, _s, glam, galpha, geta) = kernels.objective_grad(
        packed.tup, lam_free, latent.alpha, latent.eta
    )
    return packed.lam_segments(glam), galpha, geta


def _certificate(problem, packed, lam_free, alpha, eta, steps_taken) -> Certificate | None:
    obj, erfc_term, tail_term, g, s = kernels.objective_value(packed.tup, lam_free, alpha, eta)
    if not math.isfinite(obj):
        return None
    return Certificate(
        bound=min(1.0, float(obj)),
        erfc_term=float(erfc_term),
        tail_term=float(tail_term),
        g_value=float(g),
        latent_coeff_norm=float(s),
        alpha=alpha.copy(),
        beta=alpha + eta * eta,
        steps_taken=steps_taken,
        model_digest=problem.model_digest,
        spec_digest=problem.spec_digest(),
    )


def _vacuous(problem: VerificationProblem, steps_taken: int) -> Certificate:
    z_dim = problem.network.z_dim
    zeros = np.zeros(z_dim)
    return Certificate(
        bound=1.0,
        erfc_term=1.0,
        tail_term=1.0,
        g_value=0.0,
        latent_coeff_norm=0.0,
        alpha=zeros,
        beta=zeros.copy(),
        steps_taken=steps_taken,
        model_digest=problem.model_digest,
        spec_digest=problem.spec_digest(),
    )


@dataclass
class OptimizeResult:
    certificate: Certificate
    duals: DualVariables
    latent: LatentBox


def optimize(
    problem: VerificationProblem,
    config: OptimizerConfig | None = None,
    warm_start: tuple[DualVariables, LatentBox] | None = None,
    return_state: bool = False,
):
    """Minimize the certified bound; returns the best iterate's Certificate.

    Starts from the surrogate backward-pass multipliers and a symmetric
    latent box of half-width 3 unless a warm start is given.  Non-finite
    objectives abort the descent, keeping the best valid iterate (or the
    vacuous bound 1 if none exists).
    """
    if config is None:
        config = OptimizerConfig()
    packed = pack_problem(problem)
    z_dim = packed.z_dim

    if warm_start is not None:
        duals0, latent0 = warm_start
        lam = packed.pack_duals(duals0.lambdas).copy()
        alpha = latent0.alpha.copy()
        eta = latent0.eta.copy()
    else:
        alpha = np.full(z_dim, -INIT_HALF_WIDTH)
        eta = np.full(z_dim, math.sqrt(2.0 * INIT_HALF_WIDTH))
        try:
            from .intervals import propagate

            bounds = propagate(problem, LatentBox(alpha, eta), packed=packed)
            lam = packed.pack_duals(init_duals(problem, bounds).lambdas)
        except OverflowError:
            result = OptimizeResult(
                certificate=_vacuous(problem, 0),
                duals=DualVariables.zeros(problem),
                latent=LatentBox(np.zeros(z_dim), np.zeros(z_dim)),
            )
            return result if return_state else result.certificate
        if lam.shape[0]:
            # the surrogate backward pass fixes the direction but not the
            # amplitude; a mis-scaled start saturates the erfc term and kills
            # its gradient, so pick the best amplitude by direct evaluation
            best_t, best_val = 1.0, math.inf
            for t in INIT_SCALE_GRID:
                val = kernels.objective_value(packed.tup, t * lam, alpha, eta)[0]
                if math.isfinite(val) and val < best_val:
                    best_t, best_val = t, val
            lam = best_t * lam

    if config.finite_difference_check:
        _fd_check(packed, lam, alpha, eta, config.seed)

    best_obj = math.inf
    best_state = None
    step_size = config.step_size
    for step in range(config.steps + 1):
        out = kernels.objective_grad(packed.tup, lam, alpha, eta)
        obj, glam, galpha, geta = out[0], out[5], out[6], out[7]
        if not math.isfinite(obj):
            logger.warning("non-finite objective at step %d; aborting descent", step)
            break
        if obj < best_obj:
            best_obj = obj
            best_state = (lam.copy(), alpha.copy(), eta.copy())
        if step == config.steps:
            break
        if step > 0 and step % config.decay_every == 0:
            step_size *= config.decay_factor
        norm = math.sqrt(
            float(glam @ glam) + float(galpha @ galpha) + float(geta @ geta)
        )
        if norm == 0.0:
            break
        scale = step_size / norm
        lam = lam - scale * glam
        alpha = alpha - scale * galpha
        eta = eta - scale * geta

    if best_state is None:
        result = OptimizeResult(
            certificate=_vacuous(problem, config.steps),
            duals=DualVariables.zeros(problem),
            latent=LatentBox(np.zeros(z_dim), np.zeros(z_dim)),
        )
        return result if return_state else result.certificate

    lam_b, alpha_b, eta_b = best_state
    cert = _certificate(problem, packed, lam_b, alpha_b, eta_b, config.steps)
    if cert is None:  # unreachable unless the recomputation overflows
        cert = _vacuous(problem, config.steps)
    result = OptimizeResult(
        certificate=cert,
        duals=DualVariables(tuple(packed.lam_segments(lam_b))),
        latent=LatentBox(alpha_b, eta_b),
    )
    return result if return_state else result.certificate


def _fd_check(packed: PackedProblem, lam, alpha, eta, seed: int, h: float = 1e-5) -> None:
    """Spot-check the analytic gradient against central differences."""
    rng = np.random.default_rng(seed)
    out = kernels.objective_grad(packed.tup, lam, alpha, eta)
    glam, galpha, geta = out[5], out[6], out[7]
    full = np.concatenate([glam, galpha, geta])
    n = full.shape[0]
    idx = rng.choice(n, size=min(16, n), replace=False)
    worst = 0.0
    for i in idx:
        theta = np.concatenate([lam, alpha, eta])
        theta_p = theta.copy()
        theta_m = theta.copy()
        theta_p[i] += h
        theta_m[i] -= h
        p = kernels.objective_value(
            packed.tup,
            theta_p[: lam.shape[0]],
            theta_p[lam.shape[0] : lam.shape[0] + alpha.shape[0]],
            theta_p[lam.shape[0] + alpha.shape[0] :],
        )[0]
        m = kernels.objective_value(
            packed.tup,
            theta_m[: lam.shape[0]],
            theta_m[lam.shape[0] : lam.shape[0] + alpha.shape[0]],
            theta_m[lam.shape[0] + alpha.shape[0] :],
        )[0]
        fd = (p - m) / (2.0 * h)
        err = abs(fd - full[i]) / max(abs(fd), 1e-8)
        worst = max(worst, err)
    if worst > 1e-3:
        logger.warning("finite-difference check: worst relative error %.3g", worst)
