"""Independent estimators of the true violation probability.

These never share code with the certificate path: they evaluate the network
forward and measure the violation event directly, so certificate soundness
can be checked against them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.special
import scipy.stats

from .model import forward_batch
from .specs import VerificationProblem

GRID_CAP = 10_000
QUAD_Z_LIMIT = 10.0
QUAD_GRID_SPACING = 1e-3
QUAD_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class ViolationEstimate:
    point_estimate: float
    lower95: float
    upper95: float
    samples: int
    seed: int


def _clopper_pearson(successes: int, n: int) -> tuple[float, float]:
    """Exact two-sided 95% binomial interval."""
    if successes == 0:
        lo = 0.0
    else:
        lo = float(scipy.stats.beta.ppf(0.025, successes, n - successes + 1))
    if successes == n:
        hi = 1.0
    else:
        hi = float(scipy.stats.beta.ppf(0.975, successes + 1, n - successes))
    return lo, hi


def mc_violation(
    problem: VerificationProblem, u, samples: int, seed: int = 0
) -> ViolationEstimate:
    """Monte-Carlo estimate of P(c^T f(u, z) + d >= 0) at a fixed u."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    z_dim = problem.network.z_dim
    hits = 0
    chunk = 65536
    remaining = samples
    while remaining > 0:
        n = min(chunk, remaining)
        Z = rng.standard_normal((n, z_dim))
        vals = forward_batch(problem.network, u, Z) @ problem.c + problem.d
        hits += int(np.count_nonzero(vals >= 0.0))
        remaining -= n
    lo, hi = _clopper_pearson(hits, samples)
    return ViolationEstimate(
        point_estimate=hits / samples,
        lower95=lo,
        upper95=hi,
        samples=samples,
        seed=seed,
    )


def _spec_values(problem: VerificationProblem, u, zs: np.ndarray) -> np.ndarray:
    Z = zs.reshape(-1, 1)
    return forward_batch(problem.network, u, Z) @ problem.c + problem.d


def quadrature_violation(problem: VerificationProblem, u, tolerance: float = QUAD_BISECT_TOL) -> float:
    """Near-exact violation probability for scalar latent dimension.

    The spec expression is continuous piecewise-linear in z for ReLU
    networks: locate sign changes on a dense grid, refine by bisection, and
    integrate the standard normal mass of the violation set.  Mass outside
    [-QUAD_Z_LIMIT, QUAD_Z_LIMIT] is added as a conservative surcharge.
    """
    if problem.network.z_dim != 1:
        raise ValueError("quadrature oracle requires z_dim == 1")
    n = int(2 * QUAD_Z_LIMIT / QUAD_GRID_SPACING) + 1
    grid = np.linspace(-QUAD_Z_LIMIT, QUAD_Z_LIMIT, n)
    sign = _spec_values(problem, u, grid) >= 0.0
    flips = np.nonzero(sign[1:] != sign[:-1])[0]

    # refine every sign change at once; one batched forward per halving
    a = grid[flips]
    b = grid[flips + 1]
    sa = sign[flips]
    while a.size and np.max(b - a) > tolerance:
        m = 0.5 * (a + b)
        sm = _spec_values(problem, u, m) >= 0.0
        crossing_right = sm == sa
        a = np.where(crossing_right, m, a)
        b = np.where(crossing_right, b, m)
    crossings = 0.5 * (a + b)

    # integrate the violation set as a union of intervals between crossings
    edges = np.concatenate([[-QUAD_Z_LIMIT], crossings, [QUAD_Z_LIMIT]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    violating = _spec_values(problem, u, mids) >= 0.0
    phi = scipy.special.ndtr
    masses = phi(edges[1:]) - phi(edges[:-1])
    total = float(np.sum(masses[violating]))
    # conservative surcharge for the truncated tails (< 1e-23 per side)
    total += float(phi(-QUAD_Z_LIMIT) + (1.0 - phi(QUAD_Z_LIMIT)))
    return min(total, 1.0)


def _grid_points(problem: VerificationProblem, per_dim: int) -> np.ndarray:
    lo, hi = problem.free_box.lower, problem.free_box.upper
    dim = lo.shape[0]
    if per_dim < 1:
        raise ValueError("grid_points must be >= 1")
    total = per_dim**dim
    if total > GRID_CAP:
        raise ValueError(f"grid of {total} points exceeds cap {GRID_CAP}")
    if per_dim == 1:
        return (0.5 * (lo + hi)).reshape(1, dim)
    axes = [np.linspace(lo[i], hi[i], per_dim) for i in range(dim)]
    return np.array(list(itertools.product(*axes)))


def grid_max_violation(
    problem: VerificationProblem,
    grid_points: int,
    method: str = "quadrature",
    samples: int = 100_000,
    seed: int = 0,
):
    """Max oracle value over a uniform grid (endpoints included per dim).

    A lower-bound probe of the supremum violation probability over the box.
    Returns a float for the quadrature method, a ViolationEstimate (the
    maximizing point's) for mc.
    """
    pts = _grid_points(problem, grid_points)
    if method == "quadrature":
        return max(quadrature_violation(problem, u) for u in pts)
    if method == "mc":
        best = None
        for i, u in enumerate(pts):
            est = mc_violation(problem, u, samples, seed=seed + i)
            if best is None or est.point_estimate > best.point_estimate:
                best = est
        return best
    raise ValueError(f"unknown oracle method {method!r}")
