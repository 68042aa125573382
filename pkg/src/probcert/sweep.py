"""Threshold sweeps over sliding input intervals.

For each interval [delta, delta + width] the tightest certifiable output
threshold is located by bisection: the certified bound is nonincreasing in
the upper threshold (an infimum of nonincreasing functions), and every
accepted threshold carries an actual certificate, so the returned value is
sound regardless of optimization quality.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .dual import Certificate
from .intervals import LatentBox, propagate
from .model import DecoderModel
from .optimize import OptimizerConfig, optimize
from .specs import Box, build_bounded_above, build_bounded_below

CSV_HEADER = "delta,threshold,certified_bound,erfc_term,tail_term,bisect_iters,opt_steps,flag"

FLAG_OK = ""
FLAG_UNCERTIFIED = "uncertified_bracket"
FLAG_CERTIFIED_LOW = "certified_bracket"

BRACKET_LATENT_HALF_WIDTH = 6.0


@dataclass(frozen=True)
class SweepConfig:
    delta_start: float = 0.0
    delta_end: float = 0.98
    delta_step: float = 0.02
    width: float = 0.02
    epsilon: float = 0.01
    bracket: tuple[float, float] | None = None
    search_iters: int = 30
    warm_start: bool = True
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if self.delta_step <= 0 or self.width <= 0:
            raise ValueError("delta_step and width must be > 0")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.bracket is not None and not (self.bracket[0] < self.bracket[1]):
            raise ValueError("bracket lo must be < hi")


@dataclass(frozen=True)
class SweepRow:
    delta: float
    threshold: float
    certificate: Certificate
    bisect_iters: int
    opt_steps: int
    flag: str


def _deltas(config: SweepConfig) -> list[float]:
    n = int(np.floor((config.delta_end - config.delta_start) / config.delta_step + 1e-9)) + 1
    return [round(config.delta_start + i * config.delta_step, 10) for i in range(max(n, 1))]


def _default_bracket(model: DecoderModel, x_box: Box, epsilon: float) -> tuple[float, float]:
    """Output interval under IBP at latent box [-6, 6]: the achievable range."""
    probe = build_bounded_above(model, 0.0, x_box, epsilon)
    latent = LatentBox.symmetric(model.z_dim, BRACKET_LATENT_HALF_WIDTH)
    bounds = propagate(probe, latent)
    return float(bounds.output_lower[0]), float(bounds.output_upper[0])


def sweep(model: DecoderModel, property_kind: str, config: SweepConfig) -> list[SweepRow]:
    """Tightest certified output threshold per sliding interval.

    property_kind 'upper': smallest a with certified P(f > a) <= epsilon.
    property_kind 'lower': largest b with certified P(f < b) <= epsilon.
    """
    if property_kind not in ("upper", "lower"):
        raise ValueError("property must be 'upper' or 'lower'")
    if model.out_dim != 1 or model.x_dim != 1:
        raise ValueError("sweep requires a model with scalar input and output")

    rows: list[SweepRow] = []
    carry = None  # (duals, latent) from the last certified evaluation
    for delta in _deltas(config):
        x_box = Box([delta], [delta + config.width])
        lo_br, hi_br = (
            config.bracket
            if config.bracket is not None
            else _default_bracket(model, x_box, config.epsilon)
        )

        def evaluate(threshold: float):
            nonlocal carry
            if property_kind == "upper":
                problem = build_bounded_above(model, threshold, x_box, config.epsilon)
            else:
                problem = build_bounded_below(model, threshold, x_box, config.epsilon)
            result = optimize(problem, config.optimizer, return_state=True)
            if config.warm_start and carry is not None:
                # the warm descent explores a second basin; keep the tighter
                # result so warm starts never lose to cold ones
                warmed = optimize(
                    problem, config.optimizer, warm_start=carry, return_state=True
                )
                if warmed.certificate.bound < result.certificate.bound:
                    result = warmed
            # carry only certifying states: evaluations at hopeless thresholds
            # end in saturated flat regions that poison later warm starts
            if config.warm_start and result.certificate.bound <= config.epsilon:
                carry = (result.duals, result.latent)
            return result.certificate

        certified_end = hi_br if property_kind == "upper" else lo_br
        uncertified_end = lo_br if property_kind == "upper" else hi_br

        cert_good = evaluate(certified_end)
        if cert_good.bound > config.epsilon:
            rows.append(
                SweepRow(delta, certified_end, cert_good, 0, config.optimizer.steps, FLAG_UNCERTIFIED)
            )
            continue
        cert_other = evaluate(uncertified_end)
        if cert_other.bound <= config.epsilon:
            rows.append(
                SweepRow(
                    delta, uncertified_end, cert_other, 0, config.optimizer.steps, FLAG_CERTIFIED_LOW
                )
            )
            continue

        good, bad = certified_end, uncertified_end
        best_cert = cert_good
        for _ in range(config.search_iters):
            mid = 0.5 * (good + bad)
            cert_mid = evaluate(mid)
            if cert_mid.bound <= config.epsilon:
                good = mid
                best_cert = cert_mid
            else:
                bad = mid
        rows.append(
            SweepRow(delta, good, best_cert, config.search_iters, config.optimizer.steps, FLAG_OK)
        )
    return rows


def rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        c = r.certificate
        lines.append(
            ",".join(
                [
                    repr(float(r.delta)),
                    repr(float(r.threshold)),
                    repr(float(c.bound)),
                    repr(float(c.erfc_term)),
                    repr(float(c.tail_term)),
                    str(r.bisect_iters),
                    str(r.opt_steps),
                    r.flag,
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv_atomic(text: str, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
