/** Function-regression episodes: curves are exact beta-distribution CDFs. */

import { betaCdf } from "./beta.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  hiddenSizes: [number, number, number];
  reprDim: number;
  latentDim: number;
  contextMin: number;
  contextMax: number;
  targetsPerCurve: number;
  /** beta shape parameter ranges (p, q), named to avoid the latent box's alpha/beta */
  shapeMin: number;
  shapeMax: number;
  steps: number;
  batchCurves: number;
  learningRate: number;
  klWeight: number;
  weightDecay: number;
  l1Weight: number;
  seed: number;
}

export const DEFAULT_CONFIG: TrainConfig = {
  hiddenSizes: [64, 64, 64],
  reprDim: 32,
  latentDim: 2,
  contextMin: 3,
  contextMax: 10,
  targetsPerCurve: 24,
  shapeMin: 0.5,
  shapeMax: 5.0,
  steps: 4000,
  batchCurves: 8,
  learningRate: 1e-3,
  klWeight: 1e-3,
  weightDecay: 1e-4,
  l1Weight: 0.08,
  seed: 2024,
};

export interface Episode {
  p: number;
  q: number;
  contextX: Float64Array;
  contextY: Float64Array;
  targetX: Float64Array;
  targetY: Float64Array;
}

export function sampleCurveParams(rng: Rng, config: TrainConfig): [number, number] {
  return [
    rng.uniform(config.shapeMin, config.shapeMax),
    rng.uniform(config.shapeMin, config.shapeMax),
  ];
}

export function sampleEpisode(rng: Rng, config: TrainConfig): Episode {
  const [p, q] = sampleCurveParams(rng, config);
  const nCtx = rng.int(config.contextMin, config.contextMax);
  const contextX = new Float64Array(nCtx);
  const contextY = new Float64Array(nCtx);
  for (let i = 0; i < nCtx; i++) {
    contextX[i] = rng.next();
    contextY[i] = betaCdf(contextX[i], p, q);
  }
  const targetX = new Float64Array(config.targetsPerCurve);
  const targetY = new Float64Array(config.targetsPerCurve);
  for (let i = 0; i < config.targetsPerCurve; i++) {
    targetX[i] = rng.next();
    targetY[i] = betaCdf(targetX[i], p, q);
  }
  return { p, q, contextX, contextY, targetX, targetY };
}

/** Evaluation grid for CDF-axiom checks and held-out scoring. */
export function curveOnGrid(p: number, q: number, n: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = betaCdf(i / (n - 1), p, q);
  return out;
}
