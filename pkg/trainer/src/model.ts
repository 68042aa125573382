/** Neural process: context encoder with mean pooling, Gaussian latent head,
 * and the decoder that is later exported for verification.
 */

import { Adam, Dense, relu, reluBackward } from "./nn.js";
import { Episode, TrainConfig } from "./dataset.js";
import { Rng } from "./rng.js";

const LOG_SIGMA_MIN = -5;
const LOG_SIGMA_MAX = 2;

export interface Posterior {
  rbar: Float64Array;
  mu: Float64Array;
  sigma: Float64Array;
  logSigmaClamped: boolean[];
}

export interface StepStats {
  loss: number;
  mse: number;
  kl: number;
}

export class NeuralProcess {
  readonly config: TrainConfig;
  enc1: Dense;
  enc2: Dense;
  latentHead: Dense;
  dec: Dense[];
  private optimizer: Adam;

  constructor(config: TrainConfig, rng: Rng) {
    this.config = config;
    const [h1, h2, h3] = config.hiddenSizes;
    this.enc1 = new Dense(2, 64, rng);
    this.enc2 = new Dense(64, config.reprDim, rng);
    this.latentHead = new Dense(config.reprDim, 2 * config.latentDim, rng);
    const decIn = 1 + config.reprDim + config.latentDim;
    this.dec = [
      new Dense(decIn, h1, rng),
      new Dense(h1, h2, rng),
      new Dense(h2, h3, rng),
      new Dense(h3, 1, rng),
    ];
    const layers = [this.enc1, this.enc2, this.latentHead, ...this.dec];
    const masks: (Float64Array | null)[] = [];
    for (const layer of layers) {
      const wMask = new Float64Array(layer.w.length).fill(1);
      if (layer === this.dec[0]) {
        // exempt the latent columns: shrinking them collapses stochasticity
        for (let j = 0; j < layer.nout; j++) {
          for (let i = 1 + config.reprDim; i < layer.nin; i++) {
            wMask[j * layer.nin + i] = 0;
          }
        }
      }
      masks.push(wMask, null); // weights regularized, biases not
    }
    this.optimizer = new Adam(
      layers.flatMap((l) => l.params()),
      layers.flatMap((l) => l.grads()),
      config.learningRate,
      config.weightDecay,
      config.l1Weight,
      masks
    );
  }

  private layers(): Dense[] {
    return [this.enc1, this.enc2, this.latentHead, ...this.dec];
  }

  /** Aggregate a context set into (rbar, mu, sigma); caches stay valid for
   * an immediate backward pass. */
  encode(contextX: Float64Array, contextY: Float64Array): Posterior {
    const n = contextX.length;
    const pts = new Float64Array(n * 2);
    for (let i = 0; i < n; i++) {
      pts[2 * i] = contextX[i];
      pts[2 * i + 1] = contextY[i];
    }
    this.encPre = this.enc1.forward(pts, n);
    const h = relu(this.encPre);
    const reps = this.enc2.forward(h, n);
    const d = this.config.reprDim;
    const rbar = new Float64Array(d);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) rbar[j] += reps[i * d + j] / n;
    }
    const stats = this.latentHead.forward(rbar, 1);
    const m = this.config.latentDim;
    const mu = new Float64Array(m);
    const sigma = new Float64Array(m);
    const logSigmaClamped: boolean[] = [];
    for (let j = 0; j < m; j++) {
      mu[j] = stats[j];
      const ls = stats[m + j];
      const clamped = ls < LOG_SIGMA_MIN || ls > LOG_SIGMA_MAX;
      logSigmaClamped.push(clamped);
      sigma[j] = Math.exp(Math.min(Math.max(ls, LOG_SIGMA_MIN), LOG_SIGMA_MAX));
    }
    return { rbar, mu, sigma, logSigmaClamped };
  }

  private encPre: Float64Array = new Float64Array(0);
  private decPre: Float64Array[] = [];

  /** Decoder forward for target inputs at one (rbar, z). */
  decode(targetX: Float64Array, rbar: Float64Array, z: Float64Array): Float64Array {
    const t = targetX.length;
    const d = this.config.reprDim;
    const m = this.config.latentDim;
    const nin = 1 + d + m;
    const rows = new Float64Array(t * nin);
    for (let i = 0; i < t; i++) {
      rows[i * nin] = targetX[i];
      rows.set(rbar, i * nin + 1);
      rows.set(z, i * nin + 1 + d);
    }
    this.decPre = [];
    let h: Float64Array = rows;
    for (let k = 0; k < this.dec.length; k++) {
      h = this.dec[k].forward(h, t);
      if (k + 1 < this.dec.length) {
        this.decPre.push(h);
        h = relu(h);
      }
    }
    return h;
  }

  /** One Adam step over a batch of episodes; returns averaged stats. */
  trainStep(episodes: Episode[], rng: Rng): StepStats {
    for (const layer of this.layers()) layer.zeroGrad();
    const bsz = episodes.length;
    let totalMse = 0;
    let totalKl = 0;
    for (const ep of episodes) {
      const post = this.encode(ep.contextX, ep.contextY);
      const m = this.config.latentDim;
      const eps = new Float64Array(m);
      const z = new Float64Array(m);
      for (let j = 0; j < m; j++) {
        eps[j] = rng.normal();
        z[j] = post.mu[j] + post.sigma[j] * eps[j];
      }
      const pred = this.decode(ep.targetX, post.rbar, z);
      const t = ep.targetX.length;

      let mse = 0;
      const dpred = new Float64Array(t);
      for (let i = 0; i < t; i++) {
        const err = pred[i] - ep.targetY[i];
        mse += (err * err) / t;
        dpred[i] = (2 * err) / t / bsz;
      }
      let kl = 0;
      for (let j = 0; j < m; j++) {
        const s2 = post.sigma[j] * post.sigma[j];
        kl += 0.5 * (post.mu[j] * post.mu[j] + s2 - 1 - Math.log(s2));
      }
      totalMse += mse / bsz;
      totalKl += kl / bsz;

      // decoder backward
      let dh: Float64Array = dpred;
      for (let k = this.dec.length - 1; k >= 0; k--) {
        dh = this.dec[k].backward(dh);
        if (k > 0) dh = reluBackward(this.decPre[k - 1], dh);
      }
      const d = this.config.reprDim;
      const nin = 1 + d + m;
      const drbar = new Float64Array(d);
      const dz = new Float64Array(m);
      for (let i = 0; i < t; i++) {
        for (let j = 0; j < d; j++) drbar[j] += dh[i * nin + 1 + j];
        for (let j = 0; j < m; j++) dz[j] += dh[i * nin + 1 + d + j];
      }

      // latent path: z = mu + sigma * eps, KL added directly
      const klw = this.config.klWeight / bsz;
      const dstats = new Float64Array(2 * m);
      for (let j = 0; j < m; j++) {
        const dmu = dz[j] + klw * post.mu[j];
        const dsigma = dz[j] * eps[j] + klw * (post.sigma[j] - 1.0 / post.sigma[j]);
        dstats[j] = dmu;
        dstats[m + j] = post.logSigmaClamped[j] ? 0 : dsigma * post.sigma[j];
      }
      const drbarLat = this.latentHead.backward(dstats);
      for (let j = 0; j < d; j++) drbar[j] += drbarLat[j];

      // encoder backward through the mean pool
      const n = ep.contextX.length;
      const dreps = new Float64Array(n * d);
      for (let i = 0; i < n; i++) {
        for (let j = 0; j < d; j++) dreps[i * d + j] = drbar[j] / n;
      }
      const dh1 = reluBackward(this.encPre, this.enc2.backward(dreps));
      this.enc1.backward(dh1);
    }
    this.optimizer.step();
    const loss = totalMse + this.config.klWeight * totalKl;
    if (!Number.isFinite(loss)) {
      throw new Error(`training diverged: loss=${loss} (mse=${totalMse}, kl=${totalKl})`);
    }
    return { loss, mse: totalMse, kl: totalKl };
  }

  /** Posterior-mean prediction MSE over a batch of held-out episodes. */
  heldOutMse(episodes: Episode[]): number {
    let total = 0;
    for (const ep of episodes) {
      const post = this.encode(ep.contextX, ep.contextY);
      const pred = this.decode(ep.targetX, post.rbar, post.mu);
      let mse = 0;
      for (let i = 0; i < ep.targetX.length; i++) {
        const err = pred[i] - ep.targetY[i];
        mse += (err * err) / ep.targetX.length;
      }
      total += mse / episodes.length;
    }
    return total;
  }
}
