/** Minimal float64 dense layers with manual backprop and an Adam optimizer.
 *
 * float64 throughout: exported decoders must reproduce bit-comparable
 * forward values in the verifier, so float32 training frameworks are out.
 */

import { Rng } from "./rng.js";

export class Dense {
  readonly nin: number;
  readonly nout: number;
  w: Float64Array; // row-major nout x nin
  b: Float64Array;
  gw: Float64Array;
  gb: Float64Array;
  private lastInput: Float64Array | null = null;
  private lastRows = 0;

  constructor(nin: number, nout: number, rng: Rng) {
    this.nin = nin;
    this.nout = nout;
    this.w = new Float64Array(nout * nin);
    this.b = new Float64Array(nout);
    this.gw = new Float64Array(nout * nin);
    this.gb = new Float64Array(nout);
    const scale = Math.sqrt(2.0 / nin); // He init for ReLU stacks
    for (let i = 0; i < this.w.length; i++) this.w[i] = scale * rng.normal();
  }

  /** x: rows x nin, returns rows x nout; caches x for backward. */
  forward(x: Float64Array, rows: number): Float64Array {
    this.lastInput = x;
    this.lastRows = rows;
    const out = new Float64Array(rows * this.nout);
    for (let r = 0; r < rows; r++) {
      const xo = r * this.nin;
      const yo = r * this.nout;
      for (let j = 0; j < this.nout; j++) {
        let acc = this.b[j];
        const wo = j * this.nin;
        for (let i = 0; i < this.nin; i++) acc += this.w[wo + i] * x[xo + i];
        out[yo + j] = acc;
      }
    }
    return out;
  }

  /** dout: rows x nout; accumulates parameter grads, returns rows x nin. */
  backward(dout: Float64Array): Float64Array {
    const x = this.lastInput;
    if (x === null) throw new Error("backward before forward");
    const rows = this.lastRows;
    const dx = new Float64Array(rows * this.nin);
    for (let r = 0; r < rows; r++) {
      const xo = r * this.nin;
      const yo = r * this.nout;
      for (let j = 0; j < this.nout; j++) {
        const g = dout[yo + j];
        if (g === 0) continue;
        const wo = j * this.nin;
        this.gb[j] += g;
        for (let i = 0; i < this.nin; i++) {
          this.gw[wo + i] += g * x[xo + i];
          dx[xo + i] += g * this.w[wo + i];
        }
      }
    }
    return dx;
  }

  zeroGrad(): void {
    this.gw.fill(0);
    this.gb.fill(0);
  }

  params(): Float64Array[] {
    return [this.w, this.b];
  }

  grads(): Float64Array[] {
    return [this.gw, this.gb];
  }
}

export function relu(x: Float64Array): Float64Array {
  const out = new Float64Array(x.length);
  for (let i = 0; i < x.length; i++) out[i] = x[i] > 0 ? x[i] : 0;
  return out;
}

export function reluBackward(x: Float64Array, dout: Float64Array): Float64Array {
  const dx = new Float64Array(x.length);
  for (let i = 0; i < x.length; i++) dx[i] = x[i] > 0 ? dout[i] : 0;
  return dx;
}

export class Adam {
  private readonly lr: number;
  private readonly beta1 = 0.9;
  private readonly beta2 = 0.999;
  private readonly eps = 1e-8;
  private t = 0;
  private m: Float64Array[];
  private v: Float64Array[];

  /** Decoupled L2 decay plus proximal L1 (soft threshold), masked per
   * element. The L1 term directly shrinks per-layer absolute row sums, which
   * set the growth rate of interval bounds on the trained network; without
   * it the certified output ranges blow up by ~|W| per layer. Latent-path
   * weights are exempted by the caller so the model keeps its stochasticity. */
  constructor(
    private readonly params: Float64Array[],
    private readonly grads: Float64Array[],
    lr: number,
    private readonly weightDecay = 0.0,
    private readonly l1Weight = 0.0,
    private readonly regMask: (Float64Array | null)[] = []
  ) {
    this.lr = lr;
    this.m = params.map((p) => new Float64Array(p.length));
    this.v = params.map((p) => new Float64Array(p.length));
  }

  step(): void {
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (let k = 0; k < this.params.length; k++) {
      const p = this.params[k];
      const g = this.grads[k];
      const m = this.m[k];
      const v = this.v[k];
      const mask = this.regMask[k] ?? null;
      const shrinkBase = this.lr * this.l1Weight;
      for (let i = 0; i < p.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        p[i] -= (this.lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps);
        const w = mask === null ? 0 : mask[i];
        if (w > 0) {
          if (this.weightDecay > 0) p[i] -= this.lr * this.weightDecay * w * p[i];
          const shrink = shrinkBase * w;
          if (shrink > 0) {
            const a = Math.abs(p[i]) - shrink;
            p[i] = a > 0 ? Math.sign(p[i]) * a : 0;
          }
        }
      }
    }
  }
}
