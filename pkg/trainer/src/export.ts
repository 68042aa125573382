/** Fold a fixed context set and its Gaussian posterior into the decoder's
 * first layer, producing a verifier-ready model over (x, z~N(0,I)).
 *
 * The decoder consumes [x, r, z] with z ~ N(mu, diag(sigma^2)); substituting
 * z = mu + sigma * z~ and the fixed representation r gives an exact affine
 * rewrite: the latent block's columns scale by sigma, and W_r r + W_z mu
 * moves into the bias.  Diagonal posteriors only.
 */

import { Dense } from "./nn.js";
import { NeuralProcess, Posterior } from "./model.js";

export interface LinearLayerJson {
  type: "linear";
  W: number[][];
  b: number[];
}

export interface ReluLayerJson {
  type: "relu";
}

export interface ModelJson {
  x_dim: number;
  z_dim: number;
  layers: (LinearLayerJson | ReluLayerJson)[];
}

function denseRows(layer: Dense): number[][] {
  const rows: number[][] = [];
  for (let j = 0; j < layer.nout; j++) {
    rows.push(Array.from(layer.w.subarray(j * layer.nin, (j + 1) * layer.nin)));
  }
  return rows;
}

export function foldDecoder(np: NeuralProcess, post: Posterior): ModelJson {
  const d = np.config.reprDim;
  const m = np.config.latentDim;
  const first = np.dec[0];
  const nin = 1 + d + m;
  if (first.nin !== nin) throw new Error("decoder input layout mismatch");

  const W: number[][] = [];
  const b: number[] = [];
  for (let j = 0; j < first.nout; j++) {
    const row = first.w.subarray(j * nin, (j + 1) * nin);
    let bias = first.b[j];
    for (let i = 0; i < d; i++) bias += row[1 + i] * post.rbar[i];
    for (let i = 0; i < m; i++) bias += row[1 + d + i] * post.mu[i];
    const folded = [row[0]];
    for (let i = 0; i < m; i++) folded.push(row[1 + d + i] * post.sigma[i]);
    W.push(folded);
    b.push(bias);
  }

  const layers: (LinearLayerJson | ReluLayerJson)[] = [{ type: "linear", W, b }];
  for (let k = 1; k < np.dec.length; k++) {
    layers.push({ type: "relu" });
    layers.push({ type: "linear", W: denseRows(np.dec[k]), b: Array.from(np.dec[k].b) });
  }
  return { x_dim: 1, z_dim: m, layers };
}

/** Forward pass of an exported model file (float64, ReLU). */
export function exportedForward(model: ModelJson, x: number[], z: number[]): number[] {
  let h = [...x, ...z];
  for (const layer of model.layers) {
    if (layer.type === "relu") {
      h = h.map((v) => (v > 0 ? v : 0));
      continue;
    }
    const out = new Array<number>(layer.b.length);
    for (let j = 0; j < layer.b.length; j++) {
      let acc = layer.b[j];
      const row = layer.W[j];
      for (let i = 0; i < row.length; i++) acc += row[i] * h[i];
      out[j] = acc;
    }
    h = out;
  }
  return h;
}
