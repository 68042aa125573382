/** Training CLI: trains the neural process on beta-CDF curves and exports a
 * verifier-ready decoder plus a sidecar metadata file.
 *
 * Usage: tsx src/train.ts --out ../fixtures/np_decoder.json [--steps N]
 *        [--seed S] [--meta path] [--quiet]
 */

import * as fs from "fs";
import * as path from "path";

import { betaCdf } from "./beta.js";
import { DEFAULT_CONFIG, Episode, TrainConfig, sampleEpisode } from "./dataset.js";
import { exportedForward, foldDecoder } from "./export.js";
import { NeuralProcess } from "./model.js";
import { Rng } from "./rng.js";

export interface TrainResult {
  np: NeuralProcess;
  heldOutMse: number;
  finalLoss: number;
  lossCurve: { step: number; loss: number }[];
}

export function trainModel(
  config: TrainConfig,
  log: (msg: string) => void = () => {}
): TrainResult {
  const rng = new Rng(config.seed);
  const np = new NeuralProcess(config, rng);
  const curve: { step: number; loss: number }[] = [];
  let finalLoss = NaN;
  for (let step = 1; step <= config.steps; step++) {
    const batch: Episode[] = [];
    for (let i = 0; i < config.batchCurves; i++) batch.push(sampleEpisode(rng, config));
    const stats = np.trainStep(batch, rng);
    finalLoss = stats.loss;
    if (step % 200 === 0 || step === 1) {
      curve.push({ step, loss: stats.loss });
      log(`step ${step}: loss=${stats.loss.toFixed(5)} mse=${stats.mse.toFixed(5)} kl=${stats.kl.toFixed(3)}`);
    }
  }
  const evalRng = new Rng(config.seed + 7919);
  const heldOut: Episode[] = [];
  for (let i = 0; i < 64; i++) heldOut.push(sampleEpisode(evalRng, config));
  const mse = np.heldOutMse(heldOut);
  log(`held-out posterior-mean MSE over ${heldOut.length} curves: ${mse.toFixed(6)}`);
  return { np, heldOutMse: mse, finalLoss, lossCurve: curve };
}

/** A fixed unseen curve's context set: the conditioning for the export. */
export function exportContext(config: TrainConfig, nPoints = 6) {
  const rng = new Rng(config.seed + 104729);
  const p = rng.uniform(1.2, 3.5);
  const q = rng.uniform(1.2, 3.5);
  const xs = new Float64Array(nPoints);
  const ys = new Float64Array(nPoints);
  for (let i = 0; i < nPoints; i++) {
    xs[i] = (i + 0.5) / nPoints;
    ys[i] = betaCdf(xs[i], p, q);
  }
  return { p, q, contextX: xs, contextY: ys };
}

export function exportWithMetadata(
  result: TrainResult,
  config: TrainConfig,
  outPath: string,
  metaPath: string,
  log: (msg: string) => void = () => {}
): void {
  const ctx = exportContext(config);
  const post = result.np.encode(ctx.contextX, ctx.contextY);
  const model = foldDecoder(result.np, post);

  // reference forward evaluations: the cross-language contract check
  const refRng = new Rng(config.seed + 65537);
  const referenceEvals = [];
  for (let i = 0; i < 8; i++) {
    const x = [refRng.next()];
    const z = Array.from({ length: config.latentDim }, () => refRng.normal());
    referenceEvals.push({ x, z, y: exportedForward(model, x, z)[0] });
  }

  // sanity log, not an assertion: posterior-mean samples should look CDF-like
  const probe = [0.0, 0.25, 0.5, 0.75, 1.0].map(
    (x) => exportedForward(model, [x], [0, 0])[0]
  );
  log(`decoder at z=0 over x=0..1: ${probe.map((v) => v.toFixed(3)).join(", ")}`);

  const meta = {
    config,
    context: {
      p: ctx.p,
      q: ctx.q,
      points: Array.from(ctx.contextX).map((x, i) => [x, ctx.contextY[i]]),
    },
    posterior: { mu: Array.from(post.mu), sigma: Array.from(post.sigma) },
    training: {
      final_loss: result.finalLoss,
      heldout_mse: result.heldOutMse,
      loss_curve: result.lossCurve,
    },
    reference_evals: referenceEvals,
  };
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, JSON.stringify(model));
  fs.writeFileSync(metaPath, JSON.stringify(meta, null, 2));
  log(`wrote ${outPath} and ${metaPath}`);
}

function parseArgs(argv: string[]) {
  const args: Record<string, string | boolean> = {};
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) continue;
    const key = a.slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      args[key] = argv[++i];
    } else {
      args[key] = true;
    }
  }
  return args;
}

const isMain = process.argv[1] && path.resolve(process.argv[1]) === path.resolve(
  new URL(import.meta.url).pathname
);

if (isMain) {
  const args = parseArgs(process.argv.slice(2));
  const config: TrainConfig = {
    ...DEFAULT_CONFIG,
    steps: args.steps ? Number(args.steps) : DEFAULT_CONFIG.steps,
    seed: args.seed ? Number(args.seed) : DEFAULT_CONFIG.seed,
  };
  const outPath = (args.out as string) ?? "../fixtures/np_decoder.json";
  const metaPath = (args.meta as string) ?? outPath.replace(/\.json$/, ".meta.json");
  const log = args.quiet ? () => {} : (m: string) => console.log(m);
  const result = trainModel(config, log);
  if (result.heldOutMse > 0.01) {
    console.error(
      `warning: held-out MSE ${result.heldOutMse.toFixed(5)} exceeds the 0.01 target`
    );
  }
  exportWithMetadata(result, config, outPath, metaPath, log);
}
