// Digits robustness case study: train a 64 -> 10 linear classifier on the
// 8x8 digits dataset and emit one bundle per test input with its
// l_inf box and a true-label margin property, plus a manifest.
//
// Training is deterministic (seeded LCG shuffle, zero init, full-batch
// gradient descent) so the emitted artifacts are reproducible.

import { gunzipSync } from 'node:zlib';
import { readFileSync } from 'node:fs';
import { Bundle } from './bundle.js';
import { chainToBundle, ExportedChain } from './exporter.js';
import { f32Bits, round32 } from './float.js';

export interface DigitsData {
  features: Float64Array[]; // scaled to [0, 1]
  labels: number[];
}

export function loadDigitsCsv(path: string): DigitsData {
  const raw = readFileSync(path);
  const text = (path.endsWith('.gz') ? gunzipSync(raw) : raw).toString('utf-8');
  const features: Float64Array[] = [];
  const labels: number[] = [];
  for (const line of text.trim().split('\n')) {
    const cells = line.split(',').map(Number);
    if (cells.length !== 65) {
      throw new Error(`expected 65 columns, got ${cells.length}`);
    }
    const row = new Float64Array(64);
    for (let i = 0; i < 64; i++) {
      row[i] = cells[i] / 16.0;
    }
    features.push(row);
    labels.push(cells[64]);
  }
  return { features, labels };
}

// Park-Miller LCG Fisher-Yates, matching integer arithmetic in any host.
export function lcgShuffleIndices(n: number, seed: number): number[] {
  let state = seed;
  const idx = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    state = (state * 48271) % 2147483647;
    const j = state % (i + 1);
    const tmp = idx[i];
    idx[i] = idx[j];
    idx[j] = tmp;
  }
  return idx;
}

export interface TrainedModel {
  weight: Float64Array; // [10 * 64]
  bias: Float64Array; // [10]
}

export interface TrainOptions {
  lr: number;
  epochs: number;
}

export function trainSoftmaxRegression(
  xs: Float64Array[],
  ys: number[],
  opts: TrainOptions,
): TrainedModel {
  const n = xs.length;
  const d = 64;
  const k = 10;
  const w = new Float64Array(k * d);
  const b = new Float64Array(k);
  const probs = new Float64Array(k);
  const gradW = new Float64Array(k * d);
  const gradB = new Float64Array(k);

  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    gradW.fill(0);
    gradB.fill(0);
    for (let s = 0; s < n; s++) {
      const x = xs[s];
      let zMax = -Infinity;
      for (let c = 0; c < k; c++) {
        let z = b[c];
        const off = c * d;
        for (let i = 0; i < d; i++) {
          z += w[off + i] * x[i];
        }
        probs[c] = z;
        if (z > zMax) zMax = z;
      }
      let total = 0;
      for (let c = 0; c < k; c++) {
        probs[c] = Math.exp(probs[c] - zMax);
        total += probs[c];
      }
      for (let c = 0; c < k; c++) {
        const delta = probs[c] / total - (ys[s] === c ? 1 : 0);
        gradB[c] += delta;
        const off = c * d;
        for (let i = 0; i < d; i++) {
          gradW[off + i] += delta * x[i];
        }
      }
    }
    const scale = opts.lr / n;
    for (let i = 0; i < k * d; i++) {
      w[i] -= scale * gradW[i];
    }
    for (let c = 0; c < k; c++) {
      b[c] -= scale * gradB[c];
    }
  }
  return { weight: w, bias: b };
}

export function predict(model: TrainedModel, x: Float64Array): number {
  let best = 0;
  let bestZ = -Infinity;
  for (let c = 0; c < 10; c++) {
    let z = model.bias[c];
    for (let i = 0; i < 64; i++) {
      z += model.weight[c * 64 + i] * x[i];
    }
    if (z > bestZ) {
      bestZ = z;
      best = c;
    }
  }
  return best;
}

export interface DigitsDemoResult {
  bundles: { name: string; bundle: Bundle }[];
  manifest: {
    dataset: string;
    n_test: number;
    epsilon: number;
    nominal_correct: number;
    labels: number[];
    predictions: number[];
  };
}

export function marginClauses(label: number, k: number): { c: number[][]; d: number[] }[] {
  const clauses: { c: number[][]; d: number[] }[] = [];
  for (let other = 0; other < k; other++) {
    if (other === label) continue;
    const row = new Array(k).fill(0);
    row[label] = 1;
    row[other] = -1;
    clauses.push({ c: [row], d: [0] });
  }
  return clauses;
}

export function makeDigitsDemo(
  data: DigitsData,
  opts: { epsilon: number; seed: number; testSize: number; lr: number; epochs: number },
): DigitsDemoResult {
  const idx = lcgShuffleIndices(data.features.length, opts.seed);
  const xs = idx.map((i) => data.features[i]);
  const ys = idx.map((i) => data.labels[i]);
  const nTest = opts.testSize;
  const xTrain = xs.slice(0, xs.length - nTest);
  const yTrain = ys.slice(0, ys.length - nTest);
  const xTest = xs.slice(xs.length - nTest);
  const yTest = ys.slice(ys.length - nTest);

  const model = trainSoftmaxRegression(xTrain, yTrain, { lr: opts.lr, epochs: opts.epochs });

  // bundle weights live on the binary32 grid; predictions use the same
  // quantized weights so the manifest matches what the checker sees
  const w32 = Float64Array.from(model.weight, round32);
  const b32 = Float64Array.from(model.bias, round32);
  const quantized: TrainedModel = { weight: w32, bias: b32 };

  const chain: ExportedChain = {
    inputDim: 64,
    hadFlatten: false,
    layers: [
      {
        weightBits: [...w32].map(f32Bits),
        biasBits: [...b32].map(f32Bits),
        outDim: 10,
        inDim: 64,
        reluAfter: false,
      },
    ],
  };

  const bundles: { name: string; bundle: Bundle }[] = [];
  const predictions: number[] = [];
  let nominalCorrect = 0;
  for (let t = 0; t < nTest; t++) {
    const x32 = Float64Array.from(xTest[t], round32);
    const pred = predict(quantized, x32);
    predictions.push(pred);
    const correct = pred === yTest[t];
    if (correct) nominalCorrect++;
    const bundle = chainToBundle(chain, {
      graphId: `digits-${String(t).padStart(3, '0')}`,
      regionLo: [...x32].map((v) => v - opts.epsilon),
      regionHi: [...x32].map((v) => v + opts.epsilon),
      metadata: {
        index: t,
        label: yTest[t],
        prediction: pred,
        nominally_correct: correct,
        epsilon: opts.epsilon,
      },
    });
    bundle.property = { outputSize: 10, clauses: marginClauses(yTest[t], 10) };
    bundles.push({ name: `digits_${String(t).padStart(3, '0')}.json`, bundle });
  }

  return {
    bundles,
    manifest: {
      dataset: 'digits-8x8',
      n_test: nTest,
      epsilon: opts.epsilon,
      nominal_correct: nominalCorrect,
      labels: yTest,
      predictions,
    },
  };
}
