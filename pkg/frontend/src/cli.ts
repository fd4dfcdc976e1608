#!/usr/bin/env node
// Producer-side CLI: `export` converts ONNX (+ optional VNN-LIB) into a
// bundle; `digits-demo` trains the digits linear classifier and emits the
// per-instance robustness bundles plus a manifest.

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import { loadDigitsCsv, makeDigitsDemo } from './digits.js';
import { exportModel } from './exporter.js';
import { parseModel } from './onnx.js';
import { parseVnnlib } from './vnnlib.js';
import { serializeBundle } from './bundle.js';

function parseArgs(argv: string[]): { command: string; flags: Map<string, string> } {
  const [command, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    if (!rest[i].startsWith('--') || i + 1 >= rest.length) {
      throw new Error(`malformed flag ${rest[i]}`);
    }
    flags.set(rest[i].slice(2), rest[i + 1]);
  }
  return { command, flags };
}

function need(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (v === undefined) {
    throw new Error(`missing required flag --${name}`);
  }
  return v;
}

export function main(argv: string[]): number {
  const { command, flags } = parseArgs(argv);
  if (command === 'export') {
    const onnxPath = need(flags, 'onnx');
    const outPath = need(flags, 'out');
    const model = parseModel(new Uint8Array(readFileSync(onnxPath)));
    const vnnlibPath = flags.get('vnnlib');
    const property = vnnlibPath ? parseVnnlib(readFileSync(vnnlibPath, 'utf-8')) : undefined;
    const graphId = flags.get('graph-id') ?? onnxPath.replace(/.*\//, '').replace(/\.onnx$/, '');
    const bundle = exportModel(model, { graphId, property });
    writeFileSync(outPath, serializeBundle(bundle));
    console.log(JSON.stringify({ command: 'export', out: outPath, graph_id: graphId }));
    return 0;
  }
  if (command === 'digits-demo') {
    const outDir = need(flags, 'out');
    const dataPath = flags.get('data') ?? new URL('../data/digits.csv.gz', import.meta.url).pathname;
    const epsilon = Number(flags.get('epsilon') ?? '0.02');
    const seed = Number(flags.get('seed') ?? '12345');
    const testSize = Number(flags.get('test-size') ?? '360');
    const lr = Number(flags.get('lr') ?? '2.0');
    const epochs = Number(flags.get('epochs') ?? '600');
    const data = loadDigitsCsv(dataPath);
    const result = makeDigitsDemo(data, { epsilon, seed, testSize, lr, epochs });
    mkdirSync(outDir, { recursive: true });
    for (const { name, bundle } of result.bundles) {
      writeFileSync(join(outDir, name), serializeBundle(bundle));
    }
    writeFileSync(join(outDir, 'manifest.json'), JSON.stringify(result.manifest, null, 1) + '\n');
    console.log(
      JSON.stringify({
        command: 'digits-demo',
        out: outDir,
        n_test: result.manifest.n_test,
        nominal_correct: result.manifest.nominal_correct,
        epsilon,
      }),
    );
    return 0;
  }
  console.error(`unknown command ${command}; expected export | digits-demo`);
  return 2;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].replace(/.*\//, ''));
if (invokedDirectly) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(2);
  }
}
