import { execFileSync } from 'node:child_process';
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { main } from '../src/cli.js';
import { buildMlpModel } from '../src/onnx.js';

function smallModel(): Uint8Array {
  const weight = Float32Array.from([0.5, -0.25, 1.0, 0.75]);
  const bias = Float32Array.from([0.1, -0.1]);
  return buildMlpModel(2, [{ weight, bias, inDim: 2, outDim: 2, relu: true }]);
}

describe('frontend cli', () => {
  it('export converts onnx plus vnnlib into a validating bundle', () => {
    const dir = mkdtempSync(join(tmpdir(), 'bf-cli-'));
    const onnxPath = join(dir, 'm.onnx');
    writeFileSync(onnxPath, smallModel());
    const vnnlibPath = join(dir, 'p.vnnlib');
    writeFileSync(
      vnnlibPath,
      [
        '(declare-const X_0 Real)',
        '(declare-const X_1 Real)',
        '(declare-const Y_0 Real)',
        '(declare-const Y_1 Real)',
        '(assert (>= X_0 -0.5)) (assert (<= X_0 0.5))',
        '(assert (>= X_1 -0.5)) (assert (<= X_1 0.5))',
        '(assert (<= Y_0 Y_1))',
      ].join('\n'),
    );
    const outPath = join(dir, 'bundle.json');
    const code = main(['export', '--onnx', onnxPath, '--vnnlib', vnnlibPath, '--out', outPath]);
    expect(code).toBe(0);
    expect(existsSync(outPath)).toBe(true);
    const bundle = JSON.parse(readFileSync(outPath, 'utf-8'));
    expect(bundle.property.output_size).toBe(2);
    expect(bundle.input_region['0'].lo).toHaveLength(2);

    const report = JSON.parse(
      execFileSync('python3', ['-m', 'boundflow.cli', 'validate', outPath], { encoding: 'utf-8' }),
    );
    expect(report.status).toBe('ok');
  });

  it('digits-demo writes bundles and a manifest', () => {
    const outDir = mkdtempSync(join(tmpdir(), 'bf-cli-digits-'));
    const code = main([
      'digits-demo',
      '--out', outDir,
      '--epochs', '3',
      '--test-size', '20',
    ]);
    expect(code).toBe(0);
    const manifest = JSON.parse(readFileSync(join(outDir, 'manifest.json'), 'utf-8'));
    expect(manifest.n_test).toBe(20);
    expect(existsSync(join(outDir, 'digits_000.json'))).toBe(true);
    expect(existsSync(join(outDir, 'digits_019.json'))).toBe(true);
  });

  it('unknown commands exit with 2', () => {
    expect(main(['bogus'])).toBe(2);
  });
});
