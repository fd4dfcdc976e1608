// End-to-end digits robustness case study: train the 64 -> 10 linear
// classifier, emit per-instance bundles, certify margins through the
// primary tool, and compare the counts against the case study's reference
// figures (349/360 nominally correct, 318/360 certified at eps = 0.02,
// with +-10 / +-15 tolerance for training variation).

import { execFileSync } from 'node:child_process';
import { mkdirSync, mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { beforeAll, describe, expect, it } from 'vitest';

import { serializeBundle } from '../src/bundle.js';
import {
  DigitsDemoResult,
  lcgShuffleIndices,
  loadDigitsCsv,
  makeDigitsDemo,
  marginClauses,
} from '../src/digits.js';

const HERE = dirname(fileURLToPath(import.meta.url));
const DATA = join(HERE, '..', 'data', 'digits.csv.gz');

function runPrimary(args: string[]): { code: number; report: any } {
  let out = '';
  let code = 0;
  try {
    out = execFileSync('python3', ['-m', 'boundflow.cli', ...args], { encoding: 'utf-8' });
  } catch (err: any) {
    code = err.status ?? 1;
    out = String(err.stdout ?? '');
  }
  return { code, report: out.trim().startsWith('{') ? JSON.parse(out) : null };
}

describe('digits dataset plumbing', () => {
  it('loads 1797 samples of 64 scaled features', () => {
    const data = loadDigitsCsv(DATA);
    expect(data.features).toHaveLength(1797);
    expect(data.labels).toHaveLength(1797);
    expect(Math.max(...data.features[0])).toBeLessThanOrEqual(1.0);
    expect(new Set(data.labels).size).toBe(10);
  });

  it('shuffle is deterministic', () => {
    expect(lcgShuffleIndices(10, 12345)).toEqual(lcgShuffleIndices(10, 12345));
    expect(lcgShuffleIndices(10, 12345)).not.toEqual(lcgShuffleIndices(10, 54321));
  });

  it('margin clauses cover the other nine classes', () => {
    const clauses = marginClauses(3, 10);
    expect(clauses).toHaveLength(9);
    expect(clauses[0].c[0][3]).toBe(1);
  });
});

describe('digits robustness case study', () => {
  let demo: DigitsDemoResult;
  let outDir: string;

  beforeAll(() => {
    const data = loadDigitsCsv(DATA);
    demo = makeDigitsDemo(data, {
      epsilon: 0.02,
      seed: 12345,
      testSize: 360,
      lr: 2.0,
      epochs: 600,
    });
    outDir = mkdtempSync(join(tmpdir(), 'bf-digits-'));
    for (const { name, bundle } of demo.bundles) {
      writeFileSync(join(outDir, name), serializeBundle(bundle));
    }
    writeFileSync(join(outDir, 'manifest.json'), JSON.stringify(demo.manifest, null, 1));
  });

  it('nominal accuracy lands within +-10 of 349/360', () => {
    expect(demo.manifest.n_test).toBe(360);
    expect(demo.manifest.nominal_correct).toBeGreaterThanOrEqual(339);
    expect(demo.manifest.nominal_correct).toBeLessThanOrEqual(359);
  });

  it('certified-robust count lands within +-15 of 318/360 at eps=0.02', () => {
    const { code, report } = runPrimary(['vnn-check', outDir, '--method', 'ibp']);
    expect(report).not.toBeNull();
    expect(report.n).toBe(360);
    // eslint-disable-next-line no-console
    console.log(
      `digits: nominal ${demo.manifest.nominal_correct}/360, certified ${report.safe}/360`,
    );
    expect(report.safe).toBeGreaterThanOrEqual(303);
    expect(report.safe).toBeLessThanOrEqual(333);
    // certified is a subset of nominally correct, so unknown instances exist
    expect(code).toBe(1);
    expect(report.safe).toBeLessThanOrEqual(demo.manifest.nominal_correct);
  });

  it('margin checks run under 1 ms per instance from precomputed bounds', () => {
    const script = [
      'import json, time',
      'from pathlib import Path',
      'from boundflow.bundle import load_bundle',
      'from boundflow.bounds import REAL_BACKING, run_ibp',
      'from boundflow.certs import check_margin',
      'from boundflow.cli import _region_entries',
      'paths = sorted(Path(DIR).glob("digits_*.json"))',
      'bounds = []',
      'for p in paths:',
      '    b = load_bundle(p.read_bytes(), str(p))',
      '    g = b.well_typed()',
      '    entries = _region_entries(b, g, "real", None)',
      '    boxes = run_ibp(g, dict(b.param_store_float().items()), entries, REAL_BACKING)',
      '    out = boxes[g.output_id]',
      '    bounds.append(([float(v) for v in out.lower.data], [float(v) for v in out.upper.data], b.metadata["label"]))',
      't0 = time.perf_counter()',
      'certified = 0',
      'for lo, hi, label in bounds:',
      '    certified += check_margin(lo, hi, label)',
      'elapsed_ms = (time.perf_counter() - t0) * 1000.0',
      'print(json.dumps({"per_instance_ms": elapsed_ms / len(bounds), "certified": certified}))',
    ]
      .join('\n')
      .replace('DIR', JSON.stringify(outDir));
    const out = execFileSync('python3', ['-c', script], { encoding: 'utf-8' });
    const result = JSON.parse(out.trim().split('\n').pop()!);
    // eslint-disable-next-line no-console
    console.log(`margin check: ${result.per_instance_ms.toFixed(4)} ms/instance`);
    expect(result.per_instance_ms).toBeLessThan(1.0);
    expect(result.certified).toBeGreaterThanOrEqual(303);
  });

  it('eps=0 point boxes certify exactly the nominally correct set', () => {
    const data = loadDigitsCsv(DATA);
    const point = makeDigitsDemo(data, {
      epsilon: 0,
      seed: 12345,
      testSize: 60, // subset keeps the run snappy; same split prefix
      lr: 2.0,
      epochs: 120,
    });
    const dir = mkdtempSync(join(tmpdir(), 'bf-digits0-'));
    for (const { name, bundle } of point.bundles) {
      writeFileSync(join(dir, name), serializeBundle(bundle));
    }
    const { report } = runPrimary(['vnn-check', dir, '--method', 'ibp']);
    expect(report).not.toBeNull();
    expect(report.safe).toBe(point.manifest.nominal_correct);
  });
});
