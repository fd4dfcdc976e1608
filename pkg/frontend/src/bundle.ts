// Canonical bundle emission matching the boundflow schema (schema_version
// 1): sorted keys, binary32 hex payloads with decimal mirrors. Also a
// plain reference evaluator of the exported structure, used as the
// source-side fidelity oracle.

import { f32FromBits, shortestDecimal, toHex } from './float.js';

export interface BundleNode {
  id: number;
  op: string;
  parents: number[];
  out_shape: number[];
  [key: string]: unknown;
}

export interface BundleParam {
  shape: number[];
  bits: number[];
}

export interface LinearRowJson {
  c: number[];
  d: number[];
}

export interface Bundle {
  graphId: string;
  nodes: BundleNode[];
  outputId: number;
  params: Map<string, BundleParam>;
  inputRegion?: { nodeId: number; loBits: number[]; hiBits: number[] };
  property?: { outputSize: number; clauses: { c: number[][]; d: number[] }[] };
  metadata?: Record<string, unknown>;
}

function emitValues(bits: number[]): { hex: string[]; dec: string[] } {
  return {
    hex: bits.map((b) => toHex(b)),
    dec: bits.map((b) => shortestDecimal(f32FromBits(b))),
  };
}

function sortObject(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortObject);
  }
  if (value !== null && typeof value === 'object') {
    const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
      a < b ? -1 : a > b ? 1 : 0,
    );
    const out: Record<string, unknown> = {};
    for (const [k, v] of entries) {
      out[k] = sortObject(v);
    }
    return out;
  }
  return value;
}

export function serializeBundle(bundle: Bundle): string {
  const obj: Record<string, unknown> = {
    schema_version: 1,
    graph_id: bundle.graphId,
    nodes: bundle.nodes,
    output_id: bundle.outputId,
    params: Object.fromEntries(
      [...bundle.params.entries()].map(([name, p]) => [
        name,
        { shape: p.shape, ...emitValues(p.bits) },
      ]),
    ),
  };
  if (bundle.inputRegion) {
    obj.input_region = {
      [String(bundle.inputRegion.nodeId)]: {
        lo: bundle.inputRegion.loBits.map(toHex),
        hi: bundle.inputRegion.hiBits.map(toHex),
      },
    };
  }
  if (bundle.property) {
    obj.property = {
      output_size: bundle.property.outputSize,
      clauses: bundle.property.clauses,
    };
  }
  if (bundle.metadata && Object.keys(bundle.metadata).length > 0) {
    obj.metadata = bundle.metadata;
  }
  return JSON.stringify(sortObject(obj), null, 1) + '\n';
}

// --- reference evaluator ---------------------------------------------------------

export interface ReferenceLayer {
  weight: number[][]; // [out][in], binary64 values of the float32 weights
  bias: number[];
  relu: boolean;
}

export function referenceForward(layers: ReferenceLayer[], x: number[]): number[] {
  let current = x;
  for (const layer of layers) {
    const next: number[] = [];
    for (let j = 0; j < layer.weight.length; j++) {
      let acc = layer.bias[j];
      const row = layer.weight[j];
      for (let i = 0; i < row.length; i++) {
        acc += row[i] * current[i];
      }
      next.push(layer.relu ? Math.max(acc, 0) : acc);
    }
    current = next;
  }
  return current;
}
