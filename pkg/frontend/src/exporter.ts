// ONNX + VNN-LIB -> bundle conversion (the untrusted producer side).
//
// Supported ONNX fragment: one chain of Flatten / Gemm(alpha=1, beta=1) /
// MatMul followed by Add / Relu over float32 initializers. Weights are
// carried bit-for-bit from the initializer payload into the bundle hex.

import { f32FromBits, roundDown32, roundUp32, f32Bits } from './float.js';
import { OnnxModel, OnnxNode, OnnxTensor, OnnxUnsupported } from './onnx.js';
import { Bundle, BundleNode, ReferenceLayer } from './bundle.js';
import { VnnlibProperty } from './vnnlib.js';

export interface ExportedLayer {
  weightBits: number[]; // [out * in] row-major
  biasBits: number[];
  outDim: number;
  inDim: number;
  reluAfter: boolean;
}

export interface ExportedChain {
  inputDim: number;
  hadFlatten: boolean;
  layers: ExportedLayer[];
}

const ALLOWED_OPS = new Set(['Gemm', 'MatMul', 'Add', 'Relu', 'Flatten']);

function attrInt(node: OnnxNode, name: string, dflt: number): number {
  const attr = node.attributes.get(name);
  return attr?.i ?? dflt;
}

function attrFloat(node: OnnxNode, name: string, dflt: number): number {
  const attr = node.attributes.get(name);
  return attr?.f ?? dflt;
}

function transposeBits(t: OnnxTensor): number[] {
  const [rows, cols] = t.dims;
  const out = new Array<number>(rows * cols);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      out[c * rows + r] = t.bits[r * cols + c];
    }
  }
  return out;
}

export function extractChain(model: OnnxModel): ExportedChain {
  const graph = model.graph;
  for (const node of graph.nodes) {
    if (!ALLOWED_OPS.has(node.opType)) {
      throw new OnnxUnsupported(`operator ${node.opType} is outside the supported allowlist`);
    }
  }
  const byInput = new Map<string, OnnxNode[]>();
  for (const node of graph.nodes) {
    for (const input of node.inputs) {
      const list = byInput.get(input) ?? [];
      list.push(node);
      byInput.set(input, list);
    }
  }
  const graphInputs = graph.inputs.filter((i) => !graph.initializers.has(i.name));
  if (graphInputs.length !== 1) {
    throw new OnnxUnsupported(`expected exactly one graph input, got ${graphInputs.length}`);
  }
  const inputName = graphInputs[0].name;
  const declaredDims = graphInputs[0].dims.filter((d) => d > 1);
  let inputDim = declaredDims.length === 1 ? declaredDims[0] : -1;

  const layers: ExportedLayer[] = [];
  let hadFlatten = false;
  let current = inputName;
  let width = inputDim;

  const initializer = (name: string): OnnxTensor => {
    const t = graph.initializers.get(name);
    if (!t) {
      throw new OnnxUnsupported(`expected an initializer for ${name}`);
    }
    return t;
  };

  for (let guard = 0; guard < graph.nodes.length + 1; guard++) {
    const consumers = (byInput.get(current) ?? []).filter(
      (n) => n.opType !== 'Add' || n.inputs[0] === current,
    );
    if (consumers.length === 0) {
      break;
    }
    if (consumers.length > 1) {
      throw new OnnxUnsupported(`value ${current} feeds ${consumers.length} nodes; only chains are supported`);
    }
    const node = consumers[0];
    if (node.opType === 'Flatten') {
      hadFlatten = true;
      current = node.outputs[0];
    } else if (node.opType === 'Relu') {
      if (layers.length === 0) {
        throw new OnnxUnsupported('Relu before any affine layer');
      }
      layers[layers.length - 1].reluAfter = true;
      current = node.outputs[0];
    } else if (node.opType === 'Gemm') {
      if (attrFloat(node, 'alpha', 1) !== 1 || attrFloat(node, 'beta', 1) !== 1) {
        throw new OnnxUnsupported('Gemm with alpha/beta != 1');
      }
      if (attrInt(node, 'transA', 0) !== 0) {
        throw new OnnxUnsupported('Gemm with transA');
      }
      const w = initializer(node.inputs[1]);
      if (w.dims.length !== 2) {
        throw new OnnxUnsupported(`Gemm weight ${node.inputs[1]} must be 2-D`);
      }
      const transB = attrInt(node, 'transB', 0) === 1;
      const [outDim, inDim] = transB ? w.dims : [w.dims[1], w.dims[0]];
      const weightBits = transB ? [...w.bits] : transposeBits(w);
      const bias = node.inputs.length > 2 ? initializer(node.inputs[2]) : null;
      const biasBits = bias ? [...bias.bits] : new Array<number>(outDim).fill(0);
      if (bias && bias.bits.length !== outDim) {
        throw new OnnxUnsupported('Gemm bias length mismatch');
      }
      if (width !== -1 && width !== inDim) {
        throw new OnnxUnsupported(`Gemm input width ${inDim} does not match chain width ${width}`);
      }
      layers.push({ weightBits, biasBits, outDim, inDim, reluAfter: false });
      width = outDim;
      if (inputDim === -1 && layers.length === 1) {
        inputDim = inDim;
      }
      current = node.outputs[0];
    } else if (node.opType === 'MatMul') {
      const w = initializer(node.inputs[1]);
      if (w.dims.length !== 2) {
        throw new OnnxUnsupported('MatMul weight must be 2-D');
      }
      const [inDim, outDim] = w.dims;
      if (width !== -1 && width !== inDim) {
        throw new OnnxUnsupported(`MatMul input width ${inDim} does not match chain width ${width}`);
      }
      let biasBits = new Array<number>(outDim).fill(0);
      let outName = node.outputs[0];
      const next = (byInput.get(outName) ?? [])[0];
      if (next && next.opType === 'Add') {
        const biasName = next.inputs[0] === outName ? next.inputs[1] : next.inputs[0];
        const bias = initializer(biasName);
        if (bias.bits.length !== outDim) {
          throw new OnnxUnsupported('Add bias length mismatch');
        }
        biasBits = [...bias.bits];
        outName = next.outputs[0];
      }
      layers.push({ weightBits: transposeBits(w), biasBits, outDim, inDim, reluAfter: false });
      width = outDim;
      if (inputDim === -1 && layers.length === 1) {
        inputDim = inDim;
      }
      current = outName;
    } else if (node.opType === 'Add') {
      throw new OnnxUnsupported('Add without a preceding MatMul');
    }
  }
  if (layers.length === 0) {
    throw new OnnxUnsupported('no affine layers found on the input chain');
  }
  if (inputDim === -1) {
    inputDim = layers[0].inDim;
  }
  return { inputDim, hadFlatten, layers };
}

export interface BuildBundleOptions {
  graphId: string;
  property?: VnnlibProperty;
  regionLo?: number[]; // binary64 endpoints, rounded outward onto the grid
  regionHi?: number[];
  metadata?: Record<string, unknown>;
}

export function chainToBundle(chain: ExportedChain, opts: BuildBundleOptions): Bundle {
  const nodes: BundleNode[] = [];
  const params = new Map<string, { shape: number[]; bits: number[] }>();
  let id = 0;
  const inputId = id;
  nodes.push({ id: id++, op: 'input', parents: [], out_shape: [chain.inputDim] });
  let currentId = inputId;
  let width = chain.inputDim;

  if (chain.hadFlatten) {
    nodes.push({ id, op: 'flatten', parents: [currentId], out_shape: [width] });
    currentId = id++;
  }
  chain.layers.forEach((layer, idx) => {
    const wKey = `W${idx}`;
    const bKey = `B${idx}`;
    params.set(wKey, { shape: [layer.outDim, layer.inDim], bits: layer.weightBits });
    params.set(bKey, { shape: [layer.outDim], bits: layer.biasBits });
    nodes.push({
      id,
      op: 'linear',
      parents: [currentId],
      out_shape: [layer.outDim],
      in_dim: layer.inDim,
      out_dim: layer.outDim,
      weight_key: wKey,
      bias_key: bKey,
    });
    currentId = id++;
    width = layer.outDim;
    if (layer.reluAfter) {
      nodes.push({ id, op: 'relu', parents: [currentId], out_shape: [width] });
      currentId = id++;
    }
  });
  // output alias keeps a stable terminal node regardless of chain tail
  nodes.push({ id, op: 'reshape', parents: [currentId], out_shape: [width], target: [width] });
  currentId = id++;

  const bundle: Bundle = {
    graphId: opts.graphId,
    nodes,
    outputId: currentId,
    params,
    metadata: opts.metadata,
  };
  if (opts.regionLo && opts.regionHi) {
    if (opts.regionLo.length !== chain.inputDim) {
      throw new OnnxUnsupported(
        `input region has ${opts.regionLo.length} dims, network expects ${chain.inputDim}`,
      );
    }
    bundle.inputRegion = {
      nodeId: inputId,
      loBits: opts.regionLo.map((v) => f32Bits(roundDown32(v))),
      hiBits: opts.regionHi.map((v) => f32Bits(roundUp32(v))),
    };
  }
  if (opts.property) {
    if (opts.property.numOutputs !== width) {
      throw new OnnxUnsupported(
        `property has ${opts.property.numOutputs} outputs, network produces ${width}`,
      );
    }
    bundle.property = {
      outputSize: width,
      clauses: opts.property.clauses.map((rows) => ({
        c: rows.map((r) => r.c),
        d: rows.map((r) => r.d),
      })),
    };
  }
  return bundle;
}

export function exportModel(model: OnnxModel, opts: BuildBundleOptions & { property?: VnnlibProperty }): Bundle {
  const chain = extractChain(model);
  const merged: BuildBundleOptions = { ...opts };
  if (opts.property) {
    if (opts.property.numInputs !== chain.inputDim) {
      throw new OnnxUnsupported(
        `property has ${opts.property.numInputs} inputs, network expects ${chain.inputDim}`,
      );
    }
    merged.regionLo = opts.property.inputLo;
    merged.regionHi = opts.property.inputHi;
  }
  return chainToBundle(chain, merged);
}

export function chainReferenceLayers(chain: ExportedChain): ReferenceLayer[] {
  return chain.layers.map((layer) => ({
    weight: Array.from({ length: layer.outDim }, (_, j) =>
      layer.weightBits.slice(j * layer.inDim, (j + 1) * layer.inDim).map(f32FromBits),
    ),
    bias: layer.biasBits.map(f32FromBits),
    relu: layer.reluAfter,
  }));
}
