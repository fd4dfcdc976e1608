// ONNX protobuf decoding for the exporter's supported fragment: a single
// chain of Gemm / MatMul(+Add) / Relu / Flatten nodes with float32
// initializers. Anything outside the subset aborts with a named error.

import {
  Field,
  ProtoReader,
  ProtoWriter,
  WIRE_FIXED32,
  WIRE_LEN,
  WIRE_VARINT,
  decodePackedFloats,
  decodePackedVarints,
  decodeString,
} from './proto.js';
import { f32Bits } from './float.js';

export class OnnxUnsupported extends Error {}

export interface OnnxTensor {
  name: string;
  dims: number[];
  // float32 payload as raw bit patterns (preserves the initializer bytes)
  bits: number[];
}

export interface OnnxAttribute {
  name: string;
  i?: number;
  f?: number;
  tensor?: OnnxTensor;
}

export interface OnnxNode {
  opType: string;
  name: string;
  inputs: string[];
  outputs: string[];
  attributes: Map<string, OnnxAttribute>;
}

export interface OnnxValueInfo {
  name: string;
  dims: number[]; // -1 for symbolic dims
}

export interface OnnxGraph {
  name: string;
  nodes: OnnxNode[];
  initializers: Map<string, OnnxTensor>;
  inputs: OnnxValueInfo[];
  outputs: OnnxValueInfo[];
}

export interface OnnxModel {
  irVersion: number;
  graph: OnnxGraph;
}

const TENSOR_FLOAT = 1;

function parseTensor(bytes: Uint8Array): OnnxTensor {
  const tensor: OnnxTensor = { name: '', dims: [], bits: [] };
  let dataType = TENSOR_FLOAT;
  let rawData: Uint8Array | null = null;
  const floatData: number[] = [];
  for (const field of new ProtoReader(bytes).fields()) {
    switch (field.fieldNumber) {
      case 1: // dims
        if (field.wireType === WIRE_VARINT) {
          tensor.dims.push(Number(field.varint));
        } else if (field.wireType === WIRE_LEN) {
          tensor.dims.push(...decodePackedVarints(field.bytes!).map(Number));
        }
        break;
      case 2:
        dataType = Number(field.varint);
        break;
      case 4: // float_data
        if (field.wireType === WIRE_FIXED32) {
          floatData.push(field.fixed32!);
          // fixed32 here is the raw bit pattern already
        } else if (field.wireType === WIRE_LEN) {
          for (const v of decodePackedFloats(field.bytes!)) {
            floatData.push(f32Bits(v));
          }
        }
        break;
      case 8:
        tensor.name = decodeString(field.bytes!);
        break;
      case 9:
        rawData = field.bytes!;
        break;
      default:
        break;
    }
  }
  if (dataType !== TENSOR_FLOAT) {
    throw new OnnxUnsupported(
      `initializer ${tensor.name}: only float32 tensors supported, got data_type ${dataType}`,
    );
  }
  if (rawData !== null) {
    if (rawData.length % 4 !== 0) {
      throw new OnnxUnsupported(`initializer ${tensor.name}: raw_data length not a multiple of 4`);
    }
    const view = new DataView(rawData.buffer, rawData.byteOffset, rawData.length);
    for (let i = 0; i < rawData.length; i += 4) {
      tensor.bits.push(view.getUint32(i, true));
    }
  } else {
    tensor.bits = floatData;
  }
  const size = tensor.dims.reduce((a, b) => a * b, 1);
  if (tensor.bits.length !== size) {
    throw new OnnxUnsupported(
      `initializer ${tensor.name}: ${tensor.bits.length} values for dims [${tensor.dims}]`,
    );
  }
  return tensor;
}

function parseAttribute(bytes: Uint8Array): OnnxAttribute {
  const attr: OnnxAttribute = { name: '' };
  for (const field of new ProtoReader(bytes).fields()) {
    switch (field.fieldNumber) {
      case 1:
        attr.name = decodeString(field.bytes!);
        break;
      case 2: {
        const view = new DataView(new ArrayBuffer(4));
        view.setUint32(0, field.fixed32!, true);
        attr.f = view.getFloat32(0, true);
        break;
      }
      case 3:
        attr.i = Number(BigInt.asIntN(64, field.varint!));
        break;
      case 5:
        attr.tensor = parseTensor(field.bytes!);
        break;
      default:
        break;
    }
  }
  return attr;
}

function parseNode(bytes: Uint8Array): OnnxNode {
  const node: OnnxNode = { opType: '', name: '', inputs: [], outputs: [], attributes: new Map() };
  for (const field of new ProtoReader(bytes).fields()) {
    switch (field.fieldNumber) {
      case 1:
        node.inputs.push(decodeString(field.bytes!));
        break;
      case 2:
        node.outputs.push(decodeString(field.bytes!));
        break;
      case 3:
        node.name = decodeString(field.bytes!);
        break;
      case 4:
        node.opType = decodeString(field.bytes!);
        break;
      case 5: {
        const attr = parseAttribute(field.bytes!);
        node.attributes.set(attr.name, attr);
        break;
      }
      default:
        break;
    }
  }
  return node;
}

function parseValueInfo(bytes: Uint8Array): OnnxValueInfo {
  const info: OnnxValueInfo = { name: '', dims: [] };
  for (const field of new ProtoReader(bytes).fields()) {
    if (field.fieldNumber === 1) {
      info.name = decodeString(field.bytes!);
    } else if (field.fieldNumber === 2) {
      // TypeProto -> tensor_type(1) -> shape(2) -> dim(1) -> dim_value(1)
      for (const t of new ProtoReader(field.bytes!).fields()) {
        if (t.fieldNumber !== 1 || t.wireType !== WIRE_LEN) continue;
        for (const tt of new ProtoReader(t.bytes!).fields()) {
          if (tt.fieldNumber !== 2 || tt.wireType !== WIRE_LEN) continue;
          for (const dim of new ProtoReader(tt.bytes!).fields()) {
            if (dim.fieldNumber !== 1 || dim.wireType !== WIRE_LEN) continue;
            let value = -1;
            for (const d of new ProtoReader(dim.bytes!).fields()) {
              if (d.fieldNumber === 1 && d.wireType === WIRE_VARINT) {
                value = Number(d.varint);
              }
            }
            info.dims.push(value);
          }
        }
      }
    }
  }
  return info;
}

function parseGraph(bytes: Uint8Array): OnnxGraph {
  const graph: OnnxGraph = { name: '', nodes: [], initializers: new Map(), inputs: [], outputs: [] };
  for (const field of new ProtoReader(bytes).fields()) {
    switch (field.fieldNumber) {
      case 1:
        graph.nodes.push(parseNode(field.bytes!));
        break;
      case 2:
        graph.name = decodeString(field.bytes!);
        break;
      case 5: {
        const tensor = parseTensor(field.bytes!);
        graph.initializers.set(tensor.name, tensor);
        break;
      }
      case 11:
        graph.inputs.push(parseValueInfo(field.bytes!));
        break;
      case 12:
        graph.outputs.push(parseValueInfo(field.bytes!));
        break;
      default:
        break;
    }
  }
  return graph;
}

export function parseModel(bytes: Uint8Array): OnnxModel {
  let irVersion = 0;
  let graph: OnnxGraph | null = null;
  for (const field of new ProtoReader(bytes).fields()) {
    if (field.fieldNumber === 1 && field.wireType === WIRE_VARINT) {
      irVersion = Number(field.varint);
    } else if (field.fieldNumber === 7 && field.wireType === WIRE_LEN) {
      graph = parseGraph(field.bytes!);
    }
  }
  if (graph === null) {
    throw new OnnxUnsupported('model has no graph');
  }
  return { irVersion, graph };
}

// --- builder (tests and synthetic suites) --------------------------------------

export interface BuildLayer {
  weight: Float32Array; // [out, in] row-major
  bias: Float32Array;
  outDim: number;
  inDim: number;
  relu: boolean;
}

export function buildMlpModel(
  inputDim: number,
  layers: BuildLayer[],
  opts: { flattenFirst?: boolean; useGemm?: boolean; transB?: boolean } = {},
): Uint8Array {
  const useGemm = opts.useGemm ?? true;
  const transB = opts.transB ?? true;

  const tensor = (name: string, dims: number[], data: Float32Array): ProtoWriter => {
    const w = new ProtoWriter();
    for (const d of dims) {
      w.writeVarint(1, d);
    }
    w.writeVarint(2, TENSOR_FLOAT);
    w.writeString(8, name);
    const raw = new Uint8Array(data.length * 4);
    const view = new DataView(raw.buffer);
    data.forEach((v, i) => view.setFloat32(i * 4, v, true));
    w.writeBytes(9, raw);
    return w;
  };

  const valueInfo = (name: string, dims: number[]): ProtoWriter => {
    const dimList = new ProtoWriter();
    for (const d of dims) {
      const one = new ProtoWriter();
      one.writeVarint(1, d);
      dimList.writeMessage(1, one);
    }
    const shape = new ProtoWriter();
    const tensorType = new ProtoWriter();
    tensorType.writeVarint(1, TENSOR_FLOAT);
    tensorType.writeMessage(2, dimList);
    shape.writeMessage(1, tensorType);
    const w = new ProtoWriter();
    w.writeString(1, name);
    w.writeMessage(2, shape);
    return w;
  };

  const graph = new ProtoWriter();
  let current = 'input';

  if (opts.flattenFirst) {
    const node = new ProtoWriter();
    node.writeString(1, current);
    node.writeString(2, 'flat0');
    node.writeString(4, 'Flatten');
    const axisAttr = new ProtoWriter();
    axisAttr.writeString(1, 'axis');
    axisAttr.writeVarint(3, 1);
    axisAttr.writeVarint(20, 2); // AttributeProto.INT
    node.writeMessage(5, axisAttr);
    graph.writeMessage(1, node);
    current = 'flat0';
  }

  layers.forEach((layer, idx) => {
    const wName = `W${idx}`;
    const bName = `B${idx}`;
    const zName = `z${idx}`;
    // Gemm with transB stores [out, in]; MatMul (and Gemm without transB)
    // stores [in, out]
    if (useGemm && transB) {
      graph.writeMessage(5, tensor(wName, [layer.outDim, layer.inDim], layer.weight));
    } else {
      const t = new Float32Array(layer.inDim * layer.outDim);
      for (let o = 0; o < layer.outDim; o++) {
        for (let i = 0; i < layer.inDim; i++) {
          t[i * layer.outDim + o] = layer.weight[o * layer.inDim + i];
        }
      }
      graph.writeMessage(5, tensor(wName, [layer.inDim, layer.outDim], t));
    }
    graph.writeMessage(5, tensor(bName, [layer.outDim], layer.bias));

    if (useGemm) {
      const node = new ProtoWriter();
      node.writeString(1, current);
      node.writeString(1, wName);
      node.writeString(1, bName);
      node.writeString(2, zName);
      node.writeString(4, 'Gemm');
      const tb = new ProtoWriter();
      tb.writeString(1, 'transB');
      tb.writeVarint(3, transB ? 1 : 0);
      tb.writeVarint(20, 2);
      node.writeMessage(5, tb);
      graph.writeMessage(1, node);
    } else {
      const mm = new ProtoWriter();
      mm.writeString(1, current);
      mm.writeString(1, wName);
      mm.writeString(2, `${zName}_mm`);
      mm.writeString(4, 'MatMul');
      graph.writeMessage(1, mm);
      const add = new ProtoWriter();
      add.writeString(1, `${zName}_mm`);
      add.writeString(1, bName);
      add.writeString(2, zName);
      add.writeString(4, 'Add');
      graph.writeMessage(1, add);
    }
    current = zName;

    if (layer.relu) {
      const node = new ProtoWriter();
      node.writeString(1, current);
      node.writeString(2, `a${idx}`);
      node.writeString(4, 'Relu');
      graph.writeMessage(1, node);
      current = `a${idx}`;
    }
  });

  graph.writeString(2, 'mlp');
  graph.writeMessage(11, valueInfo('input', [1, inputDim]));
  graph.writeMessage(12, valueInfo(current, [1, layers[layers.length - 1].outDim]));

  const model = new ProtoWriter();
  model.writeVarint(1, 8); // ir_version
  model.writeMessage(7, graph);
  return model.finish();
}
