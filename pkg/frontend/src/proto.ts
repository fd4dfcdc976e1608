// Minimal protobuf wire-format reader/writer: just enough to decode the
// ONNX subset the exporter supports (and to synthesize ONNX fixtures in
// tests). No schema compilation; callers dispatch on field numbers.

export const WIRE_VARINT = 0;
export const WIRE_FIXED64 = 1;
export const WIRE_LEN = 2;
export const WIRE_FIXED32 = 5;

export interface Field {
  fieldNumber: number;
  wireType: number;
  // varint values as bigint (callers narrow); length-delimited as bytes
  varint?: bigint;
  fixed32?: number;
  fixed64?: bigint;
  bytes?: Uint8Array;
}

export class ProtoReader {
  private pos = 0;

  constructor(private readonly buf: Uint8Array) {}

  get done(): boolean {
    return this.pos >= this.buf.length;
  }

  private readVarint(): bigint {
    let result = 0n;
    let shift = 0n;
    for (;;) {
      if (this.pos >= this.buf.length) {
        throw new Error('truncated varint');
      }
      const byte = this.buf[this.pos++];
      result |= BigInt(byte & 0x7f) << shift;
      if ((byte & 0x80) === 0) {
        return result;
      }
      shift += 7n;
      if (shift > 70n) {
        throw new Error('varint too long');
      }
    }
  }

  readField(): Field {
    const tag = this.readVarint();
    const fieldNumber = Number(tag >> 3n);
    const wireType = Number(tag & 7n);
    switch (wireType) {
      case WIRE_VARINT:
        return { fieldNumber, wireType, varint: this.readVarint() };
      case WIRE_FIXED64: {
        const view = new DataView(this.buf.buffer, this.buf.byteOffset + this.pos, 8);
        this.pos += 8;
        return { fieldNumber, wireType, fixed64: view.getBigUint64(0, true) };
      }
      case WIRE_LEN: {
        const len = Number(this.readVarint());
        if (this.pos + len > this.buf.length) {
          throw new Error('truncated length-delimited field');
        }
        const bytes = this.buf.subarray(this.pos, this.pos + len);
        this.pos += len;
        return { fieldNumber, wireType, bytes };
      }
      case WIRE_FIXED32: {
        const view = new DataView(this.buf.buffer, this.buf.byteOffset + this.pos, 4);
        this.pos += 4;
        return { fieldNumber, wireType, fixed32: view.getUint32(0, true) };
      }
      default:
        throw new Error(`unsupported wire type ${wireType}`);
    }
  }

  fields(): Field[] {
    const out: Field[] = [];
    while (!this.done) {
      out.push(this.readField());
    }
    return out;
  }
}

export function decodeString(bytes: Uint8Array): string {
  return new TextDecoder().decode(bytes);
}

// Packed repeated varints (proto3 default for repeated int64 like dims).
export function decodePackedVarints(bytes: Uint8Array): bigint[] {
  const reader = new ProtoReader(bytes);
  const out: bigint[] = [];
  // read raw varints until exhausted
  const anyReader = reader as unknown as { readVarint: () => bigint; done: boolean };
  while (!anyReader.done) {
    out.push(anyReader.readVarint());
  }
  return out;
}

export function decodePackedFloats(bytes: Uint8Array): number[] {
  if (bytes.length % 4 !== 0) {
    throw new Error('packed float payload length not a multiple of 4');
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.length);
  const out: number[] = [];
  for (let i = 0; i < bytes.length; i += 4) {
    out.push(view.getFloat32(i, true));
  }
  return out;
}

export class ProtoWriter {
  private parts: number[] = [];

  private varint(value: bigint): void {
    let v = value;
    for (;;) {
      const byte = Number(v & 0x7fn);
      v >>= 7n;
      if (v === 0n) {
        this.parts.push(byte);
        return;
      }
      this.parts.push(byte | 0x80);
    }
  }

  tag(fieldNumber: number, wireType: number): void {
    this.varint(BigInt((fieldNumber << 3) | wireType));
  }

  writeVarint(fieldNumber: number, value: number | bigint): this {
    this.tag(fieldNumber, WIRE_VARINT);
    this.varint(BigInt(value));
    return this;
  }

  writeBytes(fieldNumber: number, bytes: Uint8Array): this {
    this.tag(fieldNumber, WIRE_LEN);
    this.varint(BigInt(bytes.length));
    for (const b of bytes) {
      this.parts.push(b);
    }
    return this;
  }

  writeString(fieldNumber: number, text: string): this {
    return this.writeBytes(fieldNumber, new TextEncoder().encode(text));
  }

  writeMessage(fieldNumber: number, inner: ProtoWriter): this {
    return this.writeBytes(fieldNumber, inner.finish());
  }

  writeFloat(fieldNumber: number, value: number): this {
    this.tag(fieldNumber, WIRE_FIXED32);
    const tmp = new DataView(new ArrayBuffer(4));
    tmp.setFloat32(0, value, true);
    for (let i = 0; i < 4; i++) {
      this.parts.push(tmp.getUint8(i));
    }
    return this;
  }

  finish(): Uint8Array {
    return Uint8Array.from(this.parts);
  }
}
