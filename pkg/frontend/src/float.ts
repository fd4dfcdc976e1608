// binary32 helpers: bit patterns, hex interchange with the bundle schema,
// and a shortest round-tripping decimal mirror.

const f32buf = new DataView(new ArrayBuffer(4));

export function f32Bits(x: number): number {
  f32buf.setFloat32(0, x, true);
  return f32buf.getUint32(0, true);
}

export function f32FromBits(bits: number): number {
  f32buf.setUint32(0, bits >>> 0, true);
  return f32buf.getFloat32(0, true);
}

export function toHex(bits: number): string {
  return '0x' + (bits >>> 0).toString(16).toUpperCase().padStart(8, '0');
}

export function parseHex(text: string): number {
  if (!/^0x[0-9a-fA-F]{1,8}$/.test(text)) {
    throw new Error(`not a binary32 hex literal: ${text}`);
  }
  return Number.parseInt(text.slice(2), 16) >>> 0;
}

export function round32(x: number): number {
  return Math.fround(x);
}

export function nextUp32(x: number): number {
  if (Number.isNaN(x) || x === Infinity) {
    return x;
  }
  if (x === 0) {
    return f32FromBits(1);
  }
  const bits = f32Bits(x);
  if (bits >>> 31) {
    const down = bits - 1;
    return down === 0x80000000 ? -0 : f32FromBits(down);
  }
  return f32FromBits(bits + 1);
}

export function nextDown32(x: number): number {
  if (Number.isNaN(x) || x === -Infinity) {
    return x;
  }
  if (x === 0) {
    return f32FromBits(0x80000001);
  }
  const bits = f32Bits(x);
  return f32FromBits(bits >>> 31 ? bits + 1 : bits - 1);
}

// Directed rounding onto the binary32 grid (for sound region endpoints).
export function roundDown32(x: number): number {
  const r = Math.fround(x);
  return r <= x ? r : nextDown32(r);
}

export function roundUp32(x: number): number {
  const r = Math.fround(x);
  return r >= x ? r : nextUp32(r);
}

export function shortestDecimal(x: number): string {
  if (Number.isNaN(x)) {
    throw new Error('NaN has no decimal form');
  }
  if (!Number.isFinite(x)) {
    return x > 0 ? 'inf' : '-inf';
  }
  for (let precision = 1; precision <= 17; precision++) {
    const s = x.toPrecision(precision);
    if (Math.fround(Number(s)) === x && Object.is(Math.sign(Number(s)), Math.sign(x))) {
      return s;
    }
  }
  return x.toString();
}
