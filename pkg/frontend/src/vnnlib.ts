// Minimal VNN-LIB parser: box constraints on the inputs X_i plus linear
// assertions over the outputs Y_i, in the SMT-LIB surface syntax used by
// the standard benchmark properties. Everything outside that fragment
// aborts with a named error; this tool never guesses.

export class VnnlibUnsupported extends Error {}

export type SExpr = string | SExpr[];

export function tokenize(text: string): string[] {
  const noComments = text.replace(/;[^\n]*/g, ' ');
  return noComments
    .replace(/\(/g, ' ( ')
    .replace(/\)/g, ' ) ')
    .split(/\s+/)
    .filter((t) => t.length > 0);
}

export function parseSExprs(text: string): SExpr[] {
  const tokens = tokenize(text);
  let pos = 0;
  const parseOne = (): SExpr => {
    const tok = tokens[pos++];
    if (tok === '(') {
      const list: SExpr[] = [];
      while (tokens[pos] !== ')') {
        if (pos >= tokens.length) {
          throw new VnnlibUnsupported('unbalanced parenthesis');
        }
        list.push(parseOne());
      }
      pos++;
      return list;
    }
    if (tok === ')') {
      throw new VnnlibUnsupported('unexpected )');
    }
    return tok;
  };
  const out: SExpr[] = [];
  while (pos < tokens.length) {
    out.push(parseOne());
  }
  return out;
}

export interface LinearRow {
  // coefficients over Y, as c . y <= d
  c: number[];
  d: number;
}

export interface VnnlibProperty {
  numInputs: number;
  numOutputs: number;
  inputLo: number[];
  inputHi: number[];
  clauses: LinearRow[][]; // disjunction of conjunctions
}

function varIndex(name: string, prefix: 'X' | 'Y'): number | null {
  const m = name.match(/^([XY])_(\d+)$/);
  if (!m || m[1] !== prefix) {
    return null;
  }
  return Number(m[2]);
}

interface Atom {
  kind: 'input' | 'output';
  row?: LinearRow; // output atoms
  inputIndex?: number;
  lo?: number;
  hi?: number;
}

function parseAtom(expr: SExpr, numOutputs: number): Atom {
  if (!Array.isArray(expr) || expr.length !== 3 || typeof expr[0] !== 'string') {
    throw new VnnlibUnsupported(`unsupported assertion ${JSON.stringify(expr)}`);
  }
  const [op, lhs, rhs] = expr;
  if (op !== '<=' && op !== '>=') {
    throw new VnnlibUnsupported(`unsupported comparison ${op}`);
  }
  const term = (e: SExpr): { x?: number; y?: number; constant?: number } => {
    if (typeof e !== 'string') {
      throw new VnnlibUnsupported(`nonlinear or compound term ${JSON.stringify(e)}`);
    }
    const xi = varIndex(e, 'X');
    if (xi !== null) return { x: xi };
    const yi = varIndex(e, 'Y');
    if (yi !== null) return { y: yi };
    const v = Number(e);
    if (!Number.isFinite(v)) {
      throw new VnnlibUnsupported(`unknown symbol ${e}`);
    }
    return { constant: v };
  };
  const a = term(lhs);
  const b = term(rhs);

  if (a.x !== undefined && b.constant !== undefined) {
    return op === '<='
      ? { kind: 'input', inputIndex: a.x, hi: b.constant }
      : { kind: 'input', inputIndex: a.x, lo: b.constant };
  }
  if (a.constant !== undefined && b.x !== undefined) {
    return op === '<='
      ? { kind: 'input', inputIndex: b.x, lo: a.constant }
      : { kind: 'input', inputIndex: b.x, hi: a.constant };
  }

  const row = (c: number[], d: number): Atom => ({ kind: 'output', row: { c, d } });
  const zeros = () => new Array(numOutputs).fill(0);
  if (a.y !== undefined && b.constant !== undefined) {
    const c = zeros();
    // Y_i <= d  |  Y_i >= d -> -Y_i <= -d
    c[a.y] = op === '<=' ? 1 : -1;
    return row(c, op === '<=' ? b.constant : -b.constant);
  }
  if (a.constant !== undefined && b.y !== undefined) {
    const c = zeros();
    // d <= Y_j -> -Y_j <= -d  |  d >= Y_j -> Y_j <= d
    c[b.y] = op === '<=' ? -1 : 1;
    return row(c, op === '<=' ? -a.constant : a.constant);
  }
  if (a.y !== undefined && b.y !== undefined) {
    const c = zeros();
    if (op === '<=') {
      c[a.y] += 1;
      c[b.y] -= 1;
    } else {
      c[a.y] -= 1;
      c[b.y] += 1;
    }
    return row(c, 0);
  }
  throw new VnnlibUnsupported(`assertion outside the supported fragment: ${JSON.stringify(expr)}`);
}

export function parseVnnlib(text: string): VnnlibProperty {
  const exprs = parseSExprs(text);
  let numInputs = 0;
  let numOutputs = 0;
  for (const e of exprs) {
    if (Array.isArray(e) && e[0] === 'declare-const' && typeof e[1] === 'string') {
      const xi = varIndex(e[1], 'X');
      if (xi !== null) numInputs = Math.max(numInputs, xi + 1);
      const yi = varIndex(e[1], 'Y');
      if (yi !== null) numOutputs = Math.max(numOutputs, yi + 1);
    }
  }
  if (numInputs === 0 || numOutputs === 0) {
    throw new VnnlibUnsupported('property must declare X_* and Y_* constants');
  }

  const lo = new Array(numInputs).fill(Number.NaN);
  const hi = new Array(numInputs).fill(Number.NaN);
  const atomicRows: LinearRow[] = [];
  let orClauses: LinearRow[][] | null = null;

  const applyInput = (atom: Atom): void => {
    const i = atom.inputIndex!;
    if (i >= numInputs) {
      throw new VnnlibUnsupported(`X_${i} out of declared range`);
    }
    if (atom.lo !== undefined) lo[i] = Number.isNaN(lo[i]) ? atom.lo : Math.max(lo[i], atom.lo);
    if (atom.hi !== undefined) hi[i] = Number.isNaN(hi[i]) ? atom.hi : Math.min(hi[i], atom.hi);
  };

  for (const e of exprs) {
    if (!Array.isArray(e) || e[0] !== 'assert') {
      continue;
    }
    const body = e[1];
    if (Array.isArray(body) && body[0] === 'or') {
      if (orClauses !== null) {
        throw new VnnlibUnsupported('multiple disjunctive assertions');
      }
      orClauses = [];
      for (const branch of body.slice(1)) {
        if (!Array.isArray(branch) || branch[0] !== 'and') {
          // single-atom branch
          const atom = parseAtom(branch, numOutputs);
          if (atom.kind !== 'output') {
            throw new VnnlibUnsupported('input constraints inside a disjunction');
          }
          orClauses.push([atom.row!]);
          continue;
        }
        const rows: LinearRow[] = [];
        for (const sub of branch.slice(1)) {
          const atom = parseAtom(sub, numOutputs);
          if (atom.kind !== 'output') {
            throw new VnnlibUnsupported('input constraints inside a disjunction');
          }
          rows.push(atom.row!);
        }
        orClauses.push(rows);
      }
      continue;
    }
    if (Array.isArray(body) && body[0] === 'and') {
      for (const sub of body.slice(1)) {
        const atom = parseAtom(sub, numOutputs);
        if (atom.kind === 'input') applyInput(atom);
        else atomicRows.push(atom.row!);
      }
      continue;
    }
    const atom = parseAtom(body, numOutputs);
    if (atom.kind === 'input') applyInput(atom);
    else atomicRows.push(atom.row!);
  }

  for (let i = 0; i < numInputs; i++) {
    if (Number.isNaN(lo[i]) || Number.isNaN(hi[i])) {
      throw new VnnlibUnsupported(`X_${i} is missing a lower or upper bound`);
    }
  }
  if (orClauses !== null && atomicRows.length > 0) {
    throw new VnnlibUnsupported('mixed atomic and disjunctive output assertions');
  }
  const clauses = orClauses !== null ? orClauses : [atomicRows];
  if (clauses.length === 1 && clauses[0].length === 0) {
    throw new VnnlibUnsupported('property has no output assertion');
  }
  return { numInputs, numOutputs, inputLo: lo, inputHi: hi, clauses };
}
