/**
 * PTAF binary matrices and feature-bundle directories.
 *
 * Byte layout (all little-endian): magic "PTAF", u32 format version = 1,
 * u32 rows, u32 dim, u32 flags (bit 0: rows unit-norm within 1e-3), then
 * rows*dim IEEE-754 binary32 values in row-major order. A bundle directory
 * holds manifest.json plus one .ptaf file per matrix; this is the exact
 * contract the ptta core reads.
 */
import * as fs from "node:fs";
import * as path from "node:path";

export const MAGIC = "PTAF";
export const FORMAT_VERSION = 1;
export const FLAG_UNIT_NORM = 1;
export const UNIT_NORM_TOL = 1e-3;

const HEADER_BYTES = 20;

export interface Matrix {
  rows: number;
  dim: number;
  /** row-major, length rows*dim */
  data: Float64Array;
}

export class PtafError extends Error {}

export function matrixFromRows(rows: Float64Array[]): Matrix {
  if (rows.length === 0) throw new PtafError("matrix needs at least one row");
  const dim = rows[0].length;
  const data = new Float64Array(rows.length * dim);
  rows.forEach((row, r) => {
    if (row.length !== dim) {
      throw new PtafError(`row ${r} has length ${row.length}, expected ${dim}`);
    }
    data.set(row, r * dim);
  });
  return { rows: rows.length, dim, data };
}

function checkFinite(matrix: Matrix): void {
  for (const v of matrix.data) {
    if (!Number.isFinite(v)) throw new PtafError("matrix contains non-finite values");
  }
}

function checkUnitRows(matrix: Matrix): void {
  for (let r = 0; r < matrix.rows; r++) {
    let sq = 0;
    for (let c = 0; c < matrix.dim; c++) {
      const v = matrix.data[r * matrix.dim + c];
      sq += v * v;
    }
    const off = Math.abs(Math.sqrt(sq) - 1);
    if (off > UNIT_NORM_TOL) {
      throw new PtafError(`row ${r} flagged unit-norm is off by ${off.toExponential(2)}`);
    }
  }
}

export function encodeMatrix(matrix: Matrix, unitNorm: boolean): Buffer {
  if (matrix.rows < 1 || matrix.dim < 1) {
    throw new PtafError(`matrix must have rows, dim >= 1, got ${matrix.rows}x${matrix.dim}`);
  }
  if (matrix.data.length !== matrix.rows * matrix.dim) {
    throw new PtafError("matrix data length does not match rows*dim");
  }
  checkFinite(matrix);
  if (unitNorm) checkUnitRows(matrix);
  const buf = Buffer.alloc(HEADER_BYTES + 4 * matrix.rows * matrix.dim);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(FORMAT_VERSION, 4);
  buf.writeUInt32LE(matrix.rows, 8);
  buf.writeUInt32LE(matrix.dim, 12);
  buf.writeUInt32LE(unitNorm ? FLAG_UNIT_NORM : 0, 16);
  for (let i = 0; i < matrix.data.length; i++) {
    buf.writeFloatLE(Math.fround(matrix.data[i]), HEADER_BYTES + 4 * i);
  }
  return buf;
}

export function writeMatrix(matrix: Matrix, unitNorm: boolean, filePath: string): void {
  fs.writeFileSync(filePath, encodeMatrix(matrix, unitNorm));
}

export function decodeMatrix(buf: Buffer): { matrix: Matrix; unitNorm: boolean } {
  if (buf.length < HEADER_BYTES) throw new PtafError(`truncated header (${buf.length} bytes)`);
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new PtafError(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== FORMAT_VERSION) throw new PtafError(`unsupported format version ${version}`);
  const rows = buf.readUInt32LE(8);
  const dim = buf.readUInt32LE(12);
  const flags = buf.readUInt32LE(16);
  const expected = HEADER_BYTES + 4 * rows * dim;
  if (buf.length !== expected) {
    throw new PtafError(`payload length ${buf.length} != expected ${expected} for ${rows}x${dim}`);
  }
  const data = new Float64Array(rows * dim);
  for (let i = 0; i < data.length; i++) {
    const v = buf.readFloatLE(HEADER_BYTES + 4 * i);
    if (!Number.isFinite(v)) throw new PtafError(`non-finite value at index ${i}`);
    data[i] = v;
  }
  return { matrix: { rows, dim, data }, unitNorm: (flags & FLAG_UNIT_NORM) !== 0 };
}

export function readMatrix(filePath: string): { matrix: Matrix; unitNorm: boolean } {
  return decodeMatrix(fs.readFileSync(filePath));
}

export interface BundleData {
  classNames: string[];
  domainNames: string[];
  contentFeatures: Matrix; // N x D
  adapterFeatures: Matrix; // N*K x D, row = class*K + domain
  styleFeatures?: Matrix; // N*M x D, row = class*M + style
  evalFeatures?: Matrix; // Q x D
  evalLabels?: number[]; // Q class indices
  meta?: Record<string, unknown>;
}

export function writeBundle(bundle: BundleData, dir: string): void {
  const n = bundle.classNames.length;
  const k = bundle.domainNames.length;
  if (n < 1 || k < 1) throw new PtafError("bundle needs class and domain names");
  const dim = bundle.contentFeatures.dim;
  if (bundle.contentFeatures.rows !== n) {
    throw new PtafError(`content rows ${bundle.contentFeatures.rows} != ${n} classes`);
  }
  if (bundle.adapterFeatures.rows !== n * k || bundle.adapterFeatures.dim !== dim) {
    throw new PtafError(
      `adapter matrix ${bundle.adapterFeatures.rows}x${bundle.adapterFeatures.dim} != expected ${n * k}x${dim}`,
    );
  }
  if (bundle.styleFeatures && bundle.styleFeatures.rows % n !== 0) {
    throw new PtafError(`style rows ${bundle.styleFeatures.rows} not a multiple of ${n} classes`);
  }
  if ((bundle.evalFeatures === undefined) !== (bundle.evalLabels === undefined)) {
    throw new PtafError("eval features and labels must be written together");
  }
  if (bundle.evalFeatures && bundle.evalLabels) {
    if (bundle.evalLabels.length !== bundle.evalFeatures.rows) {
      throw new PtafError("eval label count does not match eval feature rows");
    }
    for (const label of bundle.evalLabels) {
      if (!Number.isInteger(label) || label < 0 || label >= n) {
        throw new PtafError(`eval label ${label} outside [0, ${n})`);
      }
    }
  }

  fs.mkdirSync(dir, { recursive: true });
  const matrices: Record<string, string> = {};
  const blocks: Array<[string, Matrix | undefined, boolean]> = [
    ["content_features", bundle.contentFeatures, true],
    ["adapter_features", bundle.adapterFeatures, true],
    ["style_features", bundle.styleFeatures, true],
    ["eval_features", bundle.evalFeatures, true],
  ];
  for (const [name, matrix, unitNorm] of blocks) {
    if (!matrix) continue;
    const filename = `${name}.ptaf`;
    writeMatrix(matrix, unitNorm, path.join(dir, filename));
    matrices[name] = filename;
  }
  const manifest: Record<string, unknown> = {
    format: "ptta-bundle",
    version: FORMAT_VERSION,
    dim,
    class_names: bundle.classNames,
    domain_names: bundle.domainNames,
    matrices,
    meta: bundle.meta ?? {},
  };
  if (bundle.evalLabels) {
    manifest.eval_labels = "eval_labels.json";
    fs.writeFileSync(
      path.join(dir, "eval_labels.json"),
      JSON.stringify({ labels: bundle.evalLabels }, null, 2) + "\n",
    );
  }
  fs.writeFileSync(path.join(dir, "manifest.json"), JSON.stringify(manifest, null, 2) + "\n");
}
