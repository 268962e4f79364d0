/**
 * Text and image feature extraction into the bundle layout the core trains on.
 *
 * Text: one content prompt per class (the bare class name) and one adapter
 * prompt per (class, domain) pair, "a <domain> of a <class>", rows ordered
 * class-major (class*K + domain). Prompts are lowercased with collapsed
 * whitespace. The adapter block doubles as the bundle's style block (one
 * "style" per domain) unless disabled, so the core's training entry point runs
 * on the bundle as-is: learning style vectors against a pretrained encoder is
 * out of scope here.
 *
 * Images: one subfolder per class under imagesDir, encoded eval-only; the
 * model itself never trains on images.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import { Backbone } from "./backbone.js";
import { BundleData, Matrix, PtafError, matrixFromRows, writeBundle } from "./ptaf.js";

export interface ExtractSpec {
  classNames: string[];
  domainNames: string[];
  backbone: Backbone;
  /** optional folder with one subfolder of images per class */
  imagesDir?: string;
  /** also export the adapter features as the style block (default true) */
  exportStyles?: boolean;
}

export class ExtractError extends Error {}

function normalizePrompt(text: string): string {
  return text.toLowerCase().trim().replace(/\s+/g, " ");
}

export function contentPrompt(className: string): string {
  return normalizePrompt(className);
}

export function adapterPrompt(className: string, domainName: string): string {
  return normalizePrompt(`a ${domainName} of a ${className}`);
}

function checkNames(names: string[], what: string): void {
  if (names.length === 0) throw new ExtractError(`${what} list is empty`);
  for (const name of names) {
    if (!name.trim()) throw new ExtractError(`${what} list contains an empty name`);
  }
}

export async function extractText(spec: ExtractSpec): Promise<BundleData> {
  checkNames(spec.classNames, "class name");
  checkNames(spec.domainNames, "domain name");
  const contentRows = await spec.backbone.encodeText(spec.classNames.map(contentPrompt));
  const adapterPrompts: string[] = [];
  for (const cls of spec.classNames) {
    for (const dom of spec.domainNames) {
      adapterPrompts.push(adapterPrompt(cls, dom));
    }
  }
  const adapterRows = await spec.backbone.encodeText(adapterPrompts);
  const adapterFeatures = matrixFromRows(adapterRows);
  const bundle: BundleData = {
    classNames: spec.classNames,
    domainNames: spec.domainNames,
    contentFeatures: matrixFromRows(contentRows),
    adapterFeatures,
    meta: {
      extractor: {
        backbone: spec.backbone.id,
        style_block: spec.exportStyles === false ? "none" : "domain-prompts",
      },
    },
  };
  if (spec.exportStyles !== false) {
    // same rows, same class-major order: style index = domain index
    bundle.styleFeatures = {
      rows: adapterFeatures.rows,
      dim: adapterFeatures.dim,
      data: Float64Array.from(adapterFeatures.data),
    };
  }
  return bundle;
}

export async function extractImages(spec: ExtractSpec, bundle: BundleData): Promise<void> {
  if (!spec.imagesDir) throw new ExtractError("no images directory given");
  const rows: Float64Array[] = [];
  const labels: number[] = [];
  for (let j = 0; j < spec.classNames.length; j++) {
    const cls = spec.classNames[j];
    const folder = path.join(spec.imagesDir, cls);
    let entries: string[];
    try {
      entries = fs.readdirSync(folder).filter((f) => fs.statSync(path.join(folder, f)).isFile());
    } catch {
      throw new ExtractError(`missing image folder for class ${JSON.stringify(cls)}: ${folder}`);
    }
    entries.sort();
    if (entries.length === 0) {
      throw new ExtractError(`no images for class ${JSON.stringify(cls)} in ${folder}`);
    }
    const encoded = await spec.backbone.encodeImages(entries.map((f) => path.join(folder, f)));
    rows.push(...encoded);
    labels.push(...encoded.map(() => j));
  }
  bundle.evalFeatures = matrixFromRows(rows);
  bundle.evalLabels = labels;
}

export async function runExtraction(spec: ExtractSpec, outDir: string): Promise<BundleData> {
  const bundle = await extractText(spec);
  if (spec.imagesDir) {
    await extractImages(spec, bundle);
  }
  try {
    writeBundle(bundle, outDir);
  } catch (err) {
    if (err instanceof PtafError) throw new ExtractError(`bundle validation failed: ${err.message}`);
    throw err;
  }
  return bundle;
}

export function summarize(bundle: BundleData): string {
  const n = bundle.classNames.length;
  const k = bundle.domainNames.length;
  const parts = [
    `classes N=${n}`,
    `domains K=${k}`,
    `dim D=${bundle.contentFeatures.dim}`,
    `adapter ${bundle.adapterFeatures.rows}x${bundle.adapterFeatures.dim}`,
  ];
  if (bundle.styleFeatures) parts.push(`styles ${bundle.styleFeatures.rows}`);
  if (bundle.evalFeatures) parts.push(`eval ${bundle.evalFeatures.rows}`);
  return parts.join(", ");
}
