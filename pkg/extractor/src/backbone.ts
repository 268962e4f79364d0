/**
 * Embedding backbones. The CLIP backbones run on @xenova/transformers when it
 * is installed and weights are reachable; the "hashed-*" backbones are fully
 * offline deterministic stand-ins (character-trigram hashing for text, byte
 * hashing for images) meant for format and interop testing, not recognition.
 */

export interface Backbone {
  id: string;
  dim: number;
  encodeText(prompts: string[]): Promise<Float64Array[]>;
  encodeImages(paths: string[]): Promise<Float64Array[]>;
}

export class BackboneError extends Error {}

const CLIP_BACKBONES: Record<string, { model: string; dim: number }> = {
  "clip-vit-base-patch32": { model: "Xenova/clip-vit-base-patch32", dim: 512 },
  "clip-vit-base-patch16": { model: "Xenova/clip-vit-base-patch16", dim: 512 },
  "clip-vit-large-patch14": { model: "Xenova/clip-vit-large-patch14", dim: 768 },
};

const HASHED_DIMS = [64, 512];

export function supportedBackboneIds(): string[] {
  return [...HASHED_DIMS.map((d) => `hashed-${d}`), ...Object.keys(CLIP_BACKBONES)];
}

const MASK64 = (1n << 64n) - 1n;
const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;

function fnv1a64(bytes: Uint8Array, seed: bigint = 0n): bigint {
  let h = FNV_OFFSET ^ seed;
  for (const b of bytes) {
    h ^= BigInt(b);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

/** splitmix64 step: advances the state and returns the mixed output. */
function splitmix64(state: bigint): { state: bigint; out: bigint } {
  state = (state + 0x9e3779b97f4a7c15n) & MASK64;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  z = (z ^ (z >> 31n)) & MASK64;
  return { state, out: z };
}

function accumulateHashed(target: Float64Array, seed: bigint): void {
  let state = seed;
  for (let i = 0; i < target.length; i++) {
    const step = splitmix64(state);
    state = step.state;
    target[i] += Number(step.out) / 2 ** 64 - 0.5;
  }
}

function normalize(vec: Float64Array): Float64Array {
  let sq = 0;
  for (const v of vec) sq += v * v;
  const norm = Math.sqrt(sq);
  if (norm <= 1e-12) throw new BackboneError("encoded feature collapsed to zero");
  for (let i = 0; i < vec.length; i++) vec[i] /= norm;
  return vec;
}

/** Character trigrams of the padded lowercase prompt. */
function trigrams(text: string): string[] {
  const padded = `##${text.toLowerCase().trim().replace(/\s+/g, " ")}##`;
  const grams: string[] = [];
  for (let i = 0; i + 3 <= padded.length; i++) grams.push(padded.slice(i, i + 3));
  return grams;
}

class HashedBackbone implements Backbone {
  readonly id: string;

  constructor(readonly dim: number) {
    this.id = `hashed-${dim}`;
  }

  private encodeOneText(prompt: string): Float64Array {
    const grams = trigrams(prompt);
    if (grams.length === 0) throw new BackboneError("cannot encode an empty prompt");
    const vec = new Float64Array(this.dim);
    const enc = new TextEncoder();
    for (const gram of grams) {
      accumulateHashed(vec, fnv1a64(enc.encode(gram)));
    }
    return normalize(vec);
  }

  async encodeText(prompts: string[]): Promise<Float64Array[]> {
    return prompts.map((p) => this.encodeOneText(p));
  }

  async encodeImages(paths: string[]): Promise<Float64Array[]> {
    const fs = await import("node:fs");
    return paths.map((p) => {
      const bytes = fs.readFileSync(p);
      const vec = new Float64Array(this.dim);
      // hash 64-byte blocks so features depend on the whole file
      for (let off = 0; off < bytes.length; off += 64) {
        accumulateHashed(vec, fnv1a64(bytes.subarray(off, Math.min(off + 64, bytes.length))));
      }
      if (bytes.length === 0) throw new BackboneError(`empty image file: ${p}`);
      return normalize(vec);
    });
  }
}

class TransformersClipBackbone implements Backbone {
  constructor(
    readonly id: string,
    readonly dim: number,
    private readonly modelId: string,
  ) {}

  private async lib(): Promise<any> {
    try {
      return await import("@xenova/transformers");
    } catch {
      throw new BackboneError(
        `backbone ${this.id} needs the optional '@xenova/transformers' package and ` +
          `downloadable weights; offline alternatives: ${HASHED_DIMS.map((d) => `hashed-${d}`).join(", ")}`,
      );
    }
  }

  async encodeText(prompts: string[]): Promise<Float64Array[]> {
    const { AutoTokenizer, CLIPTextModelWithProjection } = await this.lib();
    const tokenizer = await AutoTokenizer.from_pretrained(this.modelId);
    const model = await CLIPTextModelWithProjection.from_pretrained(this.modelId);
    const tokens = tokenizer(prompts, { padding: true, truncation: true });
    const { text_embeds } = await model(tokens);
    return this.splitRows(text_embeds.data as Float32Array, prompts.length);
  }

  async encodeImages(paths: string[]): Promise<Float64Array[]> {
    const { AutoProcessor, CLIPVisionModelWithProjection, RawImage } = await this.lib();
    const processor = await AutoProcessor.from_pretrained(this.modelId);
    const model = await CLIPVisionModelWithProjection.from_pretrained(this.modelId);
    const out: Float64Array[] = [];
    for (const p of paths) {
      const image = await RawImage.read(p);
      const inputs = await processor(image);
      const { image_embeds } = await model(inputs);
      out.push(...this.splitRows(image_embeds.data as Float32Array, 1));
    }
    return out;
  }

  private splitRows(flat: Float32Array, count: number): Float64Array[] {
    const rows: Float64Array[] = [];
    const dim = flat.length / count;
    for (let r = 0; r < count; r++) {
      rows.push(normalize(Float64Array.from(flat.subarray(r * dim, (r + 1) * dim))));
    }
    return rows;
  }
}

export function createBackbone(id: string): Backbone {
  const hashed = /^hashed-(\d+)$/.exec(id);
  if (hashed) {
    const dim = Number(hashed[1]);
    if (HASHED_DIMS.includes(dim)) return new HashedBackbone(dim);
  }
  const clip = CLIP_BACKBONES[id];
  if (clip) return new TransformersClipBackbone(id, clip.dim, clip.model);
  throw new BackboneError(
    `unknown backbone ${JSON.stringify(id)}; supported: ${supportedBackboneIds().join(", ")}`,
  );
}
