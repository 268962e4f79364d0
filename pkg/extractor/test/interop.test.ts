/**
 * End-to-end interop with the Python core: a bundle produced here must train
 * and evaluate through the core CLI without the toy encoder being involved.
 */
import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createBackbone } from "../src/backbone.js";
import { runExtraction } from "../src/extract.js";

const DOMAINS_11 = [
  "photo", "cartoon", "painting", "sketch", "art", "clipart",
  "infograph", "quickdraw", "product", "real-world", "drawing",
];
const CLASSES = ["dog", "cat", "horse"];

const root = fs.mkdtempSync(path.join(os.tmpdir(), "interop-"));
const bundleDir = path.join(root, "bundle");
const modelDir = path.join(root, "model");
const reportDir = path.join(root, "report");

function python(args: string[]): { status: number | null; output: string } {
  const proc = spawnSync("python3", ["-m", "ptta.cli", ...args], { encoding: "utf-8" });
  return { status: proc.status, output: `${proc.stdout}\n${proc.stderr}` };
}

function pythonAvailable(): boolean {
  return spawnSync("python3", ["-c", "import ptta"], { encoding: "utf-8" }).status === 0;
}

beforeAll(async () => {
  const imagesDir = path.join(root, "images");
  for (const [j, cls] of CLASSES.entries()) {
    const folder = path.join(imagesDir, cls);
    fs.mkdirSync(folder, { recursive: true });
    for (let i = 0; i < 4; i++) {
      const header = Buffer.from(`P6\n4 4\n255\n`, "ascii");
      const pixels = Buffer.from([...Array(48)].map((_, p) => (p * 31 + i * 17 + j * 101) % 256));
      fs.writeFileSync(path.join(folder, `img-${i}.ppm`), Buffer.concat([header, pixels]));
    }
  }
  await runExtraction(
    {
      classNames: CLASSES,
      domainNames: DOMAINS_11,
      backbone: createBackbone("hashed-512"),
      imagesDir,
    },
    bundleDir,
  );
}, 30_000);

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

describe.skipIf(!pythonAvailable())("core CLI on an extracted bundle", () => {
  it("train runs end-to-end on the bundle", () => {
    const { status, output } = python([
      "train",
      "--styles", bundleDir,
      "--set", "epochs=5",
      "--set", "batch_size=16",
      "--out", modelDir,
    ]);
    expect(output).toContain("trained:");
    expect(status).toBe(0);
    expect(fs.existsSync(path.join(modelDir, "classifier.ptaf"))).toBe(true);
    expect(fs.existsSync(path.join(modelDir, "adapter_keys.ptaf"))).toBe(true);
  });

  it("eval runs on the bundle's image features", () => {
    const { status, output } = python([
      "eval",
      "--model", modelDir,
      "--data", bundleDir,
      "--out", reportDir,
    ]);
    expect(output).toContain("eval:");
    expect(status).toBe(0);
    const report = JSON.parse(fs.readFileSync(path.join(reportDir, "report.json"), "utf-8"));
    expect(report.mean_accuracy).toBeGreaterThanOrEqual(0);
    expect(report.mean_accuracy).toBeLessThanOrEqual(1);
  });

  it("the core acceptance interop check passes against this bundle", () => {
    const proc = spawnSync(
      "python3",
      ["-m", "pytest", "tests/test_acceptance.py::test_extractor_bundle_interop", "-q"],
      {
        encoding: "utf-8",
        cwd: fileURLToPath(new URL("../..", import.meta.url)),
        env: { ...process.env, PTTA_EXTRACTOR_BUNDLE: bundleDir },
      },
    );
    expect(`${proc.stdout}\n${proc.stderr}`).toContain("1 passed");
    expect(proc.status).toBe(0);
  }, 60_000);
});
