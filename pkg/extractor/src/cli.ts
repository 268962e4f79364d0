/**
 * extract --classes <file> --domains <file> --backbone <id> [--images <dir>]
 *         [--no-style-export] --out <dir>
 *
 * Class/domain files hold one name per line (blank lines and #-comments
 * ignored). Exit codes: 0 ok, 2 usage/validation, 3 extraction failure.
 */
import * as fs from "node:fs";
import { parseArgs } from "node:util";

import { BackboneError, createBackbone, supportedBackboneIds } from "./backbone.js";
import { ExtractError, runExtraction, summarize } from "./extract.js";
import { PtafError } from "./ptaf.js";

const USAGE = `usage: extract --classes <file> --domains <file> --backbone <id> [--images <dir>] [--no-style-export] --out <dir>

  --classes          text file, one class name per line
  --domains          text file, one domain name per line
  --backbone         one of: ${supportedBackboneIds().join(", ")}
  --images           optional folder with one subfolder of images per class (eval block)
  --no-style-export  do not duplicate the domain prompts as the style block
  --out              output bundle directory
`;

class UsageError extends Error {}

function readNames(filePath: string, what: string): string[] {
  let raw: string;
  try {
    raw = fs.readFileSync(filePath, "utf-8");
  } catch {
    throw new UsageError(`cannot read ${what} file: ${filePath}`);
  }
  const names = raw
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (names.length === 0) throw new UsageError(`${what} file ${filePath} lists no names`);
  return names;
}

export async function main(argv: string[]): Promise<number> {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        classes: { type: "string" },
        domains: { type: "string" },
        backbone: { type: "string" },
        images: { type: "string" },
        "no-style-export": { type: "boolean", default: false },
        out: { type: "string" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  if (args.values.help) {
    console.log(USAGE);
    return 0;
  }
  try {
    const { classes, domains, backbone, out } = args.values;
    if (!classes || !domains || !backbone || !out) {
      console.error("error: --classes, --domains, --backbone and --out are required");
      console.error(USAGE);
      return 2;
    }
    const spec = {
      classNames: readNames(classes, "classes"),
      domainNames: readNames(domains, "domains"),
      backbone: createBackbone(backbone),
      imagesDir: args.values.images,
      exportStyles: !args.values["no-style-export"],
    };
    const bundle = await runExtraction(spec, out);
    console.log(`extracted: ${summarize(bundle)} -> ${out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    if (err instanceof UsageError) return 2;
    if (err instanceof BackboneError && /unknown backbone/.test(err.message)) return 2;
    if (err instanceof ExtractError || err instanceof PtafError || err instanceof BackboneError) return 3;
    return 3;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
