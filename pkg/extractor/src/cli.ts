#!/usr/bin/env node
import { parseArgs } from "node:util";

import { ExtractError } from "./errors.js";
import { extract } from "./extract.js";
import { LAYOUTS, LayoutName } from "./layout.js";

const VERSION = "0.1.0";

const USAGE = `usage: focal-extract --root DIR --out MANIFEST [options]

Convert an image dataset into a feature manifest + FOCALFT1 blob.

options:
  --root DIR            image tree to walk (required)
  --out MANIFEST        manifest path to write (required); blob lands next to it
  --layout NAME         core50 | flat-folders (default core50)
  --stride N            keep every Nth frame per object (default 10)
  --backbone ID         feature backbone (default conv512)
  --test-sessions LIST  comma-separated core50 test sessions (default 3,7,10)
  --name NAME           dataset name (default: root directory name)
  --blob-name NAME      blob filename (default features.bin)
  --force               overwrite existing outputs
  --help                show this message
  --version             show version
`;

function parseSessions(raw: string): number[] {
  const parts = raw.split(",").map((p) => p.trim()).filter((p) => p.length > 0);
  const sessions = parts.map(Number);
  if (sessions.length === 0 || sessions.some((s) => !Number.isInteger(s) || s < 1)) {
    throw new ExtractError("usage", `--test-sessions must be positive integers, got '${raw}'`);
  }
  return sessions;
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        root: { type: "string" },
        out: { type: "string" },
        layout: { type: "string", default: "core50" },
        stride: { type: "string", default: "10" },
        backbone: { type: "string", default: "conv512" },
        "test-sessions": { type: "string", default: "3,7,10" },
        name: { type: "string" },
        "blob-name": { type: "string", default: "features.bin" },
        force: { type: "boolean", default: false },
        help: { type: "boolean", default: false },
        version: { type: "boolean", default: false },
      },
      strict: true,
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  const opts = parsed.values;
  if (opts.help) {
    console.log(USAGE);
    return 0;
  }
  if (opts.version) {
    console.log(`focal-extract ${VERSION}`);
    return 0;
  }
  try {
    if (!opts.root || !opts.out) {
      throw new ExtractError("usage", "--root and --out are required");
    }
    if (!LAYOUTS.includes(opts.layout as LayoutName)) {
      throw new ExtractError("usage", `unknown layout '${opts.layout}' (available: ${LAYOUTS.join(", ")})`);
    }
    const stride = Number(opts.stride);
    if (!Number.isInteger(stride) || stride < 1) {
      throw new ExtractError("usage", `--stride must be a positive integer, got '${opts.stride}'`);
    }
    extract({
      root: opts.root,
      out: opts.out,
      layout: opts.layout as LayoutName,
      stride,
      backbone: opts.backbone,
      testSessions: parseSessions(opts["test-sessions"]!),
      name: opts.name,
      blobName: opts["blob-name"],
      force: opts.force,
    });
    return 0;
  } catch (err) {
    if (err instanceof ExtractError) {
      console.error(`error: ${err.message}`);
      return err.kind === "usage" ? 1 : 2;
    }
    if (err instanceof Error && "code" in err && typeof err.code === "string") {
      // filesystem-level failure (missing root, permission, ...)
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("focal-extract");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
