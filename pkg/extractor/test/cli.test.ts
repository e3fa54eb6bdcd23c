import { existsSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";
import { buildFlatTree } from "./helpers.js";

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "cli-"));
}

function run(argv: string[]): { code: number; err: string } {
  const lines: string[] = [];
  const spyErr = vi.spyOn(console, "error").mockImplementation((m) => lines.push(String(m)));
  const spyOut = vi.spyOn(console, "log").mockImplementation(() => {});
  try {
    return { code: main(argv), err: lines.join("\n") };
  } finally {
    spyErr.mockRestore();
    spyOut.mockRestore();
  }
}

describe("command line", () => {
  it("extracts a tree end to end", () => {
    const root = tmp();
    buildFlatTree(root);
    const out = join(tmp(), "data.json");
    const { code, err } = run(["--root", root, "--out", out, "--layout", "flat-folders"]);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
    expect(existsSync(join(out, "..", "features.bin"))).toBe(true);
    expect(err).toMatch(/blob sha256: [0-9a-f]{64}/);
  });

  it("exits 0 for --help and --version", () => {
    expect(run(["--help"]).code).toBe(0);
    expect(run(["--version"]).code).toBe(0);
  });

  it("exits 1 on usage problems", () => {
    expect(run([]).code).toBe(1);
    expect(run(["--root", "x", "--out", "y", "--layout", "zip"]).code).toBe(1);
    expect(run(["--root", "x", "--out", "y", "--stride", "zero"]).code).toBe(1);
    expect(run(["--unknown-flag"]).code).toBe(1);
    expect(run(["--root", "x", "--out", "y", "--backbone", "mystery"]).code).toBe(1);
  });

  it("exits 2 on data problems", () => {
    const missing = join(tmp(), "nothing-here");
    const out = join(tmp(), "data.json");
    expect(run(["--root", missing, "--out", out]).code).toBe(2);

    const notSessions = tmp(); // exists but has no session directories
    expect(run(["--root", notSessions, "--out", out]).code).toBe(2);
  });
});
