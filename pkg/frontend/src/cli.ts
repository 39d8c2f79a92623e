#!/usr/bin/env node
/**
 * plotkit <output_dir> [--format svg|png] [--out-dir DIR]
 *
 * Renders the five figure types from a completed run directory. Each
 * figure is attempted independently: a missing or malformed input file
 * produces a named error on stderr while the remaining figures are still
 * written. Exit code 0 when every figure rendered, 3 otherwise.
 *
 * PNG output rasterises the SVGs through an external converter
 * (rsvg-convert, inkscape or ImageMagick) and fails with a clear message
 * when none is installed.
 */

import { execFileSync, spawnSync } from "node:child_process";
import { mkdirSync, writeFileSync } from "node:fs";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import {
  coefficientHistograms,
  covariateSplitHistograms,
  mapTraces,
  nessOverTime,
  runtimeCurve,
} from "./figures.js";
import { RunDirectory, loadRunDirectory } from "./io.js";

interface Options {
  runDir: string;
  outDir: string;
  format: "svg" | "png";
}

export function parseArgs(argv: string[]): Options {
  let runDir: string | undefined;
  let outDir: string | undefined;
  let format: "svg" | "png" = "svg";
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--format") {
      const value = argv[++i];
      if (value !== "svg" && value !== "png") {
        throw new Error(`--format must be svg or png, got ${value}`);
      }
      format = value;
    } else if (arg === "--out-dir") {
      outDir = argv[++i];
      if (!outDir) throw new Error("--out-dir needs a path");
    } else if (arg.startsWith("--")) {
      throw new Error(`unknown flag ${arg}`);
    } else if (!runDir) {
      runDir = arg;
    } else {
      throw new Error(`unexpected argument ${arg}`);
    }
  }
  if (!runDir) {
    throw new Error("usage: plotkit <output_dir> [--format svg|png] [--out-dir DIR]");
  }
  return { runDir, outDir: outDir ?? runDir, format };
}

type FigureBuilder = (run: RunDirectory) => string;

function need<T>(run: RunDirectory, value: T | undefined, file: string): T {
  if (value === undefined) {
    const reason = run.errors.get(file) ?? "not loaded";
    throw new Error(`${file}: ${reason}`);
  }
  return value;
}

export const FIGURES: Record<string, FigureBuilder> = {
  coefficient_histograms: (run) =>
    coefficientHistograms(need(run, run.snapshot, "snapshot.json"), run.generatorSpec),
  map_traces: (run) => mapTraces(need(run, run.trace, "trace.csv"), run.generatorSpec),
  ness: (run) => nessOverTime(need(run, run.trace, "trace.csv")),
  runtime: (run) => runtimeCurve(need(run, run.benchmark, "benchmark.csv")),
  covariate_split: (run) =>
    covariateSplitHistograms(
      need(run, run.records, "records.csv"),
      need(run, run.decisions, "decisions.csv"),
    ),
};

function findRasterizer(): [string, (svg: string, png: string) => string[]] | undefined {
  const candidates: [string, (svg: string, png: string) => string[]][] = [
    ["rsvg-convert", (svg, png) => ["-o", png, svg]],
    ["inkscape", (svg, png) => [svg, "--export-type=png", `--export-filename=${png}`]],
    ["convert", (svg, png) => [svg, png]],
  ];
  for (const [tool, args] of candidates) {
    const probe = spawnSync(tool, ["--version"], { stdio: "ignore" });
    if (!probe.error) {
      return [tool, args];
    }
  }
  return undefined;
}

export function renderAll(options: Options): { written: string[]; failed: Map<string, string> } {
  const run = loadRunDirectory(options.runDir);
  mkdirSync(options.outDir, { recursive: true });
  let rasterizer: ReturnType<typeof findRasterizer>;
  if (options.format === "png") {
    rasterizer = findRasterizer();
    if (!rasterizer) {
      throw new Error(
        "png output needs an SVG rasterizer (rsvg-convert, inkscape or ImageMagick " +
          "convert) on PATH; none found. Use --format svg instead.",
      );
    }
  }
  const written: string[] = [];
  const failed = new Map<string, string>();
  for (const [name, build] of Object.entries(FIGURES)) {
    try {
      const svg = build(run);
      const svgPath = join(options.outDir, `${name}.svg`);
      writeFileSync(svgPath, svg, "utf-8");
      if (options.format === "png" && rasterizer) {
        const pngPath = join(options.outDir, `${name}.png`);
        const [tool, args] = rasterizer;
        execFileSync(tool, args(svgPath, pngPath));
        written.push(pngPath);
      } else {
        written.push(svgPath);
      }
    } catch (err) {
      failed.set(name, err instanceof Error ? err.message : String(err));
    }
  }
  return { written, failed };
}

export function main(argv: string[]): number {
  let options: Options;
  try {
    options = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`plotkit: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
  let result;
  try {
    result = renderAll(options);
  } catch (err) {
    process.stderr.write(`plotkit: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
  for (const path of result.written) {
    process.stdout.write(`wrote ${path}\n`);
  }
  for (const [name, message] of result.failed) {
    process.stderr.write(`plotkit: ${name}: error: ${message}\n`);
  }
  return result.failed.size === 0 ? 0 : 3;
}

const invokedDirectly = (() => {
  if (!process.argv[1]) return false;
  try {
    return fileURLToPath(import.meta.url) === resolve(process.argv[1]);
  } catch {
    return false;
  }
})();
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
