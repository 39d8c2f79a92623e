/** Loading of run-directory artifacts (documented CSV/JSON schemas only). */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { Table, parseCsv } from "./csv.js";

export interface SnapshotParticle {
  beta: number[];
  mu0: number;
  sigma0: number;
  n0: number;
  n1: number;
  components: [number, number, number][];
}

export interface Snapshot {
  schema: string;
  d: number;
  weights: number[];
  particles: SnapshotParticle[];
}

export interface GeneratorSpec {
  schema: string;
  beta: number[];
  null: { mu0: number; sigma0: number };
  alt: [number, number, number][];
}

export interface RunDirectory {
  trace?: Table;
  decisions?: Table;
  records?: Table;
  snapshot?: Snapshot;
  benchmark?: Table;
  generatorSpec?: GeneratorSpec;
  /** file name -> load error, for everything that could not be read */
  errors: Map<string, string>;
}

function tryLoad<T>(errors: Map<string, string>, name: string, load: () => T): T | undefined {
  try {
    return load();
  } catch (err) {
    errors.set(name, err instanceof Error ? err.message : String(err));
    return undefined;
  }
}

export function loadRunDirectory(dir: string): RunDirectory {
  const errors = new Map<string, string>();
  const csv = (name: string) =>
    tryLoad(errors, name, () => parseCsv(readFileSync(join(dir, name), "utf-8")));
  const json = <T>(name: string) =>
    tryLoad(errors, name, () => JSON.parse(readFileSync(join(dir, name), "utf-8")) as T);
  return {
    trace: csv("trace.csv"),
    decisions: csv("decisions.csv"),
    records: csv("records.csv"),
    benchmark: csv("benchmark.csv"),
    snapshot: json<Snapshot>("snapshot.json"),
    generatorSpec: json<GeneratorSpec>("generator_spec.json"),
    errors,
  };
}
