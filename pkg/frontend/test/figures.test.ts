import { describe, expect, it } from "vitest";

import { parseCsv } from "../src/csv.js";
import {
  coefficientHistograms,
  covariateSplitHistograms,
  mapTraces,
  nessOverTime,
  runtimeCurve,
} from "../src/figures.js";
import { GeneratorSpec, Snapshot } from "../src/io.js";

const SPEC: GeneratorSpec = {
  schema: "seqfdr.generator/1",
  beta: [-3.5, 0.7071, 0.7071],
  null: { mu0: 0, sigma0: 1 },
  alt: [[1, 3, 0.5]],
};

function tinySnapshot(): Snapshot {
  return {
    schema: "seqfdr.snapshot/1",
    d: 3,
    weights: [0.25, 0.25, 0.5],
    particles: [
      { beta: [-3.2, 0.6, 0.7], mu0: 0, sigma0: 1, n0: 9, n1: 1, components: [[1, 3, 0.5]] },
      { beta: [-3.6, 0.8, 0.6], mu0: 0, sigma0: 1, n0: 9, n1: 1, components: [[1, 3, 0.5]] },
      { beta: [-3.4, 0.7, 0.8], mu0: 0, sigma0: 1, n0: 9, n1: 1, components: [[1, 3, 0.5]] },
    ],
  };
}

const TRACE = parseCsv(
  [
    "t,ness,map_beta0,map_beta1,map_beta2,map_K,map_sigma0,reinit",
    "1,0.9,-4.0,0.5,0.6,1,1.5,0",
    "2,0.8,-3.8,0.6,0.65,1,1.4,0",
    "3,1,-3.6,0.65,0.7,2,1.2,1",
    "4,0.85,-3.55,0.7,0.7,2,1.1,0",
  ].join("\n"),
);

describe("mapTraces", () => {
  it("draws one panel per coefficient with truth reference lines", () => {
    const svg = mapTraces(TRACE, SPEC);
    expect(svg).toContain("<svg");
    expect(svg).toContain('data-value="-3.5"');
    expect(svg.match(/<polyline/g)?.length).toBe(3);
    expect(svg).toContain("MAP coefficient 0 over the stream");
  });

  it("renders a flat series as a constant line", () => {
    const flat = parseCsv(
      "t,ness,map_beta0,map_K,map_sigma0,reinit\n1,1,2.5,1,1,0\n2,1,2.5,1,1,0\n",
    );
    const svg = mapTraces(flat);
    const match = svg.match(/points="([^"]+)"/);
    expect(match).toBeTruthy();
    const ys = match![1].split(" ").map((p) => Number(p.split(",")[1]));
    expect(new Set(ys).size).toBe(1);
  });

  it("is deterministic", () => {
    expect(mapTraces(TRACE, SPEC)).toBe(mapTraces(TRACE, SPEC));
  });
});

describe("nessOverTime", () => {
  it("draws the threshold line and re-init markers", () => {
    const svg = nessOverTime(TRACE);
    expect(svg).toContain('data-value="0.1"');
    expect(svg.match(/class="reinit"/g)?.length).toBe(1);
  });
});

describe("coefficientHistograms", () => {
  it("renders one panel per coordinate with truth lines", () => {
    const svg = coefficientHistograms(tinySnapshot(), SPEC);
    expect(svg.match(/posterior of coefficient/g)?.length).toBe(3);
    expect(svg).toContain('data-value="-3.5"');
    expect(svg).toContain("<rect");
  });

  it("works without a generator spec", () => {
    const svg = coefficientHistograms(tinySnapshot());
    expect(svg).not.toContain("data-value");
  });
});

describe("runtimeCurve", () => {
  it("renders a two-point curve", () => {
    const bench = parseCsv("n,seconds,seconds_per_record\n100,1.5,0.015\n200,3.1,0.0155\n");
    const svg = runtimeCurve(bench);
    expect(svg.match(/class="sample"/g)?.length).toBe(2);
    expect(svg).toContain("wall-clock time vs stream size");
  });
});

describe("covariateSplitHistograms", () => {
  it("splits each covariate by the declared label", () => {
    const records = parseCsv(
      "id,z,x1,x2,h\n0,0.1,0.5,1.0,0\n1,3.2,2.0,2.5,1\n2,0.3,-0.5,0.0,0\n",
    );
    const decisions = parseCsv(
      "id,posterior_prob,declared\n0,0.01,0\n1,0.99,1\n2,0.2,0\n",
    );
    const svg = covariateSplitHistograms(records, decisions);
    expect(svg).toContain("x1: declared signal (1)");
    expect(svg).toContain("x1: declared null (2)");
    expect(svg).toContain("x2: declared signal (1)");
  });

  it("requires covariate columns", () => {
    const records = parseCsv("id,z\n0,0.1\n");
    const decisions = parseCsv("id,posterior_prob,declared\n0,0.5,1\n");
    expect(() => covariateSplitHistograms(records, decisions)).toThrow(/covariate/);
  });
});
