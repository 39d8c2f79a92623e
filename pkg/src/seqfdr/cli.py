"""Command-line front end.

Three modes, one per invocation:

* ``seqfdr --generate n=1000 --seed 7 --output-dir out`` draws a synthetic
  stream and writes ``generated.csv`` plus ``generator_spec.json``.
* ``seqfdr --input data.csv --output-dir out`` runs the engine over a CSV
  file (or ``-`` for stdin) and writes decisions, trace, summaries, a
  posterior snapshot, the echoed records and the effective config.
* ``seqfdr --benchmark n=10000,20000,40000 --particles 2000`` times the
  single-pass engine at several stream sizes and writes ``benchmark.csv``.

Exit codes: 0 on success, 2 for bad usage or malformed input, 1 for
runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .csvio import (
    atomic_write_text,
    fmt6,
    write_benchmark,
    write_decisions,
    write_json,
    write_records,
    write_trace,
    read_records,
)
from .datagen import default_generator_spec, generate, generate_arrays, spec_to_dict
from .engine import ConfusionTable, Engine, EngineConfig, confusion
from .model import TestRecord

SUMMARY_SCHEMA = "seqfdr.summary/1"
#: Alternative components below this weight are reported separately.
MINOR_COMPONENT_WEIGHT = 0.01


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqfdr",
        description="Streaming one-pass multiple testing with covariate-dependent priors.",
    )
    parser.add_argument("--input", metavar="PATH|-", help="input records CSV, or - for stdin")
    parser.add_argument("--generate", metavar="SPEC",
                        help="draw a synthetic stream, e.g. n=1000 or n=1000,j=2,dist=uniform")
    parser.add_argument("--benchmark", metavar="SPEC",
                        help="time the engine over several sizes, e.g. n=10000,20000,40000")
    parser.add_argument("--output-dir", default="seqfdr_out", metavar="PATH")
    parser.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parser.add_argument("--seed", type=int, metavar="N")
    parser.add_argument("--particles", type=int, metavar="M")
    parser.add_argument("--ness-threshold", type=float, metavar="R")
    parser.add_argument("--decision-threshold", type=float, metavar="R")
    parser.add_argument("--workers", type=int, metavar="N")
    parser.add_argument("--streaming-decisions", action="store_true",
                        help="also emit a provisional decision per processed record")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


# ----------------------------------------------------------------------
# config handling
# ----------------------------------------------------------------------
def parse_config_file(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"{path} line {line_no}: expected 'key = value'")
            key, value = body.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def effective_config(args: argparse.Namespace) -> EngineConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    overrides = {
        "seed": args.seed,
        "n_particles": args.particles,
        "ness_reinit_threshold": args.ness_threshold,
        "decision_threshold": args.decision_threshold,
        "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    return EngineConfig.from_flat_dict(values)


def config_echo(cfg: EngineConfig) -> str:
    lines = ["# effective engine configuration"]
    for key, value in cfg.to_flat_dict().items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_kv_spec(text: str, what: str) -> dict:
    out: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"--{what}: expected key=value items, got {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# ----------------------------------------------------------------------
# report
# ----------------------------------------------------------------------
def build_summary(cfg: EngineConfig, engine: Engine, decisions, table: ConfusionTable | None):
    phi = engine.map_particle
    ness = np.array([t.ness for t in engine.trace])
    reinit_steps = [t.t for t in engine.trace if t.reinit]
    dominant = [c for c in phi.alt.components if c.w >= MINOR_COMPONENT_WEIGHT]
    minor = [c for c in phi.alt.components if c.w < MINOR_COMPONENT_WEIGHT]
    payload = {
        "schema": SUMMARY_SCHEMA,
        "n_records": len(decisions),
        "n_covariates": int(phi.beta.shape[0] - 1),
        "declared_alternative": int(sum(d.declared for d in decisions)),
        "decision_threshold": cfg.decision_threshold,
        "map_estimate": {
            "beta": [float(v) for v in phi.beta],
            "mu0": phi.null.mu0,
            "sigma0": phi.null.sigma0,
            "n0": phi.n0,
            "n1": phi.n1,
            "k": phi.alt.k,
            "dominant_components": [[c.w, c.mu, c.sigma] for c in dominant],
            "minor_components": [[c.w, c.mu, c.sigma] for c in minor],
        },
        "ness": {
            "min": float(ness.min()),
            "mean": float(ness.mean()),
            "final": float(ness[-1]),
            "reinit_count": len(reinit_steps),
            "reinit_steps": reinit_steps[:50],
        },
        "confusion": None,
    }
    if table is not None:
        payload["confusion"] = {
            "true_null_declared_null": table.true_null_declared_null,
            "true_null_declared_alt": table.true_null_declared_alt,
            "true_alt_declared_null": table.true_alt_declared_null,
            "true_alt_declared_alt": table.true_alt_declared_alt,
            "fdr": table.fdr,
            "power": table.power,
        }
    return payload


def summary_text(payload: dict) -> str:
    est = payload["map_estimate"]
    lines = [
        "seqfdr run summary",
        "==================",
        f"records processed      : {payload['n_records']}",
        f"covariates per record  : {payload['n_covariates']}",
        f"declared alternative   : {payload['declared_alternative']} "
        f"(threshold {fmt6(payload['decision_threshold'])})",
        "",
        "MAP parameter estimate",
        f"  beta        : {', '.join(fmt6(v) for v in est['beta'])}",
        f"  null        : mu0 {fmt6(est['mu0'])}, sigma0 {fmt6(est['sigma0'])}",
        f"  counters    : n0 {fmt6(est['n0'])}, n1 {fmt6(est['n1'])}",
        f"  components  : {est['k']}",
    ]
    for w, mu, sigma in est["dominant_components"]:
        lines.append(f"    w {fmt6(w)}  mu {fmt6(mu)}  sigma {fmt6(sigma)}")
    if est["minor_components"]:
        lines.append(f"  minor components (w < {MINOR_COMPONENT_WEIGHT}):")
        for w, mu, sigma in est["minor_components"]:
            lines.append(f"    w {fmt6(w)}  mu {fmt6(mu)}  sigma {fmt6(sigma)}")
    ness = payload["ness"]
    lines += [
        "",
        "NESS trace",
        f"  min {fmt6(ness['min'])}  mean {fmt6(ness['mean'])}  final {fmt6(ness['final'])}",
        f"  re-initialisations: {ness['reinit_count']}"
        + (f" at steps {ness['reinit_steps']}" if ness["reinit_steps"] else ""),
    ]
    conf = payload["confusion"]
    if conf is not None:
        lines += [
            "",
            "Confusion (truth labels present)",
            "                    declared null   declared alternative",
            f"  true null         {conf['true_null_declared_null']:>12}   {conf['true_null_declared_alt']:>18}",
            f"  true alternative  {conf['true_alt_declared_null']:>12}   {conf['true_alt_declared_alt']:>18}",
            f"  realised FDR   : {fmt6(conf['fdr'])}",
            f"  realised power : {fmt6(conf['power'])}",
        ]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# modes
# ----------------------------------------------------------------------
def run_generate(args: argparse.Namespace) -> int:
    kv = parse_kv_spec(args.generate, "generate")
    if "n" not in kv:
        raise ValueError("--generate requires n=<count>")
    spec = default_generator_spec(
        n=int(kv["n"]),
        seed=args.seed if args.seed is not None else 0,
        n_covariates=int(kv.get("j", 2)),
        covariate_dist=kv.get("dist", "normal"),
        cov_low=float(kv.get("low", -1.0)),
        cov_high=float(kv.get("high", 1.0)),
        convolve=kv.get("convolve", "0") in ("1", "true", "yes"),
    )
    records = generate(spec)
    out = args.output_dir
    os.makedirs(out, exist_ok=True)
    atomic_write_text(os.path.join(out, "generated.csv"), write_records(records))
    write_json(os.path.join(out, "generator_spec.json"), spec_to_dict(spec))
    print(f"wrote {len(records)} records to {os.path.join(out, 'generated.csv')}")
    return 0


def run_engine(args: argparse.Namespace) -> int:
    cfg = effective_config(args)
    out = args.output_dir
    os.makedirs(out, exist_ok=True)

    if args.input == "-":
        records = read_records(sys.stdin, source="<stdin>")
    else:
        with open(args.input, encoding="utf-8", newline="") as handle:
            records = read_records(handle, source=args.input)
    if not records:
        raise ValueError(f"{args.input}: no records")

    streaming_rows = []
    with Engine(cfg) as engine:
        for rec in records:
            engine.step(rec)
            if args.streaming_decisions:
                streaming_rows.append(engine.provisional_decision(rec))
        decisions, _ = engine.finalize_decisions()

        truths = [r.truth for r in records]
        table = confusion(decisions, truths) if all(t is not None for t in truths) else None

        atomic_write_text(os.path.join(out, "records.csv"), write_records(records))
        atomic_write_text(os.path.join(out, "decisions.csv"), write_decisions(decisions))
        if args.streaming_decisions:
            atomic_write_text(os.path.join(out, "streaming_decisions.csv"),
                              write_decisions(streaming_rows))
        atomic_write_text(os.path.join(out, "trace.csv"), write_trace(engine.trace))
        payload = build_summary(cfg, engine, decisions, table)
        write_json(os.path.join(out, "summary.json"), payload)
        atomic_write_text(os.path.join(out, "summary.txt"), summary_text(payload))
        write_json(os.path.join(out, "snapshot.json"), engine.to_snapshot())
        atomic_write_text(os.path.join(out, "effective_config.txt"), config_echo(cfg))

    sys.stdout.write(summary_text(payload))
    return 0


def run_benchmark(args: argparse.Namespace) -> int:
    text = args.benchmark.strip()
    if not text.startswith("n="):
        raise ValueError("--benchmark requires n=<size>[,<size>...]")
    try:
        sizes = [int(s) for s in text[2:].split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"--benchmark: sizes must be integers, got {text[2:]!r}") from None
    if not sizes:
        raise ValueError("--benchmark: at least one size is required")
    cfg = effective_config(args)
    out = args.output_dir
    os.makedirs(out, exist_ok=True)
    rows = []
    for n in sizes:
        spec = default_generator_spec(n=n, seed=cfg.seed)
        z, x, _ = generate_arrays(spec)
        # Stream records lazily: a standing list of n record objects would
        # make collector sweeps scale with n and distort the timing.
        records = (TestRecord(index=i, z=float(z[i]), x=x[i]) for i in range(n))
        with Engine(cfg) as engine:
            t0 = time.perf_counter()
            engine.run(records)
            engine.finalize_decisions()
            elapsed = time.perf_counter() - t0
        rows.append((n, elapsed))
        print(f"n={n:>8}  {elapsed:9.3f} s  ({fmt6(elapsed / n * 1000)} ms/record)")
    for (n1, t1), (n2, t2) in zip(rows, rows[1:]):
        print(f"time({n2})/time({n1}) = {fmt6(t2 / t1)}")
    atomic_write_text(os.path.join(out, "benchmark.csv"), write_benchmark(rows))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    modes = [bool(args.input), bool(args.generate), bool(args.benchmark)]
    if sum(modes) != 1:
        parser.print_usage(sys.stderr)
        sys.stderr.write("seqfdr: exactly one of --input, --generate, --benchmark is required\n")
        return 2
    try:
        if args.generate:
            return run_generate(args)
        if args.benchmark:
            return run_benchmark(args)
        return run_engine(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"seqfdr: error: {exc}\n")
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"seqfdr: failed: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
