"""CSV and JSON file formats shared by the CLI and the figure renderer.

All CSV files are plain comma-separated text with a ``# schema: ...``
comment line, a header row, ``.`` as the decimal separator and no locale
dependence.  Input records follow ``id,z,x1,...,xJ[,h]``; the optional
``h`` column carries ground-truth labels and enables confusion reporting.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Iterable, Sequence, TextIO

import numpy as np

from .engine import DecisionRecord, StepTrace
from .model import TestRecord

__all__ = [
    "read_records",
    "write_records",
    "write_decisions",
    "read_decisions",
    "write_trace",
    "write_benchmark",
    "atomic_write_text",
    "write_json",
]

RECORDS_SCHEMA = "seqfdr.records/1"
DECISIONS_SCHEMA = "seqfdr.decisions/1"
TRACE_SCHEMA = "seqfdr.trace/1"
BENCHMARK_SCHEMA = "seqfdr.benchmark/1"


def fmt6(value: float) -> str:
    """Format a number with six significant digits."""
    return f"{value:.6g}"


def atomic_write_text(path: str, content: str) -> None:
    """Write a file atomically (temp file + rename)."""
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(content)
    os.replace(tmp, path)


def write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True) + "\n")


# ----------------------------------------------------------------------
# records
# ----------------------------------------------------------------------
def read_records(handle: TextIO, source: str = "<stream>") -> list[TestRecord]:
    """Parse ``id,z,x1,...,xJ[,h]`` rows; errors name the offending line."""
    reader = csv.reader(handle)
    header = None
    line_no = 0
    records: list[TestRecord] = []
    n_cov = None
    has_truth = False
    for row in reader:
        line_no = reader.line_num
        if not row or (row[0].startswith("#")):
            continue
        if header is None:
            header = [c.strip() for c in row]
            if len(header) < 3 or header[0] != "id" or header[1] != "z":
                raise ValueError(
                    f"{source} line {line_no}: header must be id,z,x1,...[,h], got {','.join(header)}"
                )
            has_truth = header[-1] == "h"
            n_cov = len(header) - 2 - (1 if has_truth else 0)
            if n_cov < 1:
                raise ValueError(f"{source} line {line_no}: need at least one covariate column")
            continue
        expected = 2 + n_cov + (1 if has_truth else 0)
        if len(row) != expected:
            raise ValueError(
                f"{source} line {line_no}: expected {expected} fields, got {len(row)}"
            )
        try:
            index = int(row[0])
            z = float(row[1])
            x = np.array([float(v) for v in row[2:2 + n_cov]])
            truth = int(row[-1]) if has_truth else None
        except ValueError as exc:
            raise ValueError(f"{source} line {line_no}: {exc}") from None
        try:
            records.append(TestRecord(index=index, z=z, x=x, truth=truth))
        except ValueError as exc:
            raise ValueError(f"{source} line {line_no}: {exc}") from None
    if header is None:
        raise ValueError(f"{source}: no header row found")
    return records


def write_records(records: Sequence[TestRecord]) -> str:
    n_cov = records[0].x.shape[0] if records else 0
    has_truth = bool(records) and records[0].truth is not None
    cols = ["id", "z"] + [f"x{j + 1}" for j in range(n_cov)] + (["h"] if has_truth else [])
    lines = [f"# schema: {RECORDS_SCHEMA}", ",".join(cols)]
    for rec in records:
        row = [str(rec.index), repr(float(rec.z))] + [repr(float(v)) for v in rec.x]
        if has_truth:
            row.append(str(rec.truth))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# decisions
# ----------------------------------------------------------------------
def write_decisions(decisions: Sequence[DecisionRecord]) -> str:
    # Probabilities keep full precision so a read-back reproduces the
    # in-memory decisions exactly; human-facing summaries round instead.
    lines = [f"# schema: {DECISIONS_SCHEMA}", "id,posterior_prob,declared"]
    for d in decisions:
        lines.append(f"{d.index},{repr(d.posterior_prob)},{d.declared}")
    return "\n".join(lines) + "\n"


def read_decisions(handle: TextIO) -> list[DecisionRecord]:
    reader = csv.reader(handle)
    out: list[DecisionRecord] = []
    header_seen = False
    for row in reader:
        if not row or row[0].startswith("#"):
            continue
        if not header_seen:
            header_seen = True
            continue
        out.append(DecisionRecord(index=int(row[0]), posterior_prob=float(row[1]),
                                  declared=int(row[2])))
    return out


# ----------------------------------------------------------------------
# trace / benchmark
# ----------------------------------------------------------------------
def write_trace(trace: Sequence[StepTrace]) -> str:
    d = len(trace[0].map_beta) if trace else 0
    cols = ["t", "ness"] + [f"map_beta{j}" for j in range(d)] + ["map_K", "map_sigma0", "reinit"]
    lines = [f"# schema: {TRACE_SCHEMA}", ",".join(cols)]
    for entry in trace:
        row = [str(entry.t), fmt6(entry.ness)]
        row += [fmt6(v) for v in entry.map_beta]
        row += [str(entry.map_k), fmt6(entry.map_sigma0), str(int(entry.reinit))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_benchmark(rows: Iterable[tuple[int, float]]) -> str:
    lines = [f"# schema: {BENCHMARK_SCHEMA}", "n,seconds,seconds_per_record"]
    for n, seconds in rows:
        lines.append(f"{n},{fmt6(seconds)},{fmt6(seconds / n)}")
    return "\n".join(lines) + "\n"
