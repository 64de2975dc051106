"""CSV request/response protocol for external simulators.

Request file: header ``point_id,<parameter names...>``, one row per point,
physical values written with ``repr`` (decimal dot, no grouping). Response
file: header ``point_id,<output names...>``, rows in any order, every
requested id exactly once.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import subprocess
import time
from datetime import datetime, timezone

from .ledger import EvaluationRecord
from .models import ExternalModelSpec

log = logging.getLogger(__name__)


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def write_request(path, points, parameter_names) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_id", *parameter_names])
        for pid, values in points:
            w.writerow([pid, *(repr(float(v)) for v in values)])


def read_response(path, requested_ids, output_names):
    """Parse a response file.

    Returns ``(values, errors)``: ``values`` maps id -> {name: float} for
    well-formed rows, ``errors`` maps id -> reason for the rest. A header
    mismatch fails every id.
    """
    requested = set(requested_ids)
    values, errors, seen = {}, {}, {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        return {}, {pid: f"response file unreadable: {exc}" for pid in requested}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {}, {pid: "empty response file" for pid in requested}
        header = [h.strip() for h in header]
        if header[:1] != ["point_id"] or sorted(header[1:]) != sorted(output_names) or len(set(header)) != len(header):
            reason = f"response header {header} does not match point_id + {list(output_names)}"
            return {}, {pid: reason for pid in requested}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                pid = int(row[0])
            except ValueError:
                log.warning("%s:%d: unparseable point id %r", path, lineno, row[0])
                continue
            seen[pid] = seen.get(pid, 0) + 1
            if pid not in requested:
                continue
            if len(row) != len(header):
                errors[pid] = f"line {lineno}: expected {len(header)} cells, got {len(row)}"
                continue
            try:
                out = {name: float(cell) for name, cell in zip(header[1:], row[1:])}
            except ValueError:
                errors[pid] = f"line {lineno}: non-numeric cell in {row[1:]}"
                continue
            bad = [n for n, v in out.items() if not math.isfinite(v)]
            if bad:
                errors[pid] = f"line {lineno}: non-finite value for {bad}"
                continue
            values[pid] = out
    for pid, count in seen.items():
        if pid in requested and count > 1:
            values.pop(pid, None)
            errors[pid] = f"id appears {count} times in response"
    for pid in requested - set(values) - set(errors):
        errors[pid] = "id missing from response"
    return values, errors


def run_external_batch(points, spec: ExternalModelSpec, parameter_names, workdir, keys=None):
    """Evaluate ``points`` (a list of ``(point_id, physical_values)``) in one process call.

    Failures never raise: each point comes back as an ok or failed record.
    A nonzero exit status fails every row even if the response looks complete.
    """
    os.makedirs(workdir, exist_ok=True)
    ids = [pid for pid, _ in points]
    tag = f"{ids[0]}-{ids[-1]}" if ids else "empty"
    request = os.path.abspath(os.path.join(workdir, f"request_{tag}.csv"))
    response = os.path.abspath(os.path.join(workdir, f"response_{tag}.csv"))
    if os.path.exists(response):
        os.remove(response)
    write_request(request, points, parameter_names)
    cmd = [arg.replace("{request}", request).replace("{response}", response) for arg in spec.command]

    started, t0 = _now(), time.monotonic()
    exit_status, failure = None, None
    try:
        proc = subprocess.run(cmd, timeout=spec.timeout_s, capture_output=True, text=True)
        exit_status = proc.returncode
        if proc.returncode != 0:
            tail = (proc.stderr or "").strip()[-500:]
            failure = f"command exited with status {proc.returncode}" + (f": {tail}" if tail else "")
    except subprocess.TimeoutExpired:
        failure = f"timed out after {spec.timeout_s} s"
    except OSError as exc:
        failure = f"could not start {cmd[0]!r}: {exc}"
    attempt = {
        "source": "external",
        "started": started,
        "finished": _now(),
        "duration_s": round(time.monotonic() - t0, 3),
        "exit_status": exit_status,
    }

    if failure is None:
        values, errors = read_response(response, ids, spec.outputs)
    else:
        values, errors = {}, {pid: failure for pid in ids}

    keys = keys or {}
    records = []
    for pid, phys in points:
        if pid in values:
            out = {name: values[pid][name] for name in spec.outputs}
            records.append(EvaluationRecord(pid, keys.get(pid, ()), list(phys), out, "ok", attempt))
        else:
            records.append(
                EvaluationRecord(pid, keys.get(pid, ()), list(phys), {}, "failed", attempt, errors[pid])
            )
    return records
