"""Evaluation ledger and plan evaluation.

The ledger is an append-only JSON-lines file: one header line, then one line
per model evaluation. Records are keyed by the level-index vector of the grid
point, so an identical point is never evaluated twice and an interrupted run
resumes where it stopped.
"""
from __future__ import annotations

import json
import logging
import math
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Optional

from .design import RNG_ALGORITHM, DesignPlan
from .exceptions import IncompleteEvaluationError, StalePlanError
from .models import AnalyticModel, ExternalModelSpec

log = logging.getLogger(__name__)

LEDGER_FORMAT = "eescreen-ledger"
LEDGER_VERSION = 1


@dataclass
class EvaluationRecord:
    point_id: int
    key: tuple
    physical_values: list
    outputs: dict
    status: str = "ok"
    attempt: dict = field(default_factory=dict)
    error: Optional[str] = None

    def __post_init__(self):
        self.key = tuple(int(m) for m in self.key)
        if self.status == "ok":
            bad = [n for n, v in self.outputs.items() if not math.isfinite(v)]
            if bad:
                self.status = "failed"
                self.error = f"non-finite output(s) {bad}"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> str:
        doc = {
            "point_id": self.point_id,
            "key": list(self.key),
            "physical_values": self.physical_values,
            "outputs": self.outputs,
            "status": self.status,
            "attempt": self.attempt,
        }
        if self.error is not None:
            doc["error"] = self.error
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EvaluationRecord":
        doc = json.loads(line)
        return cls(
            doc["point_id"], doc["key"], doc["physical_values"], doc["outputs"],
            doc["status"], doc.get("attempt", {}), doc.get("error"),
        )


@dataclass
class EvaluationStats:
    n_points: int = 0
    n_cached: int = 0
    n_invoked: int = 0
    n_failed: int = 0

    def __str__(self):
        return (
            f"{self.n_points} distinct points: {self.n_invoked} new evaluations, "
            f"{self.n_cached} cached, {self.n_failed} failed"
        )


class Ledger:
    """Run ledger, in memory or backed by a JSON-lines file.

    ``run_count`` is the number of model evaluations ever recorded.
    """

    def __init__(self, path=None, config_hash: str = "", plan_hash: str = ""):
        self.path = path
        self.config_hash = config_hash
        self.plan_hash = plan_hash
        self.records: dict = {}
        self.run_count = 0
        self._lock = threading.Lock()
        if path is not None and os.path.exists(path) and os.path.getsize(path) > 0:
            self._load()
        elif path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(self._header(), sort_keys=True) + "\n")

    def _header(self):
        return {
            "type": "header",
            "format": LEDGER_FORMAT,
            "version": LEDGER_VERSION,
            "config_hash": self.config_hash,
            "plan_hash": self.plan_hash,
            "rng": RNG_ALGORITHM,
        }

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            text = fh.read()
        if not text.endswith("\n"):
            # drop a torn final line left by an interrupted writer
            text = text[: text.rfind("\n") + 1]
            with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        lines = text.splitlines()
        if not lines:
            raise StalePlanError(f"{self.path} has no ledger header")
        header = json.loads(lines[0])
        if header.get("format") != LEDGER_FORMAT:
            raise StalePlanError(f"{self.path} is not an evaluation ledger")
        stored = header.get("config_hash", "")
        if self.config_hash and stored and stored != self.config_hash:
            raise StalePlanError(
                f"ledger {self.path} belongs to config {stored[:12]}, not {self.config_hash[:12]}"
            )
        stored_plan = header.get("plan_hash", "")
        if self.plan_hash and stored_plan and stored_plan != self.plan_hash:
            raise StalePlanError(f"ledger {self.path} was produced for a different design")
        self.config_hash = self.config_hash or stored
        self.plan_hash = self.plan_hash or stored_plan
        for n, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                rec = EvaluationRecord.from_json(line)
            except (ValueError, KeyError):
                # a torn final line from an interrupted run
                log.warning("%s:%d: ignoring unreadable ledger line", self.path, n)
                continue
            self._remember(rec)

    def _remember(self, rec: EvaluationRecord):
        prev = self.records.get(rec.key)
        if prev is None or not prev.ok:
            self.records[rec.key] = rec
        self.run_count += 1

    def append(self, records) -> None:
        records = list(records)
        with self._lock:
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    for rec in records:
                        fh.write(rec.to_json() + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            for rec in records:
                self._remember(rec)

    def lookup(self, plan: DesignPlan, point_id: int) -> Optional[EvaluationRecord]:
        return self.records.get(plan.point_index[point_id].index)

    def failures_for(self, plan: DesignPlan) -> list:
        out = []
        for pid in range(plan.n_distinct):
            rec = self.lookup(plan, pid)
            if rec is not None and not rec.ok:
                out.append((pid, rec.error))
        return out

    def records_for(self, plan: DesignPlan) -> list:
        """Ok records for every plan point, renumbered to the plan's point ids.

        Raises :class:`IncompleteEvaluationError` if any point lacks an ok record.
        """
        out, missing = [], []
        for pid in range(plan.n_distinct):
            rec = self.lookup(plan, pid)
            if rec is None or not rec.ok:
                missing.append(pid)
            else:
                out.append(EvaluationRecord(pid, rec.key, rec.physical_values, rec.outputs, "ok", rec.attempt))
        if missing:
            raise IncompleteEvaluationError(missing)
        return out

    def outputs(self, plan: DesignPlan, name: str) -> dict:
        return {rec.point_id: rec.outputs[name] for rec in self.records_for(plan)}


def _chunks(items, size):
    for start in range(0, len(items), size):
        yield items[start:start + size]


def evaluate_plan(
    plan: DesignPlan,
    model,
    output_names=None,
    ledger: Optional[Ledger] = None,
    jobs: int = 1,
    workdir=None,
    timeout_s: Optional[float] = None,
):
    """Evaluate every distinct point of ``plan`` not already held by ``ledger``.

    Returns ``(ledger, stats)``. ``model`` is an :class:`AnalyticModel`, an
    :class:`ExternalModelSpec` or any callable taking reduced coordinates
    and returning a float.
    """
    if ledger is None:
        ledger = Ledger(plan_hash=plan.config_hash)
    if isinstance(model, ExternalModelSpec):
        names = tuple(output_names or model.outputs)
        if sorted(names) != sorted(model.outputs):
            raise ValueError(f"declared outputs {list(names)} differ from model outputs {list(model.outputs)}")
    else:
        names = tuple(output_names or ("y",))
        if len(names) != 1:
            raise ValueError("analytic models produce exactly one output")
        if isinstance(model, AnalyticModel):
            model.check_dimension(plan.k)

    stats = EvaluationStats(n_points=plan.n_distinct)
    todo = []
    for pid, point in enumerate(plan.point_index):
        rec = ledger.records.get(point.index)
        if rec is not None and rec.ok:
            stats.n_cached += 1
        else:
            todo.append(pid)
    if not todo:
        return ledger, stats

    jobs = max(1, int(jobs))
    if isinstance(model, ExternalModelSpec):
        records_iter = _run_external(plan, model, todo, jobs, workdir, timeout_s)
    else:
        records_iter = _run_callable(plan, model, names[0], todo, jobs)
    for batch in records_iter:
        ledger.append(batch)
        stats.n_invoked += len(batch)
        stats.n_failed += sum(not r.ok for r in batch)
    return ledger, stats


def _run_callable(plan, model, name, todo, jobs):
    def one(pid):
        point = plan.point_index[pid]
        phys = plan.physical_values(point)
        try:
            y = float(model(point.coords))
        except Exception as exc:  # a user model may raise anything
            return EvaluationRecord(pid, point.index, phys, {}, "failed", {"source": "analytic"}, repr(exc))
        return EvaluationRecord(pid, point.index, phys, {name: y}, "ok", {"source": "analytic"})

    chunk = 256
    if jobs == 1:
        for ids in _chunks(todo, chunk):
            yield [one(pid) for pid in ids]
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        # map keeps plan order, so the ledger is identical for any worker count
        for ids in _chunks(todo, chunk):
            yield list(pool.map(one, ids))


def _run_external(plan, spec, todo, jobs, workdir, timeout_s):
    from .external import run_external_batch

    if timeout_s is not None:
        spec = ExternalModelSpec(spec.command, spec.outputs, timeout_s, spec.max_parallel, spec.batch_size)
    parallel = max(1, min(jobs if jobs > 1 else spec.max_parallel, len(todo)))
    size = spec.batch_size or -(-len(todo) // parallel)
    names = [p.name for p in plan.parameters]
    keys = {pid: plan.point_index[pid].index for pid in todo}
    batches = [
        [(pid, plan.physical_values(plan.point_index[pid])) for pid in ids]
        for ids in _chunks(todo, size)
    ]
    own_tmp = None
    if workdir is None:
        own_tmp = tempfile.TemporaryDirectory(prefix="eescreen-")
        workdir = own_tmp.name
    try:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(run_external_batch, b, spec, names, workdir, keys) for b in batches]
            for fut in as_completed(futures):
                yield fut.result()
    finally:
        if own_tmp is not None:
            own_tmp.cleanup()
