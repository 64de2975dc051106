"""End-to-end acceptance checks.

Each check prints one ``PASS``/``FAIL`` line (visible with ``pytest -s`` or
in the captured output of a failure) and asserts at its stated tolerance.
"""
import math
import time
from itertools import product

import numpy as np
import pytest
from scipy.stats import chisquare

from eescreen.cli import main
from eescreen.config import load_config
from eescreen.design import ParameterSpec, sample_first_order, sample_second_order
from eescreen.effects import aggregate, compute_effects, first_order_effects, summarize
from eescreen.ledger import evaluate_plan
from eescreen.models import AnalyticModel
from eescreen.report import classify_all, monotonicity_ratios
from eescreen.transforms import TransformSpec, transformed_outputs


def report(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    assert ok, f"{name}: {detail}"


def unit_params(k, levels=10):
    return [ParameterSpec(f"x{i + 1}", 0.0, 1.0, levels) for i in range(k)]


def test_linear_oracle():
    t0 = time.perf_counter()
    # coefficients of mixed sign within 1% of each other: nothing is negligible
    a = [(1 if i % 2 else -1) * (5.0 + 0.002 * i) for i in range(24)]
    plan = sample_first_order(unit_params(24), 10, seed=11)
    ledger, _ = evaluate_plan(plan, AnalyticModel("linear", {"a": a}))
    summary = aggregate(compute_effects(plan, ledger.outputs(plan, "y")))
    zones = classify_all(summary)
    elapsed = time.perf_counter() - t0
    sig = max(s.sigma for s in summary)
    err = max(abs(s.mu_star - abs(ai)) for s, ai in zip(summary, a))
    ok = sig <= 1e-9 and err <= 1e-9 and set(zones) == {"almost_linear"} and elapsed < 1.0
    report("linear oracle", ok, f"max sigma={sig:.1e} max |mu*-|a||={err:.1e} t={elapsed:.2f}s")


def test_bilinear_second_order_oracle():
    t0 = time.perf_counter()
    plan = sample_second_order(unit_params(12), 10, seed=12)
    ledger, _ = evaluate_plan(plan, AnalyticModel("bilinear", {"c": 3.0, "i": 0, "j": 1}))
    samples = compute_effects(plan, ledger.outputs(plan, "y"))
    elapsed = time.perf_counter() - t0
    e12 = [s.value for s in samples if s.kind == "second" and (s.i, s.j) == (0, 1)]
    pairs = {(s.i, s.j): s for s in aggregate(samples) if s.kind == "second"}
    others = max(s.mu_star for key, s in pairs.items() if key != (0, 1))
    dev = max(abs(v - 3.0) for v in e12)
    ok = (len(e12) == 10 and dev <= 1e-9 and pairs[(0, 1)].sigma <= 1e-9
          and others <= 1e-9 and elapsed < 1.0)
    report("bilinear second-order oracle", ok,
           f"max |EE12-3|={dev:.1e} sigma12={pairs[(0, 1)].sigma:.1e} other mu*={others:.1e} t={elapsed:.2f}s")


def test_log_transform_removes_interaction():
    plan = sample_second_order(unit_params(2), 10, seed=13)
    ledger, _ = evaluate_plan(plan, lambda x: math.exp(2 * x[0] + x[1]))
    runs = ledger.run_count
    raw = [s for s in aggregate(compute_effects(plan, ledger.outputs(plan, "y"))) if s.kind == "first"]
    logged = transformed_outputs([TransformSpec("natural_log")], ledger.records_for(plan), "y")
    after = aggregate(compute_effects(plan, logged))
    first = [s for s in after if s.kind == "first"]
    pair = [s for s in after if s.kind == "second"][0]
    raw_ok = all(s.sigma > 0.1 * s.mu_star for s in raw)
    ok = (raw_ok and max(s.sigma for s in first) <= 1e-9 and pair.mu_star <= 1e-9
          and ledger.run_count == runs)
    report("log transform removes interaction", ok,
           f"raw sigma/mu*={[round(s.ratio_star, 3) for s in raw]} "
           f"log sigma={max(s.sigma for s in first):.1e} EE12 mu*={pair.mu_star:.1e} "
           f"added runs={ledger.run_count - runs}")


class Counting:
    def __init__(self):
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return sum(x)


@pytest.mark.parametrize("mode, k, r", [("first", 24, 10), ("first", 5, 7), ("second", 12, 10), ("second", 4, 3)])
def test_run_count_accounting(mode, k, r):
    if mode == "first":
        plan, expected = sample_first_order(unit_params(k), r, seed=14), r * (k + 1)
    else:
        plan, expected = sample_second_order(unit_params(k), r, seed=14), r * (1 + k + k * (k - 1) // 2)
    model = Counting()
    ledger, stats = evaluate_plan(plan, model)
    _, again = evaluate_plan(plan, model, ledger=ledger)
    ok = (plan.n_evaluations == expected and stats.n_invoked == plan.n_distinct == model.calls
          and again.n_invoked == 0)
    report(f"run-count accounting {mode} k={k} r={r}", ok,
           f"announced={plan.n_evaluations} expected={expected} invoked={model.calls} rerun={again.n_invoked}")


def test_equiprobability():
    t0 = time.perf_counter()
    plan = sample_first_order(unit_params(3), 2000, seed=0)
    starts = np.array([t.points[0].index for t in plan.trajectories])
    ends = np.array([t.points[-1].index for t in plan.trajectories])
    pvalues = []
    for i in range(3):
        for visits in (starts[:, i], ends[:, i]):
            counts = np.bincount(visits, minlength=10)
            pvalues.append(chisquare(counts).pvalue)
    elapsed = time.perf_counter() - t0
    ok = min(pvalues) > 0.01 and elapsed < 5.0
    report("equiprobability", ok, f"min p={min(pvalues):.3f} t={elapsed:.2f}s")


def test_brute_force_equivalence():
    ps = unit_params(2, levels=4)

    def f(x):
        return math.sin(3 * x[0]) * x[1] ** 3 + x[0] * x[1]

    table = {}
    for idx in product(range(4), range(4)):
        for i in range(2):
            j = idx[i] + ps[i].step_levels
            if j < 4:
                hi = idx[:i] + (j,) + idx[i + 1:]
                table[(i, idx)] = (f([m / 3 for m in hi]) - f([m / 3 for m in idx])) / ps[i].delta
    plan = sample_first_order(ps, 100, seed=15)
    y = {pid: f(list(p.coords)) for pid, p in enumerate(plan.point_index)}
    mismatches = 0
    for t, traj in enumerate(plan.trajectories):
        for s in first_order_effects(traj, y, ps, t):
            step = traj.order.index(s.i)
            a, b = traj.points[step].index, traj.points[step + 1].index
            lo = a if a[s.i] < b[s.i] else b
            mismatches += s.value != table[(s.i, lo)]
    report("brute-force equivalence", mismatches == 0, f"{mismatches} of 200 effects differ")


def test_monotonicity_diagnostic():
    rng = np.random.default_rng(16)
    uniform_ok = mixed_ok = True
    for _ in range(200):
        v = rng.uniform(0.01, 10, size=int(rng.integers(2, 30))) * rng.choice([-1, 1])
        rs, ra = monotonicity_ratios(summarize(list(v)))
        uniform_ok &= rs == ra
        v[0] = -v[0]
        rs, ra = monotonicity_ratios(summarize(list(v)))
        mixed_ok &= ra is None or rs < ra
    report("monotonicity diagnostic", uniform_ok and mixed_ok,
           f"sign-uniform equal={uniform_ok} mixed-sign smaller={mixed_ok}")


def _end_to_end(out_dir):
    for cmd in ("plan", "run", "analyze", "report"):
        extra = ["--standin", "--jobs", "3"] if cmd == "run" else []
        code = main([cmd, "--config", "example:experiment_a", "--out-dir", str(out_dir), *extra])
        assert code == 0, cmd
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir()) if p.is_file()}


def test_end_to_end_determinism(tmp_path):
    first = _end_to_end(tmp_path / "one")
    second = _end_to_end(tmp_path / "two")
    kinds = {name.rsplit(".", 1)[1] for name in first}
    differ = [n for n in first if first[n] != second.get(n)]
    ok = first.keys() == second.keys() and not differ and {"json", "jsonl", "csv", "svg"} <= kinds
    report("end-to-end determinism", ok, f"{len(first)} artifacts, differing={differ}")


def test_shipped_config_fidelity():
    cfg = load_config("example:experiment_a")
    by_name = {p.spec.name: (p.spec.x_min, p.spec.x_max) for p in cfg.parameters}
    ok = (cfg.k == 24 and by_name["setpoint"] == (17, 24) and by_name["insulation_thickness"] == (5, 100)
          and by_name["rotation"] == (0, 180))
    report("shipped config fidelity", ok, f"k={cfg.k} setpoint={by_name.get('setpoint')} "
           f"insulation={by_name.get('insulation_thickness')} rotation={by_name.get('rotation')}")
