import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eescreen.design import ParameterSpec, sample_first_order, sample_second_order
from eescreen.effects import aggregate, compute_effects
from eescreen.exceptions import TransformDomainError
from eescreen.ledger import EvaluationRecord, evaluate_plan
from eescreen.transforms import TransformSpec, apply, apply_chain, transformed_outputs
from eescreen import transforms as transforms_module


def rec(y, phys=(1.0,), pid=0):
    return EvaluationRecord(pid, (0,) * len(phys), list(phys), {"y": y})


def test_identity():
    assert apply(TransformSpec("identity"), rec(42.0), "y") == 42.0


def test_divide_by_product_arithmetic():
    # 1000 kWh over a 500 m3 volume built from two varying inputs
    t = TransformSpec("divide_by_product", indices=(0, 1), constant=2.0)
    assert apply(t, rec(1000.0, (10.0, 25.0)), "y") == 2.0


def test_empty_divide_is_identity():
    t = TransformSpec("divide_by_product", indices=(), constant=1.0)
    assert apply(t, rec(-3.5), "y") == -3.5


def test_affine_and_chain():
    chain = [TransformSpec("affine", scale=2.0, offset=1.0), TransformSpec("natural_log")]
    assert apply_chain(chain, rec(math.e / 2 - 0.5), "y") == pytest.approx(1.0, abs=1e-15)


def test_record_unmodified():
    r = rec(5.0, (2.0,))
    apply(TransformSpec("divide_by_product", indices=(0,)), r, "y")
    assert r.outputs == {"y": 5.0} and r.physical_values == [2.0]


def test_log_domain_error_names_point():
    with pytest.raises(TransformDomainError) as exc:
        apply(TransformSpec("natural_log"), rec(0.0, pid=17), "y")
    assert exc.value.failures[0][0] == 17
    assert "17" in str(exc.value)


def test_zero_divisor():
    with pytest.raises(TransformDomainError):
        apply(TransformSpec("divide_by_product", indices=(0,)), rec(1.0, (0.0,)), "y")


def test_failures_reported_for_every_point():
    records = [rec(v, pid=n) for n, v in enumerate([1.0, -1.0, 2.0, 0.0])]
    with pytest.raises(TransformDomainError) as exc:
        transformed_outputs([TransformSpec("natural_log")], records, "y")
    assert [pid for pid, _ in exc.value.failures] == [1, 3]


def test_transform_layer_cannot_reach_a_model():
    names = set(vars(transforms_module))
    assert not names & {"evaluate_plan", "run_external_batch", "AnalyticModel", "Ledger"}


def _ps(k):
    return [ParameterSpec(f"x{i}", 0.0, 1.0) for i in range(k)]


def test_log_makes_exponential_model_linear():
    plan = sample_first_order(_ps(2), 12, seed=3)
    ledger, _ = evaluate_plan(plan, lambda x: math.exp(2 * x[0] + x[1]))
    before = ledger.run_count
    values = transformed_outputs([TransformSpec("natural_log")], ledger.records_for(plan), "y")
    summary = aggregate(compute_effects(plan, values))
    assert all(s.sigma <= 1e-9 for s in summary)
    assert [s.mu_star for s in summary] == pytest.approx([2.0, 1.0], abs=1e-9)
    assert ledger.run_count == before


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), a=st.floats(0.1, 3.0), b=st.floats(0.1, 3.0))
def test_log_removes_multiplicative_interaction(seed, a, b):
    plan = sample_second_order(_ps(3), 5, seed)
    f = lambda x: (1 + a * x[0] ** 2) * math.exp(b * x[1]) * (2 + math.sin(x[2]))  # noqa: E731
    ledger, _ = evaluate_plan(plan, f)
    values = transformed_outputs([TransformSpec("natural_log")], ledger.records_for(plan), "y")
    samples = compute_effects(plan, values)
    scale = max(abs(s.value) for s in samples if s.kind == "first")
    assert all(s.value <= 1e-9 * max(scale, 1.0) for s in samples if s.kind == "second")
