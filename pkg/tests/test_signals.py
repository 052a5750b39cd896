"""Trace storage, interpolation, and retention."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prstl.signals import (
    DENSE, DISCRETE, NonFiniteSample, OutOfOrderSample, QueryOutOfRange, Sample,
    Trace, TraceEnsemble, TraceError, UnknownVariable,
)


def test_append_two_samples():
    tr = Trace()
    tr.append("speed", 0.0, 42.0).append("speed", 0.1, 43.0)
    assert tr.sample_count("speed") == 2


def test_equal_timestamp_rejected():
    tr = Trace()
    tr.append("speed", 0.1, 1.0)
    with pytest.raises(OutOfOrderSample):
        tr.append("speed", 0.1, 2.0)


def test_decreasing_timestamp_rejected():
    tr = Trace()
    tr.append("speed", 1.0, 1.0)
    with pytest.raises(OutOfOrderSample):
        tr.append("speed", 0.5, 2.0)


def test_non_finite_value_rejected():
    tr = Trace()
    with pytest.raises(NonFiniteSample):
        tr.append("speed", 0.2, float("nan"))
    with pytest.raises(NonFiniteSample):
        tr.append("speed", 0.2, float("inf"))


def test_negative_time_rejected():
    with pytest.raises(NonFiniteSample):
        Trace().append("x", -1.0, 0.0)
    with pytest.raises(NonFiniteSample):
        Sample(-1.0, 0.0)


def test_horizon_enforced():
    tr = Trace(horizon=10.0)
    tr.append("x", 10.0, 1.0)
    with pytest.raises(TraceError):
        Trace(horizon=5.0).append("x", 6.0, 1.0)


def test_unknown_variable():
    with pytest.raises(UnknownVariable):
        Trace().value_at("ghost", 0.0)


def test_dense_interpolation_midpoint_endpoint_range():
    tr = Trace(semantics=DENSE)
    tr.extend("x", [0.0, 2.0], [0.0, 4.0])
    assert tr.value_at("x", 1.0) == 2.0
    assert tr.value_at("x", 2.0) == 4.0
    with pytest.raises(QueryOutOfRange):
        tr.value_at("x", 3.0)
    with pytest.raises(QueryOutOfRange):
        tr.value_at("x", -0.5)


def test_discrete_requires_exact_timestamp():
    tr = Trace(semantics=DISCRETE)
    tr.extend("x", [0.0, 1.0], [5.0, 6.0])
    assert tr.value_at("x", 1.0) == 6.0
    with pytest.raises(QueryOutOfRange):
        tr.value_at("x", 0.5)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(-1e6, 1e6)),
                min_size=2, max_size=30, unique_by=lambda s: s[0]))
def test_interpolation_exact_at_samples_and_bounded(samples):
    samples = sorted(samples)
    times = [t for t, _ in samples]
    values = [v for _, v in samples]
    if len(set(times)) != len(times):
        return
    tr = Trace(semantics=DENSE)
    tr.extend("x", times, values)
    # bit-for-bit exactness at stored samples
    for t, v in samples:
        assert tr.value_at("x", t) == v
    # boundedness between any bracketing pair
    rng = np.random.default_rng(1)
    for _ in range(10):
        q = float(rng.uniform(times[0], times[-1]))
        out = tr.value_at("x", q)
        i = np.searchsorted(times, q)
        if times[min(i, len(times) - 1)] == q:
            continue
        lo, hi = sorted((values[i - 1], values[i]))
        assert lo - 1e-9 <= out <= hi + 1e-9


def test_retention_bound_on_sample_count():
    """With a registered bound, retained samples never exceed
    ceil(T_max / dt_min) + 2."""
    rng = np.random.default_rng(7)
    tr = Trace()
    tr.register_bound(10.0)
    t = 0.0
    min_gap = math.inf
    for _ in range(5000):
        gap = float(rng.uniform(0.05, 0.5))
        min_gap = min(min_gap, gap)
        t += gap
        tr.append("x", t, float(rng.normal()))
        assert tr.sample_count("x") <= math.ceil(10.0 / min_gap) + 2


def test_retention_keeps_samples_inside_window():
    tr = Trace()
    tr.register_bound(5.0)
    for k in range(100):
        tr.append("x", float(k), float(k))
    times, values = tr.series("x")
    assert times[0] >= 99.0 - 5.0
    assert times[-1] == 99.0
    assert tr.value_at("x", 96.0) == 96.0


def test_retention_without_registration_keeps_everything():
    tr = Trace()
    for k in range(1000):
        tr.append("x", float(k), 0.0)
    assert tr.sample_count("x") == 1000


def test_extend_matches_append():
    a = Trace()
    b = Trace()
    times = [0.0, 0.5, 1.25]
    values = [1.0, -2.0, 3.5]
    a.extend("x", times, values)
    for t, v in zip(times, values):
        b.append("x", t, v)
    assert np.array_equal(a.series("x")[0], b.series("x")[0])
    assert np.array_equal(a.series("x")[1], b.series("x")[1])


def test_grid_unions_variables():
    tr = Trace()
    tr.extend("a", [0.0, 2.0], [1.0, 1.0])
    tr.extend("b", [1.0, 2.0], [1.0, 1.0])
    assert tr.grid().tolist() == [0.0, 1.0, 2.0]


def test_ensemble_validation():
    t1 = Trace().extend("x", [0, 1], [1, 2])
    t2 = Trace().extend("x", [0, 1], [3, 4])
    ens = TraceEnsemble([t1, t2])
    assert len(ens) == 2
    with pytest.raises(TraceError):
        TraceEnsemble([])
    t3 = Trace().extend("y", [0, 1], [0, 0])
    with pytest.raises(TraceError):
        TraceEnsemble([t1, t3])
    t4 = Trace().extend("x", [0, 2], [0, 0])
    with pytest.raises(TraceError):
        TraceEnsemble([t1, t4])
