import pytest
from hypothesis import given
from hypothesis import strategies as st

from vidbus.errors import CapacityViolated, InvalidConfig, InvalidSampleWindow, MonotonicityViolated
from vidbus.scheduler import Bank, classify, load_rate, processing_rate


@pytest.mark.parametrize(
    "priority, threshold, bank",
    [(0, 3, Bank.PQ), (3, 3, Bank.PQ), (9, 3, Bank.WRR), (4, 3, Bank.WRR), (9, 9, Bank.PQ), (1, 0, Bank.WRR)],
)
def test_classify(priority, threshold, bank):
    assert classify(priority, threshold) is bank


def test_classify_exhaustive():
    for p in range(10):
        for t in range(10):
            assert classify(p, t) is (Bank.PQ if p <= t else Bank.WRR)


@pytest.mark.parametrize("backlog, cap, expected", [(0, 100, 0.0), (100, 100, 1.0), (25, 200, 0.125)])
def test_load_rate_examples(backlog, cap, expected):
    assert load_rate(backlog, cap) == expected


def test_load_rate_errors():
    with pytest.raises(InvalidConfig):
        load_rate(0, 0)
    with pytest.raises(CapacityViolated):
        load_rate(101, 100)
    with pytest.raises(CapacityViolated):
        load_rate(-1, 100)


@given(st.integers(1, 10**12).flatmap(lambda c: st.tuples(st.integers(0, c), st.just(c))))
def test_load_rate_in_unit_interval(args):
    backlog, cap = args
    assert 0.0 <= load_rate(backlog, cap) <= 1.0


def test_processing_rate_examples():
    t = 100.0
    assert processing_rate(1000, 400, t + 2, t) == 300
    assert processing_rate(500, 500, t + 1, t) == 0
    with pytest.raises(MonotonicityViolated):
        processing_rate(400, 500, t + 1, t)
    with pytest.raises(InvalidSampleWindow):
        processing_rate(500, 400, t, t)
    with pytest.raises(InvalidSampleWindow):
        processing_rate(500, 400, t - 1, t)


@given(
    st.integers(0, 10**12),
    st.integers(0, 10**12),
    st.floats(0, 1e6, allow_nan=False),
    st.floats(1e-6, 1e6, allow_nan=False),
)
def test_processing_rate_non_negative(a, b, prev, window):
    hi, lo = max(a, b), min(a, b)
    now = prev + window
    if now <= prev:
        return
    assert processing_rate(hi, lo, now, prev) >= 0
