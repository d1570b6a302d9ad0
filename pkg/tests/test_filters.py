import math

import numpy as np
import pytest

from volfilt.filters import (
    VolatilityFilter,
    differenced_output,
    differenced_series,
    fast_slow_weights,
    filter_series,
    make_triangular_fast_weights,
    make_triangular_slow_weights,
    make_uniform_weights,
)


def brute(x, w):
    """Direct dot product over the newest len(w) squares (newest first)."""
    T = len(w)
    out = []
    for t in range(len(x)):
        if t < T - 1:
            out.append(None)
            continue
        acc = 0.0
        for k in range(T):
            acc += w[k] * x[t - k] ** 2
        out.append(math.sqrt(acc))
    return out


def test_uniform_weights():
    assert make_uniform_weights(5).tolist() == [0.25] * 5
    assert make_uniform_weights(5).sum() == pytest.approx(1.25)
    assert make_uniform_weights(2).tolist() == [1.0, 1.0]
    assert np.all(make_uniform_weights(251) == 1 / 250)


def test_triangular_weights():
    assert make_triangular_slow_weights(3) == pytest.approx([1 / 6, 2 / 6, 3 / 6], rel=0, abs=1e-16)
    assert make_triangular_slow_weights(2) == pytest.approx([1 / 3, 2 / 3])
    assert make_triangular_fast_weights(3) == pytest.approx([3 / 6, 2 / 6, 1 / 6])
    assert make_triangular_fast_weights(2) == pytest.approx([2 / 3, 1 / 3])
    assert make_triangular_slow_weights(250)[0] == 1 / 31375
    for T in (2, 3, 20, 250):
        assert math.fsum(make_triangular_slow_weights(T)) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(make_triangular_fast_weights(20), make_triangular_slow_weights(20)[::-1])


@pytest.mark.parametrize("ctor", [make_uniform_weights, make_triangular_slow_weights, make_triangular_fast_weights])
def test_window_validation(ctor):
    for bad in (1, 0, -3, 2.5):
        with pytest.raises(ValueError):
            ctor(bad)


def test_push_warmup_and_constant():
    f = VolatilityFilter(make_triangular_fast_weights(4))
    assert [f.push(3.0) for _ in range(3)] == [None, None, None]
    assert f.push(3.0) == pytest.approx(3.0)
    assert f.ready and f.fill_count == 4

    u = VolatilityFilter(make_uniform_weights(5))
    vals = [u.push(1.0) for _ in range(5)]
    assert vals[-1] == pytest.approx(math.sqrt(1.25))  # 1.1180
    z = VolatilityFilter(make_uniform_weights(3))
    assert [z.push(0.0) for _ in range(3)][-1] == 0.0


def test_push_constant_any_scheme():
    c = -2.5
    for w in (make_uniform_weights(7), make_triangular_slow_weights(7)):
        f = VolatilityFilter(w)
        for _ in range(10):
            out = f.push(c)
        assert out == pytest.approx(abs(c) * math.sqrt(w.sum()))


def test_nonfinite_rejected_state_unchanged():
    f = VolatilityFilter(make_uniform_weights(3))
    for v in (1.0, 2.0, 3.0):
        f.push(v)
    before = f.value()
    for bad in (float("nan"), float("inf")):
        with pytest.raises(ValueError):
            f.push(bad)
    assert f.fill_count == 3 and f.value() == before


def test_push_matches_bruteforce_and_batch():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(300) * 3
    for w in (make_uniform_weights(11), make_triangular_slow_weights(11), make_triangular_fast_weights(11)):
        f = VolatilityFilter(w)
        stream = [f.push(v) for v in x]
        ref = brute(x, w)
        batch = filter_series(x, w)
        for s, r, b in zip(stream, ref, batch):
            if r is None:
                assert s is None and np.isnan(b)
            else:
                assert s == pytest.approx(r, rel=1e-12)
                assert b == pytest.approx(r, rel=1e-12)


def test_scale_equivariance():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(200)
    for w in fast_slow_weights("uniform", 5, 30) + fast_slow_weights("triangular", 5, 30):
        a = filter_series(x, w)
        b = filter_series(3.7 * x, w)
        np.testing.assert_allclose(b[~np.isnan(a)], 3.7 * a[~np.isnan(a)], rtol=1e-12)


def test_differenced_output():
    assert differenced_output([1.0] * 5 + [3.0], 5) == 2.0
    assert differenced_output([1.0] * 5, 5) is None
    sl = filter_series(np.full(100, 1.7), make_uniform_weights(10))
    d = differenced_series(sl, 10)
    assert np.all(d[19:] == 0.0)
    assert np.all(np.isnan(d[:19]))


def test_reset_and_bad_weights():
    f = VolatilityFilter([0.5, 0.5])
    f.push(1.0), f.push(1.0)
    f.reset()
    assert f.fill_count == 0 and f.value() is None
    with pytest.raises(ValueError):
        VolatilityFilter([0.5, 0.0])
    with pytest.raises(ValueError):
        VolatilityFilter([])
    with pytest.raises(ValueError):
        fast_slow_weights("hann", 5, 10)
