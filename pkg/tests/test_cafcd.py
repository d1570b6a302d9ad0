import numpy as np
import pytest

from volfilt.afcd import AfcdConfig, AfcdDetector, detect_afcd
from volfilt.cafcd import CafcdConfig, CafcdDetector, combine_lambdas, detect_cafcd
from volfilt.synth import SynthConfig, gen_piecewise_gaussian, gen_stationary


def test_combine_lambdas():
    assert combine_lambdas([0, 0, 0], [1 / 3] * 3) == 0.0
    assert combine_lambdas([1, 1], [0.5, 0.5]) == 1.0
    assert combine_lambdas([0.4, 0.8], [0.5, 0.5]) == pytest.approx(0.6)
    assert combine_lambdas([1.0] * 3, [1 / 3] * 3) == 1.0  # rounding never exceeds 1
    with pytest.raises(ValueError):
        combine_lambdas([0.1, 0.2], [1.0])


def test_config_validation():
    base = AfcdConfig(mu=1.0)
    with pytest.raises(ValueError):
        CafcdConfig((base, base), combiner=(0.7, 0.7))
    with pytest.raises(ValueError):
        CafcdConfig((base, base), combiner=(1.0,))
    with pytest.raises(ValueError):
        CafcdConfig((base, AfcdConfig(mu=1.0, gamma=0.7)))
    with pytest.raises(ValueError):
        CafcdConfig(())
    cfg = CafcdConfig((base, AfcdConfig(mu=2.0, T_s=300)))
    assert cfg.combiner == (0.5, 0.5) and cfg.T_r == 360


def test_single_channel_equals_afcd_bitwise():
    x = gen_piecewise_gaussian(SynthConfig(seed=8)).samples[:, 0]
    base = AfcdConfig(mu=1.0, rng_seed=5)
    a = detect_afcd(x, base)
    c = detect_cafcd(x[:, None], CafcdConfig.uniform(base, 1))
    np.testing.assert_array_equal(a.lam, c.lam)
    np.testing.assert_array_equal(a.state, c.state)
    assert a.detect_times == c.detect_times
    assert [e.location_estimate for e in a.events] == [e.location_estimate for e in c.events]
    # streaming path
    d1, d2 = AfcdDetector(base), CafcdDetector(CafcdConfig.uniform(base, 1))
    for v in x[:4000]:
        r1, r2 = d1.update(v), d2.update([v])
        assert (r1 is None) == (r2 is None)
        if r1 is not None:
            assert r1.lam == r2[2] and r1.state == r2[1]


def test_streaming_matches_batch():
    sc = gen_piecewise_gaussian(SynthConfig(total_range=(6000, 7000), n_channels=3, seed=3))
    cfg = CafcdConfig.uniform(AfcdConfig(mu=2.0), 3, seed=4)
    det = CafcdDetector(cfg)
    psi = np.full(sc.n_samples, np.nan)
    for row in sc.samples:
        out = det.update(row)
        if out is not None:
            psi[out[0]] = out[2]
    res = detect_cafcd(sc.samples, cfg)
    np.testing.assert_allclose(psi, res.lam, atol=1e-9)
    assert [e.detect_time for e in det.events] == res.detect_times
    assert [e.channel_locations for e in det.events] == [e.channel_locations for e in res.events]
    assert [e.location_estimate for e in det.events] == [e.location_estimate for e in res.events]
    assert all(e.channel == -1 for e in res.events)


def test_channel_permutation_equivariance():
    sc = gen_piecewise_gaussian(SynthConfig(n_channels=4, seed=12))
    cfg = CafcdConfig.uniform(AfcdConfig(mu=3.0), 4, seed=1)
    perm = [2, 0, 3, 1]
    res = detect_cafcd(sc.samples, cfg)
    from volfilt.afcd import noise_stream
    rngs = [noise_stream(1, c) for c in perm]
    res_p = detect_cafcd(sc.samples[:, perm], cfg, rngs=rngs)
    assert res.detect_times == res_p.detect_times
    np.testing.assert_array_equal(res.lam, res_p.lam)
    for e, ep in zip(res.events, res_p.events):
        assert [e.channel_locations[c] for c in perm] == ep.channel_locations
        assert e.location_estimate == ep.location_estimate


def test_psi_in_unit_interval_and_refractory():
    sc = gen_piecewise_gaussian(SynthConfig(n_channels=2, seed=5))
    cfg = CafcdConfig.uniform(AfcdConfig(mu=30.0), 2)
    res = detect_cafcd(sc.samples, cfg)
    v = res.lam[~np.isnan(res.lam)]
    assert v.min() >= 0.0 and v.max() <= 1.0
    assert np.all(np.diff(res.detect_times) > cfg.T_r)


def test_stationary_network_quiet():
    cfg = CafcdConfig.uniform(AfcdConfig(mu=1.0), 4)
    quiet = sum(
        not detect_cafcd(gen_stationary(5000, 4, "low", seed=s).samples, cfg, vce=False).events
        for s in range(100)
    )
    assert quiet >= 95


def test_wrong_arity():
    cfg = CafcdConfig.uniform(AfcdConfig(mu=1.0), 2)
    with pytest.raises(ValueError):
        detect_cafcd(np.zeros((1000, 3)), cfg)
    with pytest.raises(ValueError):
        CafcdDetector(cfg).update([1.0])
    with pytest.raises(ValueError):
        CafcdDetector(cfg).update([1.0, float("inf")])
