import math

import numpy as np
import pytest

from ftn_amac.alloc import waterfill_spatial
from ftn_amac.channel import sample_channel
from ftn_amac.oracles import classic_mac_rates, ftn_single_user_capacity
from ftn_amac.region import (RegionPoint, RegionTrace, ScenarioConfig, average_envelope,
                             default_alpha_grid, fig1_scenarios, fig2_scenarios, fig3_scenarios,
                             sumrate_sweep, trace_region)

SMALL = ScenarioConfig(n=6, seeds=tuple(range(3)), alpha_grid=default_alpha_grid(11))


def test_flag_invariants():
    c = ScenarioConfig(ftn=False, asynchronous=False)
    assert c.delta == 1.0 and c.tau_frac == 0.0 and c.tau == 0.0
    assert ScenarioConfig().tau == pytest.approx(0.4)
    assert len(ScenarioConfig().alpha_grid) == 41 and ScenarioConfig().n == 32


@pytest.mark.parametrize("bad", [
    dict(delta=0.7),
    dict(alpha_grid=(0.0, 1.0)),
    dict(alpha_grid=(0.5, 0.0, 1.0)),
    dict(tau_frac=1.0),
    dict(n=0),
    dict(sigma0_sq=0.0),
])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        ScenarioConfig(**bad)


def test_stability_message_cites_bound():
    with pytest.raises(ValueError, match=r"1/\(1\+beta\)=0\.8"):
        ScenarioConfig(delta=0.7, beta=0.25)


def test_noise_and_power_convention():
    s2, p1, p2 = ScenarioConfig(snr_db_1=20, snr_db_2=10).noise_and_powers()
    assert s2 == pytest.approx(0.01) and p1 == pytest.approx(1.0) and p2 == pytest.approx(0.1)
    s2, p1, _ = ScenarioConfig(sigma0_sq=2.0, snr_db_1=0).noise_and_powers()
    assert (s2, p1) == (2.0, 2.0)


@pytest.mark.parametrize("seed", range(3))
def test_points_inside_pentagon(seed):
    tr = trace_region(SMALL, sample_channel(seed, 3, 3))
    assert [p.alpha for p in tr.points] == list(SMALL.alpha_grid)
    for p in tr.points:
        assert 0 <= p.r1 <= p.r1_max and 0 <= p.r2 <= p.r2_max
        assert p.r1 + p.r2 <= p.r_sum + 1e-9
    assert tr.metadata["g_min_eig"] > 0


def test_alpha_endpoints_are_single_user_optimal():
    cfg = SMALL
    s2, p1, p2 = cfg.noise_and_powers()
    ch = sample_channel(4, 3, 3)
    tr = trace_region(cfg, ch)
    for alpha, h, p, attr in ((0.0, ch.h2, p2, "r2"), (1.0, ch.h1, p1, "r1")):
        wf = waterfill_spatial(h, p, s2)
        want = ftn_single_user_capacity(wf.gains, wf.levels, cfg.delta, cfg.t_sym, s2)
        assert getattr(tr.at(alpha), attr) == pytest.approx(want, abs=1e-8)
    assert tr.at(0.0).r1 >= 0


def test_nyquist_synchronous_matches_classic_mac():
    cfg = SMALL.replace(ftn=False, asynchronous=False)
    s2, p1, p2 = cfg.noise_and_powers()
    ch = sample_channel(1, 3, 3)
    z1 = waterfill_spatial(ch.h1, p1, s2).z
    z2 = waterfill_spatial(ch.h2, p2, s2).z
    r1, r2, rs = classic_mac_rates(ch.h1, ch.h2, z1, z2, s2)
    for p in trace_region(cfg, ch).points:
        assert (p.r1_max, p.r2_max, p.r_sum) == pytest.approx((r1, r2, rs), abs=1e-9)


def test_siso_inside_mimo():
    for seed in range(3):
        mimo = trace_region(SMALL, seed=seed)
        siso = trace_region(SMALL.replace(m=1, l=1), seed=seed)
        for a, b in zip(mimo.points, siso.points):
            assert b.r_sum < a.r_sum and b.r1_max < a.r1_max and b.r2_max < a.r2_max


def test_silent_user_gives_flat_single_user_rate():
    vals = []
    for frac in (0.25, 0.5, 0.75):
        cfg = SMALL.replace(snr_db_2=-math.inf, tau_frac=frac)
        tr = trace_region(cfg, seed=0)
        for p in tr.points:
            assert p.r2_max == 0.0 and p.r_sum == pytest.approx(p.r1_max, abs=1e-10)
        vals.append(tr.at(0.5).r_sum)
    assert np.ptp(vals) <= 1e-9


def test_average_envelope_identity_and_midpoint():
    tr = trace_region(SMALL, seed=0)
    env = average_envelope([tr])
    assert [p.astuple() for p in env] == [p.astuple() for p in tr.points]

    def fake(seed, v):
        pts = [RegionPoint(a, v, 2 * v, v, 2 * v, 3 * v) for a in (0.0, 0.5, 1.0)]
        return RegionTrace(points=pts, scenario=SMALL, seed=seed)

    env = average_envelope([fake(1, 3.0), fake(0, 1.0)])
    assert [p.r1 for p in env] == [2.0, 2.0, 2.0]
    assert [p.r_sum for p in env] == [6.0, 6.0, 6.0]


def test_average_envelope_rejects_mismatch():
    a = trace_region(SMALL, seed=0)
    b = trace_region(SMALL.replace(alpha_grid=(0.0, 0.5, 1.0)), seed=1)
    with pytest.raises(ValueError):
        average_envelope([a, b])
    with pytest.raises(ValueError):
        average_envelope([])


def test_averaged_tradeoff_is_monotone():
    traces = [trace_region(SMALL, seed=s) for s in SMALL.seeds]
    env = average_envelope(traces)
    r1 = [p.r1 for p in env]
    r2 = [p.r2 for p in env]
    assert all(b >= a - 1e-9 for a, b in zip(r1, r1[1:]))
    assert all(b <= a + 1e-9 for a, b in zip(r2, r2[1:]))


def test_presets():
    names = [c.name for c in fig1_scenarios(SMALL)]
    assert names == ["amac_ftn", "amac", "mac_ftn", "mac",
                     "siso_amac_ftn", "siso_amac", "siso_mac_ftn", "siso_mac"]
    assert [c.name for c in fig2_scenarios(SMALL)] == names[:4]
    f3 = {c.name: c for c in fig3_scenarios(SMALL)}
    assert f3["upper_bound_sinc"].delta == 1.0 and f3["upper_bound_sinc"].beta == 0.0
    assert not f3["no_power_opt"].temporal_precoding and not f3["no_power_opt"].spatial_waterfill


def test_sumrate_sweep_shape_and_low_snr_collapse():
    cfg = SMALL.replace(seeds=(0, 1))
    rows = sumrate_sweep(cfg, [-20.0, 10.0])
    assert len(rows) == 8
    low = [v for name, snr, v in rows if snr == -20.0]
    assert max(low) / min(low) - 1 <= 0.05
    with pytest.raises(ValueError):
        sumrate_sweep(cfg, [])


def test_error_carries_context(monkeypatch):
    import ftn_amac.region as region_mod

    def boom(*args, **kwargs):
        raise ArithmeticError("synthetic")

    monkeypatch.setattr(region_mod, "pentagon", boom)
    with pytest.raises(ArithmeticError, match=r"alpha=0\.0, seed=2"):
        trace_region(SMALL, seed=2)
