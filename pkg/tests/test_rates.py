import numpy as np
import pytest
from scipy import linalg as la

from ftn_amac.alloc import waterfill_spatial
from ftn_amac.channel import MimoChannel, sample_channel
from ftn_amac.gram import build_gram_set
from ftn_amac.oracles import (classic_mac_rates, definitional_sum_rate, dense_kron_blocks,
                              entrywise_noise_cov, ftn_single_user_capacity)
from ftn_amac.pulse import PulseShape, autocorr
from ftn_amac.rates import (CovariancePair, RateError, kron_blocks, noise_cov, noise_cov_inverse,
                            pentagon, power_check, single_user_rate, sum_rate, sum_rate_synchronous)

PULSE = PulseShape(0.25)


def _psd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * a @ a.conj().T / n


def test_noise_cov_scalar_block():
    gs = build_gram_set(PULSE, 1.0, 1, 0.0, 0.5)
    g5 = autocorr(PULSE, 0.5)
    np.testing.assert_allclose(noise_cov(gs, 1), [[1, g5], [g5, 1]], atol=1e-15)
    inv = noise_cov_inverse(gs, 1).dense()
    np.testing.assert_allclose(inv, np.linalg.inv([[1, g5], [g5, 1]]), rtol=1e-12)


@pytest.mark.parametrize("sigma0_sq", [1.0, 0.3])
def test_noise_cov_matches_entrywise_assembly(sigma0_sq):
    gs = build_gram_set(PULSE, 0.8, 2, 0.1, 0.5)
    got = noise_cov(gs, 2, sigma0_sq)
    want = entrywise_noise_cov(PULSE, 0.8, 2, 2, 0.1, 0.5, sigma0_sq)
    assert np.abs(got - want).max() <= 1e-12
    assert np.all(np.diag(got) == sigma0_sq)
    assert np.array_equal(got, got.T)


def test_noise_inverse_matches_dense_inverse():
    gs = build_gram_set(PULSE, 0.8, 4, 0.0, 0.4 * 0.8)
    inv = noise_cov_inverse(gs, 3, 0.5)
    dense = np.linalg.inv(noise_cov(gs, 3, 0.5))
    assert np.linalg.norm(inv.dense() - dense) / np.linalg.norm(dense) <= 1e-8
    # lower-right block is the inverse Schur complement of the (1,1) block
    np.testing.assert_array_equal(inv.dense()[12:, 12:], np.kron(np.eye(3), inv.b22))
    np.testing.assert_allclose(inv.b22 * 0.5, np.linalg.inv(gs.schur), rtol=1e-9)


def test_synchronous_noise_cov_rejected():
    gs = build_gram_set(PULSE, 0.8, 3)
    with pytest.raises(ValueError):
        noise_cov(gs, 2)
    with pytest.raises(RateError):
        noise_cov_inverse(gs, 2)


@pytest.mark.parametrize("m", [1, 3])
def test_kron_blocks_match_dense(m):
    gs = build_gram_set(PULSE, 0.9, 4, 0.0, 0.45)
    ch = sample_channel(3, m, m)
    a = kron_blocks(ch, gs)
    assert np.linalg.norm(a - dense_kron_blocks(ch, gs)) / np.linalg.norm(a) <= 1e-8


def test_zero_covariance_gives_zero_rates():
    gs = build_gram_set(PULSE, 0.8, 3, 0.0, 0.4)
    ch = sample_channel(0, 2, 2)
    z = np.zeros((6, 6))
    assert single_user_rate(ch.h1, gs, z) == 0.0
    assert sum_rate(ch, gs, CovariancePair(z, z)) == 0.0
    sync = build_gram_set(PULSE, 1.0, 3)
    assert sum_rate_synchronous(ch, sync, CovariancePair(z, z)) == 0.0


def test_scalar_awgn_capacity():
    gs = build_gram_set(PULSE, 1.0, 1)
    h = np.array([[0.6 + 0.8j]])
    p, s2 = 10.0, 0.5
    assert single_user_rate(h, gs, np.array([[p]]), s2) == pytest.approx(np.log2(1 + p / s2))


def test_scalar_mac_sum_capacity():
    gs = build_gram_set(PULSE, 1.0, 1)
    ch = MimoChannel(np.array([[1.0 + 0j]]), np.array([[0.0 + 2j]]), seed=0)
    cov = CovariancePair(np.array([[2.0]]), np.array([[3.0]]))
    assert sum_rate(ch, gs, cov, 0.7) == pytest.approx(np.log2(1 + (2.0 + 3.0 * 4) / 0.7))


def test_single_user_kron_factorization():
    delta, n, s2 = 0.8, 4, 0.2
    gs = build_gram_set(PULSE, delta, n, 0.0, 0.4)
    h = sample_channel(7, 2, 2).h1
    wf = waterfill_spatial(h, 1.0, s2)
    sigma = np.kron(wf.z, delta * np.linalg.inv(gs.g_matrix))
    want = ftn_single_user_capacity(wf.gains, wf.levels, delta, 1.0, s2)
    assert single_user_rate(h, gs, sigma, s2) == pytest.approx(want, abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_sum_rate_matches_definition(seed):
    gs = build_gram_set(PULSE, 0.8, 3, 0.0, 0.4)
    ch = sample_channel(seed, 2, 2)
    rng = np.random.default_rng(seed)
    s1, s2 = _psd(rng, 6), _psd(rng, 6)
    got = sum_rate(ch, gs, CovariancePair(s1, s2), 0.5)
    assert got == pytest.approx(definitional_sum_rate(ch, gs, s1, s2, 0.5), abs=1e-8)


def test_sum_rate_with_silent_user_is_single_user_rate():
    gs = build_gram_set(PULSE, 0.9, 4, 0.0, 0.3)
    ch = sample_channel(2, 2, 3)
    s1 = _psd(np.random.default_rng(0), 12)
    cov = CovariancePair(s1, np.zeros((12, 12)))
    assert sum_rate(ch, gs, cov) == pytest.approx(single_user_rate(ch.h1, gs, s1), abs=1e-10)
    pent = pentagon(ch, gs, cov)
    assert pent.r2_max == 0.0
    assert pent.r_sum == pytest.approx(pent.r1_max, abs=1e-10)


def test_synchronous_nyquist_matches_classic_mac():
    gs = build_gram_set(PULSE, 1.0, 1)
    ch = sample_channel(5, 3, 3)
    z1 = waterfill_spatial(ch.h1, 1.0, 0.01).z
    z2 = waterfill_spatial(ch.h2, 1.0, 0.01).z
    r1, r2, rs = classic_mac_rates(ch.h1, ch.h2, z1, z2, 0.01)
    pent = pentagon(ch, gs, CovariancePair.from_factors(z1, np.eye(1), z2, np.eye(1)), 0.01)
    assert (pent.r1_max, pent.r2_max, pent.r_sum) == pytest.approx((r1, r2, rs), abs=1e-9)


def test_sum_rate_monotone_and_chain_rule():
    gs = build_gram_set(PULSE, 0.8, 3, 0.0, 0.4)
    ch = sample_channel(1, 2, 2)
    rng = np.random.default_rng(4)
    s1, s2 = _psd(rng, 6), _psd(rng, 6)
    full = sum_rate(ch, gs, CovariancePair(s1, s2))
    half = sum_rate(ch, gs, CovariancePair(0.5 * s1, s2))
    alone = single_user_rate(ch.h1, gs, s1)
    assert half <= full
    assert alone <= full + 1e-12


def test_interference_penalty():
    gs = build_gram_set(PULSE, 0.9, 2, 0.0, 0.45 * 0.9)
    ch = sample_channel(0, 1, 1)
    cov = CovariancePair.from_factors(np.eye(1), np.eye(2), np.eye(1), np.eye(2))
    pent = pentagon(ch, gs, cov)
    assert pent.r_sum < pent.r1_max + pent.r2_max - 1e-6
    assert max(pent.r1_max, pent.r2_max) <= pent.r_sum


def test_symmetric_users_have_equal_rates():
    gs = build_gram_set(PULSE, 0.8, 3, 0.0, 0.4)
    h = sample_channel(9, 2, 2).h1
    ch = MimoChannel(h, h.copy(), seed=9)
    z = waterfill_spatial(h, 1.0).z
    # a symmetric temporal covariance is invariant under the user swap
    xi = 0.8 * np.linalg.inv(gs.g_matrix)
    pent = pentagon(ch, gs, CovariancePair.from_factors(z, xi, z, xi))
    assert pent.r1_max == pytest.approx(pent.r2_max, abs=1e-9)


def test_power_check_examples():
    delta, n, p = 0.8, 4, 2.5
    gs = build_gram_set(PULSE, delta, n, 0.0, 0.4)
    z = np.diag([1.5, 1.0])
    xi = delta * np.linalg.inv(gs.g_matrix)
    cov = CovariancePair.from_factors(z, xi, z, xi)
    rep = power_check(cov, gs, p)
    assert rep.ratios == pytest.approx((p, p), rel=1e-12)
    assert rep.feasible
    zero = CovariancePair.from_factors(0 * z, xi, 0 * z, xi)
    assert power_check(zero, gs, p).ratios == (0.0, 0.0)
    over = CovariancePair.from_factors(1.01 * z, xi, z, xi)
    rep = power_check(over, gs, p)
    assert not rep.feasible and not rep.user_ok(1) and rep.user_ok(2)
    assert rep.ratios[0] == pytest.approx(1.01 * p, rel=1e-12)


def test_structured_square_root():
    rng = np.random.default_rng(1)
    z, xi = _psd(rng, 2), _psd(rng, 3).real
    cov = CovariancePair.from_factors(z, xi, z, xi)
    r = cov.sqrt(1)
    np.testing.assert_allclose(r @ r, cov.sigma_a1, atol=1e-12)
    np.testing.assert_array_equal(cov.sigma_a1, np.kron(z, xi))


def test_non_psd_covariance_rejected():
    gs = build_gram_set(PULSE, 1.0, 1)
    with pytest.raises(RateError):
        single_user_rate(np.eye(1), gs, -np.eye(1))


def test_corner_rule():
    gs = build_gram_set(PULSE, 0.8, 2, 0.0, 0.4)
    ch = sample_channel(0, 2, 2)
    xi = 0.8 * la.inv(gs.g_matrix)
    pent = pentagon(ch, gs, CovariancePair.from_factors(np.eye(2), xi, np.eye(2), xi))
    r1, r2 = pent.corner(0.0)
    assert r2 == pent.r2_max and r1 == pytest.approx(pent.r_sum - pent.r2_max)
    r1, r2 = pent.corner(1.0)
    assert r1 == pent.r1_max and r2 == pytest.approx(pent.r_sum - pent.r1_max)
    assert pent.corner(0.5) == pent.corner(0.25)
