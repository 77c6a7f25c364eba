import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakradar.ddcore import (CorrelationPlan, DDGrid, SystemConfig, TimeSamples, dd_correlate, izak,
                             make_config, twisted_conv, zak, zak_extend)


def small_cfg():
    return make_config(B=16.0, T=8.0, tau_p=1.0, P=2, Q=2, f_c=100.0)


def test_default_lattice(cfg):
    assert (cfg.M, cfg.N) == (400, 200)
    assert cfg.nu_p == pytest.approx(1e4)
    assert cfg.dtau == pytest.approx(1 / 16e6)
    assert cfg.dnu == pytest.approx(12.5)


def test_unit_lattice():
    c = make_config(1, 1, 1, 1, 1, 1)
    assert (c.M, c.N, c.nu_p) == (1, 1, 1.0)


def test_non_integral_lattice_rejected():
    with pytest.raises(ValueError, match="N = T/tau_p"):
        make_config(tau_p=99e-6)
    with pytest.raises(ValueError, match="M = B\\*tau_p"):
        make_config(B=4.1e6, tau_p=100.5e-6, T=20.1e-3)


def test_config_invariants():
    with pytest.raises(ValueError):
        SystemConfig(B=1, T=1, tau_p=1, nu_p=2, M=1, N=1)
    with pytest.raises(ValueError):
        SystemConfig(B=-1, T=1, tau_p=1, nu_p=1, M=1, N=1)
    with pytest.raises(ValueError):
        SystemConfig(B=1, T=1, tau_p=1, nu_p=1, M=1, N=1, P=0)


def random_samples(rng, L, K, rate, t0=0.0):
    v = rng.standard_normal(L * K) + 1j * rng.standard_normal(L * K)
    return TimeSamples(rate=rate, t0=t0, values=v)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(-3, 3))
@settings(max_examples=25, deadline=None)
def test_zak_inverts(seed, periods, shift):
    c = small_cfg()
    rate = c.P * c.B
    L = int(rate * c.tau_p)
    x = random_samples(np.random.default_rng(seed), L, periods, rate, t0=shift * c.tau_p + 3 / rate)
    back = izak(zak(x, c), c)
    assert back.t0 == x.t0
    assert np.max(np.abs(back.values - x.values)) <= 1e-10


def test_zak_of_pulse_train_is_a_point():
    c = small_cfg()
    rate = c.P * c.B
    L, K = int(rate * c.tau_p), 8
    k0, l0 = 5, 3
    v = np.zeros(L * K, dtype=complex)
    n = np.arange(K)
    v[k0 + n * L] = np.exp(2j * np.pi * n * l0 / K)
    g = zak(TimeSamples(rate, 0.0, v), c)
    # direct-summation oracle at 8 cells
    rng = np.random.default_rng(1)
    for k, l in zip(rng.integers(0, L, 8), rng.integers(0, K, 8)):
        ref = np.sqrt(c.tau_p) * sum(v[k + m * L] * np.exp(-2j * np.pi * m * l / K) for m in range(K))
        assert abs(g.values[l, k] - ref) < 1e-12
    mag = np.abs(g.values)
    assert mag[l0, k0] == pytest.approx(K * np.sqrt(c.tau_p))
    mag[l0, k0] = 0
    assert mag.max() < 1e-12


def test_zak_of_zero_and_bad_length():
    c = small_cfg()
    rate = c.P * c.B
    g = zak(TimeSamples(rate, 0.0, np.zeros(64)), c)
    assert not np.any(g.values)
    with pytest.raises(ValueError):
        zak(TimeSamples(rate, 0.0, np.zeros(33)), c)


def test_zak_is_unitary():
    c = small_cfg()
    rate = c.P * c.B
    x = random_samples(np.random.default_rng(4), 32, 5, rate)
    g = zak(x, c)
    assert np.sum(np.abs(g.values) ** 2) * g.dtau * g.dnu == pytest.approx(x.energy(), rel=1e-12)


def test_zak_quasi_periodicity():
    c = small_cfg()
    rate = c.P * c.B
    x = random_samples(np.random.default_rng(2), 32, 4, rate)
    g = zak(x, c)
    k = np.array([3, 3 + 32, 3 - 64])
    l = np.array([1, 1, 1 + 4])
    vals = zak_extend(g, k, l)
    assert vals[0] == g.values[1, 3]
    assert vals[1] == pytest.approx(g.values[1, 3] * np.exp(2j * np.pi / 4))
    assert vals[2] == pytest.approx(g.values[1, 3] * np.exp(-2j * np.pi * 2 / 4))


def delta(tau, nu, dtau, dnu, shape=(1, 1)):
    v = np.zeros(shape, dtype=complex)
    v[0, 0] = 1 / (dtau * dnu)
    return DDGrid(tau, nu, dtau, dnu, v)


def test_twisted_conv_identity():
    rng = np.random.default_rng(0)
    a = DDGrid(0.1, -2.0, 0.5, 0.25, rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4)))
    out = twisted_conv(delta(0.0, 0.0, 0.5, 0.25), a)
    assert out.same_geometry(a)
    assert np.allclose(out.values, a.values, atol=1e-12)


def test_twisted_conv_of_zero_doppler_deltas():
    out = twisted_conv(delta(1.0, 0.0, 0.5, 0.25), delta(1.5, 0.0, 0.5, 0.25))
    assert out.tau0 == 2.5 and out.nu0 == 0.0
    assert out.values[0, 0] * out.dtau * out.dnu == pytest.approx(1.0)


def direct_twisted(a, b, tau, nu):
    total = 0j
    for l1, nu1 in enumerate(a.nus):
        for k1, tau1 in enumerate(a.taus):
            for l2, nu2 in enumerate(b.nus):
                for k2, tau2 in enumerate(b.taus):
                    if np.isclose(tau1 + tau2, tau) and np.isclose(nu1 + nu2, nu):
                        total += a.values[l1, k1] * b.values[l2, k2] * np.exp(2j * np.pi * nu1 * (tau - tau1))
    return total * a.dtau * a.dnu


def test_twisted_conv_matches_double_sum_and_does_not_commute():
    rng = np.random.default_rng(3)
    shape = (4, 4)
    a = DDGrid(0.0, 0.3, 0.2, 0.7, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    b = DDGrid(0.4, -0.7, 0.2, 0.7, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    ab, ba = twisted_conv(a, b), twisted_conv(b, a)
    for l in range(ab.n_nu):
        for k in range(ab.n_tau):
            assert abs(ab.values[l, k] - direct_twisted(a, b, ab.taus[k], ab.nus[l])) < 1e-10
    assert np.max(np.abs(ab.values - ba.values)) > 1e-3


def test_twisted_conv_needs_matching_steps():
    with pytest.raises(ValueError):
        twisted_conv(delta(0, 0, 0.5, 0.25), delta(0, 0, 0.4, 0.25))


def test_grid_serialisation_round_trip():
    rng = np.random.default_rng(5)
    g = DDGrid(1e-6, -37.5, 1 / 16e6, 12.5, rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5)))
    for back in (DDGrid.from_csv(g.to_csv()), DDGrid.from_json(g.to_json())):
        assert back.same_geometry(g)
        assert np.array_equal(back.values, g.values)
    assert g.to_csv().splitlines()[0] == "tau,nu,re,im"
    with pytest.raises(ValueError):
        DDGrid.from_csv("a,b,c,d\n1,2,3,4\n")
    with pytest.raises(ValueError):
        DDGrid(0, 0, 0, 1, np.zeros((1, 1)))


def brute_correlation(y, x, cfg, ks, ls):
    out = np.zeros((len(ls), len(ks)), dtype=complex)
    tx = x.times
    for i, l in enumerate(ls):
        nu = l * cfg.dnu
        for j, k in enumerate(ks):
            idx = np.round((tx + k / x.rate - y.t0) * y.rate).astype(int)
            ok = (idx >= 0) & (idx < y.values.size)
            yy = np.zeros(tx.size, dtype=complex)
            yy[ok] = y.values[idx[ok]]
            out[i, j] = np.sum(yy * np.conj(x.values) * np.exp(-2j * np.pi * nu * tx)) / x.rate
    return out


@pytest.mark.parametrize("k_range,l_range", [((0, 5), (-3, 3)), ((-7, 2), (10, 14)), ((29, 40), (-1, 1)),
                                             ((-20, 25), (-4, 2))])
def test_correlation_plan_matches_brute_force(k_range, l_range):
    c = small_cfg()
    rate = c.P * c.B
    rng = np.random.default_rng(11)
    x = random_samples(rng, 32, 6, rate, t0=-2 * c.tau_p)
    y = random_samples(rng, 32, 9, rate, t0=-3 * c.tau_p)
    grid = dd_correlate(y, x, c, k_range, l_range)
    ks = np.arange(k_range[0], k_range[1] + 1)
    ls = np.arange(l_range[0], l_range[1] + 1)
    ref = brute_correlation(y, x, c, ks, ls)
    assert np.max(np.abs(grid.values - ref)) <= 1e-10 * np.abs(ref).max()
    assert grid.tau0 == pytest.approx(ks[0] / rate)
    assert grid.nu0 == pytest.approx(ls[0] * c.dnu)


def test_correlation_plan_is_reusable():
    c = small_cfg()
    rate = c.P * c.B
    rng = np.random.default_rng(12)
    x = random_samples(rng, 32, 4, rate)
    plan = CorrelationPlan(x, c, (0, 6), (-2, 2))
    for _ in range(2):
        y = random_samples(rng, 32, 7, rate, t0=-c.tau_p)
        ref = brute_correlation(y, x, c, range(0, 7), range(-2, 3))
        assert np.allclose(plan(y).values, ref, atol=1e-10)


def test_batched_apply_matches_single():
    c = small_cfg()
    rate = c.P * c.B
    rng = np.random.default_rng(13)
    x = random_samples(rng, 32, 4, rate)
    for k_range in ((0, 3), (-10, 30)):  # direct and FFT paths
        plan = CorrelationPlan(x, c, k_range, (-2, 2))
        blocks = rng.standard_normal((3, plan.n_per, plan.block)) + 0j
        batched = plan.apply_values(blocks)
        for i in range(3):
            assert np.allclose(batched[i], plan.apply(blocks[i]).values, atol=1e-12)
