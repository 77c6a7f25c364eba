import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakradar import ambiguity
from zakradar.ambiguity import (amb_gauss_closed, amb_grid, amb_gs_closed, amb_oracle, amb_sinc_closed,
                                amb_sinc_direct, closed_form, heatmap_csv, mainlobe_width, oracle_samples,
                                validate_closed_vs_oracle, white_box_window)
from zakradar.ddcore import DDGrid


@pytest.fixture(scope="module")
def oracles(cfg, specs):
    return {name: oracle_samples(spec, cfg) for name, spec in specs.items()}


@pytest.mark.parametrize("name", ["sinc", "gs", "gauss"])
def test_unit_peak(cfg, specs, oracles, name):
    assert abs(closed_form(cfg, specs[name])(0.0, 0.0) - 1) < 1e-9
    assert abs(amb_oracle(oracles[name], 0.0, 0.0) - 1) < 1e-9


def test_sinc_closed_form_values(cfg):
    assert abs(amb_sinc_closed(cfg, 0.3 / cfg.B, cfg.B)) == 0
    assert abs(amb_sinc_closed(cfg, 0.0, -1.5 * cfg.B)) == 0
    assert abs(amb_sinc_closed(cfg, 0.5 / cfg.B, 0.0)) == pytest.approx(2 / math.pi, abs=1e-3)
    alias = amb_sinc_closed(cfg, cfg.tau_p, 0.0)
    assert abs(alias) == pytest.approx((cfg.N - 1) / cfg.N, abs=1e-9)


def test_sinc_double_sum_agrees(cfg):
    rng = np.random.default_rng(0)
    tau = rng.uniform(-cfg.tau_p, cfg.tau_p, 20)
    nu = rng.uniform(-cfg.nu_p, cfg.nu_p, 20)
    assert np.max(np.abs(amb_sinc_direct(cfg, tau, nu) - amb_sinc_closed(cfg, tau, nu))) < 1e-9


def test_gaussian_closed_form_values(cfg, specs, oracles):
    a = amb_gauss_closed(cfg, specs["gauss"], 1 / cfg.B, 0.0)
    assert abs(a) == pytest.approx(math.exp(-1.584 / 2), abs=1e-6)
    alias = amb_gauss_closed(cfg, specs["gauss"], cfg.tau_p, 0.0)
    assert abs(alias - amb_oracle(oracles["gauss"], cfg.tau_p, 0.0)) < 1e-6
    assert abs(alias) > 0.5


def test_gs_is_continuous_across_the_lattice(cfg, specs):
    eps = 1e-6 / cfg.B
    for nu in (0.0, 37.0, -612.5, 4999.0):
        for t in (0.0, cfg.tau_p):
            a0 = amb_gs_closed(cfg, specs["gs"], t, nu)
            assert abs(amb_gs_closed(cfg, specs["gs"], t + eps, nu) - a0) < 1e-5
            assert abs(amb_gs_closed(cfg, specs["gs"], t - eps, nu) - a0) < 1e-5


@pytest.mark.parametrize("name", ["sinc", "gs", "gauss"])
def test_closed_form_matches_oracle_near_the_main_lobe(cfg, specs, oracles, name):
    rng = np.random.default_rng(7)
    tau = rng.uniform(-3, 3, 24) / cfg.B
    nu = rng.uniform(-3, 3, 24) / cfg.T
    dev = np.abs(closed_form(cfg, specs[name])(tau, nu) - amb_oracle(oracles[name], tau, nu))
    assert dev.max() <= 1e-5


def test_validation_report(cfg, specs):
    rep = validate_closed_vs_oracle(cfg, specs["gauss"], n_points=64, tol=1e-6)
    assert rep.passed and rep.n_points == 64
    d = rep.to_dict()
    assert d["passed"] is True and d["filter"] == "gauss"


def test_oracle_magnitude_symmetry(cfg, oracles):
    rng = np.random.default_rng(3)
    tau = rng.uniform(-4, 4, 16) / cfg.B
    nu = rng.uniform(-4, 4, 16) / cfg.T
    for x in oracles.values():
        assert np.allclose(np.abs(amb_oracle(x, tau, nu)), np.abs(amb_oracle(x, -tau, -nu)), atol=1e-9, rtol=0)


@pytest.mark.parametrize("name", ["sinc", "gs", "gauss"])
def test_small_grid_around_origin(cfg, specs, name):
    g = amb_grid(closed_form(cfg, specs[name]), (-1 / cfg.B, 1 / cfg.B, -1 / cfg.T, 1 / cfg.T), 1 / cfg.B, 1 / cfg.T)
    mag = np.abs(g.values)
    assert mag.shape == (3, 3)
    assert mag[1, 1] == pytest.approx(1.0, abs=1e-9)
    assert mag[0, 0] == pytest.approx(mag[2, 2], abs=1e-9)
    assert mag[0, 2] == pytest.approx(mag[2, 0], abs=1e-9)


def test_gaussian_has_no_sidelobes(cfg, specs):
    g = amb_grid(closed_form(cfg, specs["gauss"]), white_box_window(cfg), 0.5 / cfg.B, 0.5 / cfg.T)
    mag = np.abs(g.values)
    tt, ff = np.meshgrid(g.taus * cfg.B, g.nus * cfg.T)
    outside = (np.abs(tt) > 4) | (np.abs(ff) > 4)
    assert mag[outside].max() < 1e-4 * mag.max()


@pytest.mark.parametrize("name", ["sinc", "gs", "gauss"])
def test_grid_matches_pointwise(cfg, specs, name):
    ev = closed_form(cfg, specs[name])
    taus = np.linspace(-2.3 * cfg.tau_p, 1.7 * cfg.tau_p, 57)
    nus = np.linspace(-1.4 * cfg.nu_p, 0.9 * cfg.nu_p, 23)
    tt, ff = np.meshgrid(taus, nus)
    assert np.max(np.abs(ev.grid(taus, nus) - ev(tt, ff))) < 1e-12


@given(st.integers(-2, 2), st.integers(-2, 2), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_closed_forms_obey_conjugate_symmetry(n, m, d_bins, f_bins):
    from zakradar.ddcore import make_config
    from zakradar.filters import FilterSpec
    c = make_config()
    # near a lattice point, where the magnitude is not negligible
    tau = n * c.tau_p + d_bins / c.B
    nu = m * c.nu_p + f_bins / c.T
    for spec in (FilterSpec.sinc(), FilterSpec.gaussian(), FilterSpec.gaussian_sinc()):
        ev = closed_form(c, spec)
        # A(-tau, -nu) = A(tau, nu)^* exp(j 2 pi nu tau)
        lhs = ev(-tau, -nu)
        rhs = np.conj(ev(tau, nu)) * np.exp(2j * np.pi * nu * tau)
        assert abs(lhs - rhs) < 1e-9
        assert abs(ev(tau, nu)) <= 1 + 1e-9


def test_mainlobe_width_of_a_known_shape():
    # |A| = exp(-x^2) in bins: -25 dB crossing at x = sqrt(25 ln10 / 20)
    B = 1.0
    x = np.linspace(-10, 10, 20001)
    cut = DDGrid(x[0], 0.0, x[1] - x[0], 1.0, np.exp(-x * x)[None, :])
    expected = 2 * math.sqrt(25 * math.log(10) / 20)
    assert mainlobe_width(cut, B) == pytest.approx(expected, abs=1e-3)
    assert mainlobe_width(cut, B, db_factor=10) == pytest.approx(2 * math.sqrt(25 * math.log(10) / 10), abs=1e-3)


def test_table_metrics_structure(cfg, specs):
    m = ambiguity.table_metrics(cfg, specs["gauss"])
    assert m.pslr_db is None and m.islr_db is None and m.pslr_cut_db is None
    assert m.mlw_bins_10log > m.mlw_bins > 0
    s = ambiguity.table_metrics(cfg, specs["sinc"])
    assert s.pslr_cut_db < 0 and s.islr_cut_db is not None
    assert set(s.to_dict()) == {"mlw_bins", "mlw_bins_10log", "pslr_db", "islr_db", "pslr_cut_db", "islr_cut_db"}


def test_heatmap_csv():
    g = DDGrid(0.0, -1.0, 0.5, 1.0, np.array([[2.0, 0.2], [0.0, 1.0j]]))
    rows = heatmap_csv(g).splitlines()
    assert rows[0] == "tau,nu,abs_db"
    vals = [float(r.split(",")[2]) for r in rows[1:]]
    assert vals[0] == 0.0
    assert vals[1] == pytest.approx(-20.0)
    assert vals[2] == ambiguity.HEATMAP_FLOOR_DB
    assert vals[3] == pytest.approx(20 * math.log10(0.5))
