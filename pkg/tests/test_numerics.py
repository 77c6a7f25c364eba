import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakradar.numerics import QuadratureSpec, erf_cplx, erf_diff_scaled, f_osc, g1, g2, integrate_1d


def maclaurin_erf(z, terms=60):
    # independent oracle: erf(z) = 2/sqrt(pi) sum (-1)^n z^(2n+1) / (n! (2n+1))
    total = 0j
    for n in range(terms):
        total += (-1) ** n * z ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2 / math.sqrt(math.pi) * total


def test_erf_known_values():
    assert erf_cplx(0) == 0
    assert abs(erf_cplx(1.0) - 0.8427007929497149) < 1e-15
    assert abs(erf_cplx(1j) - 1.6504257587975428j) < 1e-15


@pytest.mark.parametrize("z", [0.3 + 0.2j, -1.1 + 0.7j, 2.0 - 1.5j, 0.05j, 2.5])
def test_erf_matches_series(z):
    ref = maclaurin_erf(z)
    assert abs(erf_cplx(z) - ref) <= 1e-12 * max(1.0, abs(ref))


complex_pts = st.builds(complex, st.floats(-4, 4), st.floats(-4, 4))


@given(complex_pts)
def test_erf_symmetries(z):
    assert erf_cplx(-z) == pytest.approx(-erf_cplx(z), rel=1e-14, abs=1e-300)
    assert erf_cplx(z.conjugate()) == pytest.approx(np.conj(erf_cplx(z)), rel=1e-14, abs=1e-300)


@given(complex_pts, complex_pts, st.floats(-20, 20))
@settings(max_examples=60)
def test_scaled_difference_agrees_with_direct(z1, z2, scale):
    direct = math.exp(scale) * (erf_cplx(z1) - erf_cplx(z2))
    assert abs(erf_diff_scaled(z1, z2, scale) - direct) <= 1e-11 * max(1.0, abs(direct))


def test_scaled_difference_survives_huge_exponents():
    # erf(30+30j) is astronomically large; exp(-1800j*...) style scale brings it back
    z1, z2 = 30 + 30j, 29 + 30j
    scale = (z1 * z1).real  # the magnitude of erf grows like exp(-Re z^2)
    val = erf_diff_scaled(z1, z2, scale)
    assert np.isfinite(val)
    # compare against a pure log-domain oracle via the asymptotic form of erfc
    from scipy.special import wofz
    expected = np.exp(scale) * (-np.exp(-z1 * z1) * wofz(1j * z1) + np.exp(-z2 * z2) * wofz(1j * z2))
    assert abs(val - expected) <= 1e-10 * abs(expected)


def test_g1_values():
    assert g1(1, 0.4, 0.4) == 0
    assert abs(g1(1, 1, 0) - 0.7468241328124271) < 1e-14
    assert abs(g1(1, 8, -8) - math.sqrt(math.pi)) < 1e-12
    assert abs(g1(0, 2.0, 0.5) - 1.5) < 1e-15


def test_g2_values():
    assert g2(1, 0.7, 0.7) == 0
    assert abs(g2(1, 1, 0) - (1 - math.exp(-1)) / 2) < 1e-15
    quad = integrate_1d(lambda x: x * math.exp(-x * x), 0, 1)
    assert abs(g2(1, 1, 0) - quad) < 1e-12
    with pytest.raises(ZeroDivisionError):
        g2(0, 1, 0)


def test_f_osc_values():
    assert f_osc(0.9, 0.2, 0, 1.3) == pytest.approx(g1(1.3, 0.9, 0.2), rel=1e-14)
    assert f_osc(0.5, 0.5, 2.0, 1.0) == 0
    quad = integrate_1d(lambda x: np.exp(-x * x - 1j * math.pi * x), -1, 1)
    assert abs(f_osc(1, -1, math.pi, 1) - quad) < 1e-12


@given(st.floats(0.05, 5), st.floats(-3, 3), st.floats(-3, 3), st.floats(-6, 6), st.floats(-2, 2))
@settings(max_examples=100, deadline=None)
def test_closed_integrals_match_quadrature(a_re, s, t, z, a_im):
    a = complex(a_re, a_im * a_re)  # keep Re(a) > 0 so the integrand stays tame
    lo, hi = min(s, t), max(s, t)
    spec = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-14)
    pairs = [
        (g1(a, hi, lo), lambda x: np.exp(-a * x * x)),
        (g2(a, hi, lo), lambda x: x * np.exp(-a * x * x)),
        (f_osc(hi, lo, z, a), lambda x: np.exp(-a * x * x - 1j * z * x)),
    ]
    for closed, fn in pairs:
        ref = integrate_1d(fn, lo, hi, spec)
        assert abs(closed - ref) <= 1e-9 * max(1.0, abs(ref))


def test_integrate_1d_basics():
    assert integrate_1d(lambda x: 1.0, 0, 1) == pytest.approx(1.0, abs=1e-14)
    assert integrate_1d(lambda x: math.sin(x), 0, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert integrate_1d(lambda x: math.exp(-x * x), 0, 1) == pytest.approx(0.7468241328124271, abs=1e-12)
    assert integrate_1d(lambda x: 5.0, 2, 2) == 0
    with pytest.raises(ValueError):
        integrate_1d(lambda x: 1.0, 1, 0)


def test_integrate_1d_reports_non_convergence():
    with pytest.raises(RuntimeError):
        integrate_1d(lambda x: math.sin(1 / x) / x if x else 0.0, 1e-9, 1,
                     QuadratureSpec(rel_tol=1e-12, abs_tol=0, max_subdivisions=5))


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=-1)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=0)
