"""Special functions and quadrature used by the closed-form ambiguity kernels.

The Gaussian-sinc closed form needs the error function at complex arguments
multiplied by exponentials that individually overflow (factors like e^{+800}
against erf values of size e^{-800}).  Everything here therefore has a
``scale`` argument: the routine returns ``exp(scale) * value`` and combines the
exponents before calling ``exp``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

# Below this exponent magnitude the direct product is safe and more accurate
# for tiny arguments than the complementary form.
_SAFE_EXP = 60.0


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-15
    max_subdivisions: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be non-negative")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        bad = np.asarray(value)[~np.isfinite(value)]
        raise OverflowError(f"{what} is not representable (first offending value {bad.flat[0]})")
    return value


def erf_cplx(z):
    """Error function for complex input (Faddeeva-based, via scipy)."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = special.erf(z)
    _check_finite(out, "erf of the given argument")
    return out[()] if out.ndim == 0 else out


def _erfc_parts(z):
    """Return (sign, log_prefactor, w) with erf(z) = sign - sign*exp(log_prefactor)*w.

    The Faddeeva factor is evaluated in the upper half plane so |w| <= 1.
    """
    sign = np.where(z.real >= 0, 1.0, -1.0)
    w = special.wofz(sign * 1j * z)
    return sign, -z * z, w


def erf_diff_scaled(z1, z2, scale=0.0):
    """exp(scale) * (erf(z1) - erf(z2)) without intermediate overflow."""
    z1, z2, scale = np.broadcast_arrays(
        np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex), np.asarray(scale, dtype=complex)
    )
    out = np.empty(z1.shape, dtype=complex)

    big = (
        (np.abs((z1 * z1).real) > _SAFE_EXP)
        | (np.abs((z2 * z2).real) > _SAFE_EXP)
        | (np.abs(scale.real) > _SAFE_EXP)
    )
    small = ~big
    if np.any(small):
        out[small] = np.exp(scale[small]) * (special.erf(z1[small]) - special.erf(z2[small]))
    if np.any(big):
        a, b, c = z1[big], z2[big], scale[big]
        s1, e1, w1 = _erfc_parts(a)
        s2, e2, w2 = _erfc_parts(b)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            const = np.where(s1 != s2, np.exp(c) * (s1 - s2), 0.0)
            val = const - s1 * np.exp(c + e1) * w1 + s2 * np.exp(c + e2) * w2
        out[big] = val
    _check_finite(out, "scaled erf difference")
    return out[()] if out.ndim == 0 else out


def g1(a, t, s, scale=0.0):
    """exp(scale) * integral of exp(-a x^2) over the segment from s to t."""
    a = np.asarray(a, dtype=complex)
    t = np.asarray(t, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if np.any(a == 0):
        a, t, s, scale = np.broadcast_arrays(a, t, s, np.asarray(scale, dtype=complex))
        out = np.empty(a.shape, dtype=complex)
        zero = a == 0
        out[zero] = np.exp(scale[zero]) * (t[zero] - s[zero])
        if np.any(~zero):
            out[~zero] = g1(a[~zero], t[~zero], s[~zero], scale[~zero])
        return out[()] if out.ndim == 0 else out
    root = np.sqrt(a)
    return np.sqrt(np.pi) / (2 * root) * erf_diff_scaled(root * t, root * s, scale)


def g2(a, t, s, scale=0.0):
    """exp(scale) * integral of x exp(-a x^2) over the segment from s to t."""
    a = np.asarray(a, dtype=complex)
    if np.any(a == 0):
        raise ZeroDivisionError("g2 requires a nonzero Gaussian rate")
    t = np.asarray(t, dtype=complex)
    s = np.asarray(s, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (np.exp(scale - a * s * s) - np.exp(scale - a * t * t)) / (2 * a)
    return _check_finite(out, "g2")


def f_osc(t, s, z, a, scale=0.0):
    """exp(scale) * integral of exp(-a x^2 - j z x) over the segment from s to t."""
    a = np.asarray(a, dtype=complex)
    if np.any(a == 0):
        raise ZeroDivisionError("f_osc requires a nonzero Gaussian rate")
    z = np.asarray(z, dtype=complex)
    root = np.sqrt(a)
    shift = 1j * z / (2 * root)
    total = scale - z * z / (4 * a)
    return np.sqrt(np.pi) / (2 * root) * erf_diff_scaled(
        root * np.asarray(t, dtype=complex) + shift,
        root * np.asarray(s, dtype=complex) + shift,
        total,
    )


def integrate_1d(fn, lo, hi, spec: QuadratureSpec | None = None, points=None):
    """Adaptive Gauss-Kronrod integral of a real- or complex-valued function.

    Hitting the subdivision limit or a divergent integrand raises; a roundoff
    flag alone is accepted because it fires on integrals that are exactly zero.
    """
    spec = spec or QuadratureSpec()
    if hi < lo:
        raise ValueError("integration bounds must satisfy lo <= hi")
    if hi == lo:
        return 0j
    parts = []
    for take in (np.real, np.imag):
        val, _, info, *rest = integrate.quad(
            lambda x: take(complex(fn(x))), lo, hi, epsabs=spec.abs_tol,
            epsrel=spec.rel_tol, limit=spec.max_subdivisions, points=points,
            full_output=1,
        )
        if rest and info["last"] >= spec.max_subdivisions or (rest and "diverge" in rest[0]):
            raise RuntimeError(f"quadrature did not converge on [{lo}, {hi}]: {rest[0]}")
        parts.append(val)
    return complex(parts[0], parts[1])
