"""Delay-Doppler pulse-shaping filters and the time-domain probing waveform.

Each filter factorises as w_tx(tau, nu) = w1(tau) * w2(nu).  The transmitted
waveform is a train of delay-domain kernels w1 spaced by tau_p, weighted by the
time-domain window W2 (the Fourier transform of w2) sampled at the pulse
positions.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .ddcore import SystemConfig, TimeSamples, _integral


class FilterKind(str, enum.Enum):
    SINC = "sinc"
    GAUSSIAN = "gauss"
    GAUSSIAN_SINC = "gs"


_ALIASES = {
    "sinc": FilterKind.SINC,
    "gauss": FilterKind.GAUSSIAN,
    "gaussian": FilterKind.GAUSSIAN,
    "gs": FilterKind.GAUSSIAN_SINC,
    "gaussiansinc": FilterKind.GAUSSIAN_SINC,
    "gaussian_sinc": FilterKind.GAUSSIAN_SINC,
}


@lru_cache(maxsize=None)
def unit_energy_omega(alpha):
    """Gain that gives sqrt(B) sinc(B t) exp(-alpha B^2 t^2) unit energy."""
    val, _ = integrate.quad(
        lambda u: np.sinc(u) ** 2 * np.exp(-2 * alpha * u * u), 0, np.inf, epsabs=0, epsrel=1e-13, limit=500
    )
    return 1.0 / math.sqrt(2 * val)


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind
    alpha_tau: float = 0.0
    alpha_nu: float = 0.0
    omega_tau: float = 1.0
    omega_nu: float = 1.0

    def __post_init__(self):
        if self.kind is not FilterKind.SINC:
            if self.alpha_tau <= 0 or self.alpha_nu <= 0:
                raise ValueError("Gaussian roll-off parameters must be positive")
        if self.omega_tau <= 0 or self.omega_nu <= 0:
            raise ValueError("filter gains must be positive")

    @classmethod
    def sinc(cls):
        return cls(FilterKind.SINC)

    @classmethod
    def gaussian(cls, alpha=1.584):
        return cls(FilterKind.GAUSSIAN, alpha, alpha, 1.0, 1.0)

    @classmethod
    def gaussian_sinc(cls, alpha=0.044, omega=None):
        # default gain is the exact unit-energy value (1.02775 at alpha = 0.044)
        omega = unit_energy_omega(alpha) if omega is None else omega
        return cls(FilterKind.GAUSSIAN_SINC, alpha, alpha, omega, omega)

    @classmethod
    def from_name(cls, name, **overrides):
        try:
            kind = _ALIASES[name.lower().replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown filter {name!r}; choose sinc, gauss or gs") from None
        base = {FilterKind.SINC: cls.sinc, FilterKind.GAUSSIAN: cls.gaussian,
                FilterKind.GAUSSIAN_SINC: cls.gaussian_sinc}[kind]()
        return replace(base, **{k: v for k, v in overrides.items() if v is not None})


def _axis_kernel(kind, alpha, omega, width, x):
    """One factor of w_tx along an axis whose natural width is ``width`` (B or T)."""
    u = width * np.asarray(x, dtype=float)
    if kind is FilterKind.SINC:
        return np.sqrt(width) * np.sinc(u)
    if kind is FilterKind.GAUSSIAN:
        return (2 * alpha * width**2 / np.pi) ** 0.25 * np.exp(-alpha * u * u)
    return omega * np.sqrt(width) * np.sinc(u) * np.exp(-alpha * u * u)


def eval_w1(spec: FilterSpec, cfg: SystemConfig, tau):
    return _axis_kernel(spec.kind, spec.alpha_tau, spec.omega_tau, cfg.B, tau)


def eval_w2(spec: FilterSpec, cfg: SystemConfig, nu):
    return _axis_kernel(spec.kind, spec.alpha_nu, spec.omega_nu, cfg.T, nu)


def eval_wtx(spec: FilterSpec, cfg: SystemConfig, tau, nu):
    """Separable transmit filter w1(tau) * w2(nu)."""
    return eval_w1(spec, cfg, tau) * eval_w2(spec, cfg, nu)


def eval_w2_time(spec: FilterSpec, cfg: SystemConfig, t):
    """Time-domain window W2(t), the inverse Fourier transform of w2."""
    t = np.asarray(t, dtype=float)
    T = cfg.T
    if spec.kind is FilterKind.SINC:
        # half value on the edges, matching the Fourier inversion of sinc
        return np.where(np.abs(t) < T / 2, 1.0, np.where(np.abs(t) == T / 2, 0.5, 0.0)) / np.sqrt(T) + 0j
    a = spec.alpha_nu
    if spec.kind is FilterKind.GAUSSIAN:
        amp = (2 * a * T**2 / np.pi) ** 0.25 * np.sqrt(np.pi / (a * T**2))
        return amp * np.exp(-(np.pi * t / T) ** 2 / a) + 0j
    beta = np.pi / (T * np.sqrt(a))
    return spec.omega_nu / (2 * np.sqrt(T)) * (special.erf(beta * (t + T / 2)) - special.erf(beta * (t - T / 2))) + 0j


def kernel_cutoff(spec: FilterSpec, cfg: SystemConfig):
    """Half-width in seconds beyond which w1 is negligible, or inf for sinc."""
    if spec.kind is FilterKind.SINC:
        return math.inf
    # solve alpha u^2 + ln(pi u) = 36 crudely: amplitude below ~1e-16 of peak
    u = 1.0
    while spec.alpha_tau * u * u + (math.log(math.pi * u) if spec.kind is FilterKind.GAUSSIAN_SINC else 0) < 37:
        u += 0.25
    return u / cfg.B


def pulse_indices(spec: FilterSpec, cfg: SystemConfig):
    """Indices p of the pulses p*tau_p that carry non-negligible weight."""
    N = cfg.N
    if spec.kind is FilterKind.SINC:
        lo = -(N // 2)
        return np.arange(lo, lo + N)
    # extend past [-T/2, T/2] until W2 drops below 1e-13 of its peak
    peak = abs(eval_w2_time(spec, cfg, 0.0))
    p = N // 2
    while abs(eval_w2_time(spec, cfg, p * cfg.tau_p)) > 1e-13 * peak:
        p += 1
    return np.arange(-p, p + 1)


@dataclass
class Waveform:
    """Analytic pulse train x(t) = sum_p c_p w1(t - p tau_p)."""

    spec: FilterSpec
    cfg: SystemConfig
    pulses: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def build(cls, spec: FilterSpec, cfg: SystemConfig):
        pulses = pulse_indices(spec, cfg)
        if spec.kind is FilterKind.SINC:
            # rect window sampled strictly inside: exactly N equal pulses
            coeffs = np.full(pulses.size, np.sqrt(cfg.tau_p / cfg.T), dtype=complex)
        else:
            coeffs = np.sqrt(cfg.tau_p) * eval_w2_time(spec, cfg, pulses * cfg.tau_p)
        return cls(spec, cfg, pulses, coeffs)

    @property
    def support(self):
        """(start, stop) outside of which x is negligible; infinite for sinc."""
        cut = kernel_cutoff(self.spec, self.cfg)
        tp = self.cfg.tau_p
        return self.pulses[0] * tp - cut, self.pulses[-1] * tp + cut

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.spec.kind is FilterKind.SINC:
            return self._sinc_train(t)
        cfg = self.cfg
        cut = kernel_cutoff(self.spec, cfg)
        reach = int(math.ceil(cut / cfg.tau_p))
        nearest = np.rint(t / cfg.tau_p).astype(np.int64)
        out = np.zeros(t.shape, dtype=complex)
        first = self.pulses[0]
        for j in range(-reach, reach + 1):
            p = nearest + j
            idx = p - first
            ok = (idx >= 0) & (idx < self.pulses.size)
            off = t - p * cfg.tau_p
            ok &= np.abs(off) <= cut
            if np.any(ok):
                out[ok] += self.coeffs[idx[ok]] * eval_w1(self.spec, cfg, off[ok])
        return out

    def _sinc_train(self, t):
        """Sum of equal-weight sinc kernels in O(1) per sample.

        For even M every kernel shares the factor sin(pi B t), leaving a sum of
        reciprocals that telescopes into digamma differences.  The nearest
        kernel is evaluated directly to keep the pole cancellation exact.
        """
        cfg = self.cfg
        c = self.coeffs[0].real
        if cfg.M % 2:
            out = np.zeros(t.shape, dtype=complex)
            for p in self.pulses:
                out += c * np.sqrt(cfg.B) * np.sinc(cfg.B * (t - p * cfg.tau_p))
            return out
        a, b = int(self.pulses[0]), int(self.pulses[-1])
        u = t / cfg.tau_p
        p0 = np.rint(u)
        hi = np.minimum(b, p0 - 1)
        lo = np.maximum(a, p0 + 1)
        below = np.where(hi >= a, special.digamma(u - a + 1) - special.digamma(np.maximum(u - hi, 0.5)), 0.0)
        above = np.where(lo <= b, special.digamma(np.maximum(lo - u, 0.5)) - special.digamma(b - u + 1), 0.0)
        rest = np.sin(np.pi * np.mod(cfg.B * t, 2.0)) / (np.pi * cfg.M) * (below + above)
        inside = (p0 >= a) & (p0 <= b)
        near = np.where(inside, np.sinc(cfg.B * t - cfg.M * p0), 0.0)
        return (c * np.sqrt(cfg.B) * (near + rest)).astype(complex)

    def sample(self, rate, start, count):
        t = start + np.arange(count) / rate
        return TimeSamples(rate=rate, t0=start, values=self(t))


@dataclass
class AnalyticSource:
    """Continuous-time evaluator attached to sampled waveforms.

    ``outside(start, stop, tau, nu)`` returns the part of the ambiguity
    integral contributed by times outside [start, stop).  Only the sinc train
    has support there; for even M its tail is C sin(pi B t) S(t / tau_p) with S
    a digamma difference, and the fast sin(pi B (2t - tau)) component
    integrates to a negligible boundary term.
    """

    waveform: Waveform
    gain: float = 1.0

    def __call__(self, t):
        return self.gain * self.waveform(t)

    def outside(self, start, stop, tau, nu, order=5):
        wf, cfg = self.waveform, self.waveform.cfg
        tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
        if wf.spec.kind is not FilterKind.SINC or cfg.M % 2:
            return np.zeros(tau.shape, dtype=complex)
        a, b = float(wf.pulses[0]), float(wf.pulses[-1])
        u_lo, u_hi = start / cfg.tau_p, stop / cfg.tau_p
        scale = self.gain**2 * abs(wf.coeffs[0]) ** 2 * cfg.B / (np.pi * cfg.M) ** 2 * cfg.tau_p / 2
        out = np.empty(tau.shape, dtype=complex)
        cache = {}
        for i, (t, f) in enumerate(zip(tau.ravel(), nu.ravel())):
            if f not in cache:
                cache[f] = [_tail_moment(j, a, b, u_lo, u_hi, 2 * np.pi * f * cfg.tau_p) for j in range(order)]
            delta = t / cfg.tau_p
            series = sum((-delta) ** j / math.factorial(j) * cache[f][j] for j in range(order))
            out.flat[i] = scale * np.cos(np.pi * cfg.B * t) * np.exp(2j * np.pi * f * t) * series
        return out


def _recip_sum_derivative(j, u, a, b):
    """j-th derivative of sum_{p=a}^{b} 1/(u - p) for u outside [a, b]."""
    if u > b:
        return special.polygamma(j, u - a + 1) - special.polygamma(j, u - b)
    return (-1) ** (j + 1) * (special.polygamma(j, b - u + 1) - special.polygamma(j, a - u))


def _fourier_to_inf(h, lo, omega):
    """integral of h(v) exp(-j omega v) over [lo, inf).

    The cycle-wise extrapolation flags slow decay of the smooth 1/v^2 integrand
    as bad behaviour; the values are checked against the closed forms to 1e-12.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _fourier_to_inf_raw(h, lo, omega)


def _fourier_to_inf_raw(h, lo, omega):
    if omega == 0:
        return integrate.quad(h, lo, np.inf, epsabs=1e-12, epsrel=1e-10, limit=500)[0] + 0j
    w = abs(omega)
    c = integrate.quad(h, lo, np.inf, weight="cos", wvar=w, epsabs=1e-12, limlst=200)[0]
    s = integrate.quad(h, lo, np.inf, weight="sin", wvar=w, epsabs=1e-12, limlst=200)[0]
    return c - 1j * np.sign(omega) * s


def _tail_moment(j, a, b, u_lo, u_hi, omega):
    """Outside-window integral of S(u) S^(j)(u) exp(-j omega u) in period units."""
    right = _fourier_to_inf(
        lambda u: _recip_sum_derivative(0, u, a, b) * _recip_sum_derivative(j, u, a, b), u_hi, omega
    )
    left = _fourier_to_inf(
        lambda v: _recip_sum_derivative(0, -v, a, b) * _recip_sum_derivative(j, -v, a, b), -u_lo, -omega
    )
    return right + left


def synthesize_waveform(spec: FilterSpec, cfg: SystemConfig, rate=None, margin_periods=None, normalize=True):
    """Sample the probing waveform on whole delay periods covering its support.

    The sample grid contains t = 0 and spans an integer number of delay
    periods.  ``margin_periods`` extends the span beyond the pulse train, which
    matters only for the slowly decaying sinc kernel (default 64 periods).
    The returned samples carry an :class:`AnalyticSource` with the same gain.
    """
    rate = 4 * cfg.B if rate is None else rate
    if rate < 2 * cfg.B:
        raise ValueError("sample rate must be at least 2B to hold the waveform and its products")
    L = _integral(rate * cfg.tau_p, "samples per delay period")
    wf = Waveform.build(spec, cfg)
    if spec.kind is FilterKind.SINC:
        margin = 64 if margin_periods is None else margin_periods
        first, last = wf.pulses[0] - margin, wf.pulses[-1] + margin + 1
    else:
        lo, hi = wf.support
        first = int(math.floor(lo / cfg.tau_p)) - (margin_periods or 0)
        last = int(math.ceil(hi / cfg.tau_p)) + (margin_periods or 0)
    x = wf.sample(rate, first * cfg.tau_p, (last - first) * L)
    gain = 1.0
    if normalize:
        gain = 1.0 / np.sqrt(x.energy())
        x.values *= gain
    x.source = AnalyticSource(wf, gain)
    return x
