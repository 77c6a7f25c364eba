"""Self-ambiguity of filtered Zak-OTFS pulsones.

Closed forms decompose along the period lattice: with t0 = tau - n tau_p and
f0 = nu - m nu_p,

    A(tau, nu) = sum_{n, m} D(t0, nu) * W(n, f0)

where D is the delay-axis kernel correlation (the ambiguity of a single w1
pulse) and W is the Doppler-axis correlation of w2 carrying the lattice phase.
The sinc filter admits a finite sum instead; the Gaussian and Gaussian-sinc
filters are truncated to the few lattice cells nearest (tau, nu).
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from . import numerics
from .ddcore import DDGrid, SystemConfig, TimeSamples, _fmt
from .filters import FilterKind, FilterSpec, Waveform, synthesize_waveform

N_TRUNC = 3
_ENVELOPE_EXP = 40.0


@dataclass
class ClosedFormContext:
    """Lattice offsets of one (tau, nu) query; kept for diagnostics."""

    t0: np.ndarray
    f0: np.ndarray
    n_trunc: int = N_TRUNC


def lattice_offsets(cfg: SystemConfig, tau, nu, n_trunc=N_TRUNC):
    """t0 and f0 for the (2 n_trunc + 1)^2 lattice cells around (tau, nu).

    Returns arrays shaped (..., 2r+1) for delay and Doppler offsets plus the
    matching integer lattice indices.
    """
    tau = np.asarray(tau, dtype=float)[..., None]
    nu = np.asarray(nu, dtype=float)[..., None]
    span = np.arange(-n_trunc, n_trunc + 1)
    n = np.rint(tau / cfg.tau_p) + span
    m = np.rint(nu / cfg.nu_p) + span
    return tau - n * cfg.tau_p, nu - m * cfg.nu_p, n, m


# ---------------------------------------------------------------- sinc


def _dirichlet(theta, count):
    """sum_{k=0}^{count-1} exp(j theta k), stable near theta = 0 mod 2 pi."""
    theta = np.remainder(theta + np.pi, 2 * np.pi) - np.pi
    half = np.sin(theta / 2)
    safe = np.abs(half) > 1e-12
    ratio = np.where(safe, np.sin(theta * count / 2) / np.where(safe, half, 1.0), count)
    return np.exp(0.5j * theta * (count - 1)) * ratio


def amb_sinc_closed(cfg: SystemConfig, tau, nu):
    """Sinc-filtered ambiguity as a finite lattice sum, O(N) per point.

    The double sum over pulse pairs (n, m) is grouped by d = m - n; the
    remaining sum over n is geometric and is evaluated in closed form.
    """
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    N, B, tp = cfg.N, cfg.B, cfg.tau_p
    lo = -(N // 2)
    d = np.arange(-(N - 1), N)
    count = N - np.abs(d)
    start = lo + np.maximum(0, -d)
    bw = np.clip(B - np.abs(nu), 0.0, None)[..., None]
    nu_ = nu[..., None]
    theta = -2 * np.pi * nu_ * tp
    geom = np.exp(1j * theta * start) * _dirichlet(theta, count)
    terms = np.exp(-1j * np.pi * nu_ * d * tp) * geom * np.sinc(bw * (tau[..., None] + d * tp))
    out = (bw[..., 0] / B / N) * np.exp(1j * np.pi * nu * tau) * terms.sum(axis=-1)
    out = np.where(np.abs(nu) < B, out, 0.0)
    return out[()] if out.ndim == 0 else out


def amb_sinc_grid(cfg: SystemConfig, taus, nus):
    """Sinc ambiguity on a rectangular grid, rows = Doppler, columns = delay.

    Splitting sin(pi b (tau + d tau_p)) by the angle-sum rule leaves a matrix
    1/(tau + d tau_p) that does not depend on Doppler, so the whole grid is two
    complex matrix products.
    """
    taus = np.asarray(taus, dtype=float)
    nus = np.asarray(nus, dtype=float)
    N, B, tp = cfg.N, cfg.B, cfg.tau_p
    d = np.arange(-(N - 1), N)
    count = N - np.abs(d)
    start = -(N // 2) + np.maximum(0, -d)
    bw = np.clip(B - np.abs(nus), 0.0, None)[:, None]
    theta = -2 * np.pi * nus[:, None] * tp
    coef = np.exp(-1j * np.pi * nus[:, None] * d * tp) * np.exp(1j * theta * start) * _dirichlet(theta, count)
    lag = taus[:, None] + d * tp
    near = np.abs(lag) * B < 1e-6
    inv = 1.0 / (np.pi * np.where(near, 1.0, lag))
    inv[near] = 0.0
    arg = np.pi * bw * d * tp
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(bw > 0, 1.0 / np.where(bw > 0, bw, 1.0), 0.0)
    sin_part = (coef * np.cos(arg) * scale) @ inv.T
    cos_part = (coef * np.sin(arg) * scale) @ inv.T
    phase = np.pi * bw * taus[None, :]
    total = np.sin(phase) * sin_part + np.cos(phase) * cos_part
    # lags within 1e-6 bins of zero: add the exact sinc term instead
    for k, j in zip(*np.nonzero(near)):
        total[:, k] += coef[:, j] * np.sinc(bw[:, 0] * lag[k, j])
    out = (bw / B / N) * np.exp(1j * np.pi * nus[:, None] * taus[None, :]) * total
    return np.where(np.abs(nus)[:, None] < B, out, 0.0)


def amb_sinc_direct(cfg: SystemConfig, tau, nu):
    """Sinc-filtered ambiguity by the explicit O(N^2) pulse-pair double sum."""
    N, B, tp = cfg.N, cfg.B, cfg.tau_p
    idx = np.arange(-(N // 2), -(N // 2) + N)
    n, m = np.meshgrid(idx, idx, indexing="ij")
    n, m = n.ravel(), m.ravel()
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    tau, nu = np.broadcast_arrays(tau, nu)
    out = np.empty(tau.shape, dtype=complex)
    for i, (t, f) in enumerate(zip(tau.ravel(), nu.ravel())):
        if abs(f) >= B:
            out.flat[i] = 0.0
            continue
        bw = B - abs(f)
        s = np.sum(np.exp(1j * np.pi * f * (t - (n + m) * tp)) * np.sinc(bw * (t + (m - n) * tp)))
        out.flat[i] = bw / B / N * s
    return out


# ------------------------------------------------------------ Gaussian


def _gauss_grid(cfg: SystemConfig, spec: FilterSpec, taus, nus, n_trunc=N_TRUNC):
    """Gaussian ambiguity on a grid; columns sharing a nearest delay cell share
    one Doppler-kernel table, so only the delay kernel is per point."""
    aB = spec.alpha_tau * cfg.B**2
    aT = spec.alpha_nu * cfg.T**2
    span = np.arange(-n_trunc, n_trunc + 1)
    base_n = np.rint(taus / cfg.tau_p)
    m = np.rint(nus / cfg.nu_p)[:, None] + span
    f0 = nus[:, None] - m * cfg.nu_p
    out = np.empty((nus.size, taus.size), dtype=complex)
    nu_ = nus[:, None, None]
    for b in np.unique(base_n):
        cols = np.flatnonzero(base_n == b)
        ntp = (b + span) * cfg.tau_p
        t0 = taus[cols][:, None] - ntp
        delay = np.exp(-aB * t0**2 / 2 - (np.pi * nu_) ** 2 / (2 * aB) + 1j * np.pi * nu_ * t0)
        dopp = np.exp(
            -aT * f0[:, None, :] ** 2 / 2 + 1j * np.pi * ntp[None, :, None] * f0[:, None, :]
            - (np.pi * ntp[None, :, None]) ** 2 / (2 * aT)
        ).sum(axis=-1)
        out[:, cols] = np.einsum("rci,ri->rc", delay, dopp)
    return out


def amb_gauss_closed(cfg: SystemConfig, spec: FilterSpec, tau, nu, n_trunc=N_TRUNC):
    """Gaussian-filtered ambiguity: product of two Gaussian correlations per cell."""
    if spec.kind is not FilterKind.GAUSSIAN:
        raise ValueError("amb_gauss_closed needs a Gaussian filter")
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    t0, f0, n, _ = lattice_offsets(cfg, tau, nu, n_trunc)
    aB = spec.alpha_tau * cfg.B**2
    aT = spec.alpha_nu * cfg.T**2
    nu_ = nu[..., None]
    # delay kernel per n, Doppler kernel per (n, m); exponents are summed before exp
    delay = -aB * t0**2 / 2 - (np.pi * nu_) ** 2 / (2 * aB) + 1j * np.pi * nu_ * t0
    ntp = (n * cfg.tau_p)[..., :, None]
    dopp = -aT * f0[..., None, :] ** 2 / 2 + 1j * np.pi * ntp * f0[..., None, :] - (np.pi * ntp) ** 2 / (2 * aT)
    out = np.exp(delay[..., :, None] + dopp).sum(axis=(-2, -1))
    return out[()] if out.ndim == 0 else out


# ------------------------------------------------------- Gaussian-sinc


def _gs_delay_kernel(cfg, spec, t0, nu):
    """Correlation of the GS delay kernel at lag t0 under Doppler nu."""
    B, om = cfg.B, spec.omega_tau
    aB = spec.alpha_tau * B**2
    a = np.pi**2 / (2 * aB)
    root = math.sqrt(np.pi / (2 * aB))
    t0, nu = np.broadcast_arrays(t0, nu)
    out = np.empty(t0.shape, dtype=complex)
    zero = np.abs(t0) < 1e-9 / B
    if np.any(zero):
        v = nu[zero]
        out[zero] = om**2 / B * root * (
            numerics.g2(a, v, -B + v) - numerics.g2(a, B + v, v)
            + (B + v) * numerics.g1(a, B + v, v) + (B - v) * numerics.g1(a, v, -B + v)
        )
    nz = ~zero
    if np.any(nz):
        t, v = t0[nz], nu[nz]
        k1 = v + 1j * aB * t / np.pi
        k2 = v - 1j * aB * t / np.pi
        base = -(np.pi * v) ** 2 / (2 * aB) + 1j * np.pi * v * t - aB * t * t / 2
        up = 1j * np.pi * B * t
        s1 = base + a * k1 * k1
        s2 = base + a * k2 * k2
        bracket = (
            numerics.g1(a, B + k1, k1, s1 + up)
            - numerics.g1(a, B + k2, k2, s2 - up)
            + numerics.g1(a, k2, -B + k2, s2 + up)
            - numerics.g1(a, k1, -B + k1, s1 - up)
        )
        out[nz] = om**2 / (2j * np.pi * t * B) * root * bracket
    return out


def _gs_doppler_kernel(cfg, spec, n, f0):
    """Correlation of the GS Doppler kernel at lag f0 with lattice phase index n."""
    T, om = cfg.T, spec.omega_nu
    aT = spec.alpha_nu * T**2
    a = np.pi**2 / (2 * aT)
    root = math.sqrt(np.pi / (2 * aT))
    shift, f0 = np.broadcast_arrays(np.asarray(n, dtype=float) * cfg.tau_p, f0)
    out = np.empty(f0.shape, dtype=complex)
    zero = np.abs(f0) < 1e-9 / T
    if np.any(zero):
        s = shift[zero]
        out[zero] = om**2 / T * root * (
            numerics.g2(a, s, -T + s) - numerics.g2(a, T + s, s)
            + (T + s) * numerics.g1(a, T + s, s) + (T - s) * numerics.g1(a, s, -T + s)
        )
    nz = ~zero
    if np.any(nz):
        f, s = f0[nz], shift[nz]
        z = np.pi * f
        base = -aT * f * f / 2
        bracket = (
            numerics.f_osc(T + s, s, z, a, base + 2j * np.pi * f * (T / 2 + s))
            - numerics.f_osc(T + s, s, -z, a, base - 1j * np.pi * f * T)
            - numerics.f_osc(s, -T + s, z, a, base + 2j * np.pi * f * (-T / 2 + s))
            + numerics.f_osc(s, -T + s, -z, a, base + 1j * np.pi * f * T)
        )
        out[nz] = om**2 / (2j * np.pi * f * T) * root * bracket
    return out


def amb_gs_closed(cfg: SystemConfig, spec: FilterSpec, tau, nu, n_trunc=N_TRUNC):
    """Gaussian-sinc ambiguity via complex error functions."""
    if spec.kind is not FilterKind.GAUSSIAN_SINC:
        raise ValueError("amb_gs_closed needs a Gaussian-sinc filter")
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    t0, f0, n, _ = lattice_offsets(cfg, tau, nu, n_trunc)
    # both kernels carry a Gaussian envelope exp(-alpha x^2 / 2); cells beyond
    # exp(-40) relative are dropped
    live_t = np.abs(t0) * cfg.B < math.sqrt(2 * _ENVELOPE_EXP / spec.alpha_tau)
    live_f = np.abs(f0) * cfg.T < math.sqrt(2 * _ENVELOPE_EXP / spec.alpha_nu)
    nu_b = np.broadcast_to(nu[..., None], t0.shape)
    delay = np.zeros(t0.shape, dtype=complex)
    delay[live_t] = _gs_delay_kernel(cfg, spec, t0[live_t], nu_b[live_t])
    nn, ff = np.broadcast_arrays(n[..., :, None], f0[..., None, :])
    live = live_t[..., :, None] & live_f[..., None, :]
    dopp = np.zeros(nn.shape, dtype=complex)
    dopp[live] = _gs_doppler_kernel(cfg, spec, nn[live], ff[live])
    out = np.einsum("...i,...ij->...", delay, dopp)
    return out[()] if out.ndim == 0 else out


def _gs_grid(cfg: SystemConfig, spec: FilterSpec, taus, nus, n_trunc=N_TRUNC):
    """Gaussian-sinc ambiguity on a grid; the Doppler kernels depend only on
    the row and the nearest delay cell, so they are shared across columns."""
    span = np.arange(-n_trunc, n_trunc + 1)
    reach_t = math.sqrt(2 * _ENVELOPE_EXP / spec.alpha_tau) / cfg.B
    reach_f = math.sqrt(2 * _ENVELOPE_EXP / spec.alpha_nu) / cfg.T
    base_n = np.rint(taus / cfg.tau_p)
    m = np.rint(nus / cfg.nu_p)[:, None] + span
    f0 = nus[:, None] - m * cfg.nu_p
    out = np.zeros((nus.size, taus.size), dtype=complex)
    for b in np.unique(base_n):
        cols = np.flatnonzero(base_n == b)
        n = b + span
        t0 = taus[cols][:, None] - n * cfg.tau_p
        live_n = np.flatnonzero(np.any(np.abs(t0) < reach_t, axis=0))
        if live_n.size == 0:
            continue
        nn, ff = np.broadcast_arrays(n[live_n][None, :, None], f0[:, None, :])
        keep = np.abs(ff) < reach_f
        dopp = np.zeros(nn.shape, dtype=complex)
        dopp[keep] = _gs_doppler_kernel(cfg, spec, nn[keep], ff[keep])
        dopp = dopp.sum(axis=-1)
        for j, i in enumerate(live_n):
            c = np.abs(t0[:, i]) < reach_t
            tt, vv = np.broadcast_arrays(t0[c, i][None, :], nus[:, None])
            delay = _gs_delay_kernel(cfg, spec, tt.ravel(), vv.ravel()).reshape(tt.shape)
            out[:, cols[c]] += delay * dopp[:, j][:, None]
    return out


class ClosedForm:
    """Vectorised closed-form evaluator (tau, nu) -> A for one filter.

    ``grid(taus, nus)`` returns the (len(nus), len(taus)) array and uses a
    faster separable path for the sinc filter.
    """

    def __init__(self, cfg: SystemConfig, spec: FilterSpec):
        self.cfg = cfg
        self.spec = spec

    def __call__(self, tau, nu):
        if self.spec.kind is FilterKind.SINC:
            return amb_sinc_closed(self.cfg, tau, nu)
        if self.spec.kind is FilterKind.GAUSSIAN:
            return amb_gauss_closed(self.cfg, self.spec, tau, nu)
        return amb_gs_closed(self.cfg, self.spec, tau, nu)

    def grid(self, taus, nus, rows=16):
        taus = np.asarray(taus, dtype=float)
        nus = np.asarray(nus, dtype=float)
        if self.spec.kind is FilterKind.SINC:
            step = max(1, 2_000_000 // max(1, taus.size * self.cfg.N))
            return np.concatenate([amb_sinc_grid(self.cfg, taus, nus[s:s + step]) for s in range(0, nus.size, step)])
        if self.spec.kind is FilterKind.GAUSSIAN:
            return _gauss_grid(self.cfg, self.spec, taus, nus)
        if self.spec.kind is FilterKind.GAUSSIAN_SINC:
            return _gs_grid(self.cfg, self.spec, taus, nus)
        out = np.empty((nus.size, taus.size), dtype=complex)
        for s in range(0, nus.size, rows):
            tt, ff = np.meshgrid(taus, nus[s:s + rows])
            out[s:s + rows] = self(tt, ff)
        return out


def closed_form(cfg: SystemConfig, spec: FilterSpec):
    return ClosedForm(cfg, spec)


# --------------------------------------------------------------- oracle


def oracle_samples(spec: FilterSpec, cfg: SystemConfig):
    """Waveform samples used as the brute-force reference.

    Gaussian kernels are not strictly bandlimited, so they are sampled at 4B;
    the sinc train is bandlimited and 2B already makes the Riemann sum exact.
    The sinc train is left unnormalised because its samples do not hold all of
    its energy; the missing tails are added analytically by the oracle.
    """
    if spec.kind is FilterKind.SINC:
        return synthesize_waveform(spec, cfg, rate=2 * cfg.B, normalize=False)
    return synthesize_waveform(spec, cfg, rate=4 * cfg.B)


def _support(x: TimeSamples):
    idx = getattr(x, "_support_idx", None)
    if idx is None:
        idx = np.flatnonzero(x.values)
        x._support_idx = idx
    return idx


def amb_oracle(x: TimeSamples, tau, nu):
    """Riemann sum of x(t) x*(t - tau) exp(-j 2 pi nu (t - tau)) over the samples.

    Off-grid delays use the analytic ``source`` of the samples; without one,
    tau must be a whole number of sample steps inside the sampled span.
    """
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    idx = _support(x)
    t = x.t0 + idx / x.rate
    xs = x.values[idx]
    span = x.values.size / x.rate
    out = np.empty(tau.shape, dtype=complex)
    for i, (d, f) in enumerate(zip(tau.ravel(), nu.ravel())):
        if x.source is not None:
            shifted = x.source(t - d)
        else:
            shift = d * x.rate
            k = int(round(shift))
            if abs(shift - k) > 1e-6:
                raise ValueError("delay is not on the sample grid and no analytic source is attached")
            if abs(d) >= span:
                raise ValueError("delay lies outside the sampled support")
            j = idx - k
            ok = (j >= 0) & (j < x.values.size)
            shifted = np.zeros(idx.size, dtype=complex)
            shifted[ok] = x.values[j[ok]]
        out.flat[i] = np.sum(xs * np.conj(shifted) * np.exp(-2j * np.pi * f * (t - d))) / x.rate
    if x.source is not None and hasattr(x.source, "outside"):
        out += x.source.outside(x.t0, x.t0 + span, tau, nu)
    return out[()] if out.ndim == 0 else out


def amb_oracle_grid(x: TimeSamples, taus, nus, chunk=16384):
    """Oracle on a rectangular grid whose delays are whole sample steps.

    For each delay the lagged product is formed once and projected onto all
    Doppler values with a matrix product, chunked over samples.
    """
    taus = np.asarray(taus, dtype=float)
    nus = np.asarray(nus, dtype=float)
    lags = taus * x.rate
    k = np.rint(lags).astype(np.int64)
    if np.any(np.abs(lags - k) > 1e-6):
        raise ValueError("grid delays must be whole sample steps")
    idx = _support(x)
    n = x.values.size
    out = np.zeros((nus.size, taus.size), dtype=complex)
    for s in range(0, idx.size, chunk):
        part = idx[s:s + chunk]
        t = x.t0 + part / x.rate
        base = x.values[part]
        j = part[None, :] - k[:, None]
        lagged = np.where((j >= 0) & (j < n), x.values[np.clip(j, 0, n - 1)], 0.0)
        prod = base[None, :] * np.conj(lagged)
        phase = np.exp(-2j * np.pi * t[:, None] * nus[None, :])
        out += (prod @ phase).T
    out *= np.exp(2j * np.pi * nus[:, None] * taus[None, :]) / x.rate
    if x.source is not None and hasattr(x.source, "outside"):
        tt, ff = np.meshgrid(taus, nus)
        out += x.source.outside(x.t0, x.t0 + n / x.rate, tt, ff)
    return out


def amb_grid(evaluator, window, dtau, dnu):
    """Sample an evaluator (tau, nu) -> A on a rectangular window.

    ``window`` is (tau_lo, tau_hi, nu_lo, nu_hi); both ends are included when
    they fall on the step.
    """
    tau_lo, tau_hi, nu_lo, nu_hi = window
    n_tau = int(math.floor((tau_hi - tau_lo) / dtau + 1e-9)) + 1
    n_nu = int(math.floor((nu_hi - nu_lo) / dnu + 1e-9)) + 1
    taus = tau_lo + dtau * np.arange(n_tau)
    nus = nu_lo + dnu * np.arange(n_nu)
    if hasattr(evaluator, "grid"):
        return DDGrid(tau_lo, nu_lo, dtau, dnu, evaluator.grid(taus, nus))
    tt, ff = np.meshgrid(taus, nus)
    return DDGrid(tau_lo, nu_lo, dtau, dnu, evaluator(tt, ff))


def white_box_window(cfg: SystemConfig):
    """One delay-Doppler period centred on the origin."""
    return (-cfg.tau_p / 2, cfg.tau_p / 2, -cfg.nu_p / 2, cfg.nu_p / 2)


# -------------------------------------------------------------- metrics


@dataclass
class AmbiguityMetrics:
    """Lobe figures in delay bins (1/B) and dB.

    ``mlw_bins`` reads the -25 dB width on 20 log10|A|; ``mlw_bins_10log`` on
    10 log10|A|.  PSLR and ISLR are 10 log10 of magnitude ratios, from the
    zero-Doppler cut (``*_cut_db``) and from the full window (``*_db``).  None
    marks an absent sidelobe structure.
    """

    mlw_bins: float
    mlw_bins_10log: float
    pslr_db: float | None
    islr_db: float | None
    pslr_cut_db: float | None
    islr_cut_db: float | None

    def to_dict(self):
        return dict(self.__dict__)


def _crossing_width(offsets_bins, level_db, threshold_db):
    """Width between the outermost-inner -threshold crossings around the peak."""
    centre = int(np.argmax(level_db))
    below = level_db < threshold_db

    def walk(step):
        i = centre
        while 0 <= i + step < level_db.size:
            if below[i + step]:
                j = i + step
                # linear interpolation in dB between samples i and j
                frac = (level_db[i] - threshold_db) / (level_db[i] - level_db[j])
                return offsets_bins[i] + frac * (offsets_bins[j] - offsets_bins[i])
            i += step
        raise ValueError("no -25 dB crossing inside the sampled cut")

    return walk(1) - walk(-1)


def _first_minimum(mag, centre, step):
    i = centre
    while 0 <= i + step < mag.size and mag[i + step] <= mag[i]:
        i += step
    if i + step < 0 or i + step >= mag.size:
        return None
    return i


def mainlobe_width(cut: DDGrid, B, db_factor=20.0, level=-25.0):
    mag = np.abs(cut.values[0])
    with np.errstate(divide="ignore"):
        db = db_factor * np.log10(mag / mag.max())
    return _crossing_width(cut.taus * B, db, level)


def _cut_sidelobes(mag):
    centre = int(np.argmax(mag))
    lo = _first_minimum(mag, centre, -1)
    hi = _first_minimum(mag, centre, 1)
    if lo is None or hi is None:
        return None, None
    main = np.zeros(mag.size, dtype=bool)
    main[lo:hi + 1] = True
    side = mag[~main]
    pslr = 10 * np.log10(side.max() / mag[centre])
    islr = 10 * np.log10(side.sum() / mag[main].sum())
    return pslr, islr


def _window_sidelobes(mag):
    l0, k0 = np.unravel_index(int(np.argmax(mag)), mag.shape)
    k_lo = _first_minimum(mag[l0], k0, -1)
    k_hi = _first_minimum(mag[l0], k0, 1)
    l_lo = _first_minimum(mag[:, k0], l0, -1)
    l_hi = _first_minimum(mag[:, k0], l0, 1)
    if None in (k_lo, k_hi, l_lo, l_hi):
        return None, None
    main = np.zeros(mag.shape, dtype=bool)
    main[l_lo:l_hi + 1, k_lo:k_hi + 1] = True
    side = mag[~main]
    return 10 * np.log10(side.max() / mag[l0, k0]), 10 * np.log10(side.sum() / mag[main].sum())


def lobe_metrics(cfg: SystemConfig, zero_doppler_cut: DDGrid, full_window: DDGrid | None = None):
    """Main-lobe width, PSLR and ISLR from sampled ambiguity magnitudes."""
    mlw20 = mainlobe_width(zero_doppler_cut, cfg.B, 20.0)
    mlw10 = mainlobe_width(zero_doppler_cut, cfg.B, 10.0)
    pslr_cut, islr_cut = _cut_sidelobes(np.abs(zero_doppler_cut.values[0]))
    pslr = islr = None
    if full_window is not None:
        pslr, islr = _window_sidelobes(np.abs(full_window.values))
    return AmbiguityMetrics(mlw20, mlw10, pslr, islr, pslr_cut, islr_cut)


def table_metrics(cfg: SystemConfig, spec: FilterSpec, cut_density=100, window_density=2):
    """Metrics of the closed-form ambiguity over one period around the origin.

    The zero-Doppler cut is sampled at ``cut_density`` points per delay bin
    and the full window at ``window_density`` points per bin on both axes.
    """
    ev = closed_form(cfg, spec)
    half_tau = cfg.tau_p / 2
    cut = amb_grid(ev, (-half_tau, half_tau, 0.0, 0.0), 1 / (cut_density * cfg.B), 1.0)
    window = amb_grid(ev, white_box_window(cfg), 1 / (window_density * cfg.B), 1 / (window_density * cfg.T))
    return lobe_metrics(cfg, cut, window)


# ----------------------------------------------------------- validation


@dataclass
class ValidationReport:
    filter: str
    n_points: int
    max_abs_dev: float
    tol: float
    closed_seconds: float
    oracle_seconds: float

    @property
    def passed(self):
        return self.max_abs_dev <= self.tol

    def to_dict(self):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def validate_closed_vs_oracle(cfg: SystemConfig, spec: FilterSpec, n_points=64, tol=1e-5, seed=0, window=None):
    """Compare closed form and time-domain oracle at random window points."""
    rng = np.random.default_rng(seed)
    tau_lo, tau_hi, nu_lo, nu_hi = window or white_box_window(cfg)
    tau = rng.uniform(tau_lo, tau_hi, n_points)
    nu = rng.uniform(nu_lo, nu_hi, n_points)
    x = oracle_samples(spec, cfg)
    t0 = time.perf_counter()
    closed = closed_form(cfg, spec)(tau, nu)
    t1 = time.perf_counter()
    oracle = amb_oracle(x, tau, nu)
    t2 = time.perf_counter()
    return ValidationReport(spec.kind.value, n_points, float(np.max(np.abs(closed - oracle))), tol, t1 - t0, t2 - t1)


# -------------------------------------------------------------- export


HEATMAP_FLOOR_DB = -300.0


def heatmap_csv(grid: DDGrid, floor_db=HEATMAP_FLOOR_DB):
    """CSV rows ``tau,nu,abs_db`` with 20 log10 of the magnitude relative to the grid peak."""
    mag = np.abs(grid.values)
    peak = mag.max()
    ref = peak if peak > 0 else 1.0
    with np.errstate(divide="ignore"):
        db = np.maximum(20 * np.log10(mag / ref), floor_db)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "nu", "abs_db"])
    taus = grid.taus
    for l, nu in enumerate(grid.nus):
        for k, tau in enumerate(taus):
            w.writerow([_fmt(tau), _fmt(nu), _fmt(db[l, k])])
    return buf.getvalue()
