"""Delay-Doppler lattice configuration, Zak transform pair and grid containers."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class SystemConfig:
    B: float
    T: float
    tau_p: float
    nu_p: float
    M: int
    N: int
    P: int = 4
    Q: int = 4
    f_c: float = 1e9
    E_p: float = 1.0

    def __post_init__(self):
        if min(self.B, self.T, self.tau_p, self.nu_p, self.f_c) <= 0:
            raise ValueError("all physical parameters must be positive")
        if abs(self.tau_p * self.nu_p - 1.0) > 1e-12:
            raise ValueError("delay and Doppler periods must satisfy tau_p * nu_p = 1")
        if self.P < 1 or self.Q < 1:
            raise ValueError("oversampling factors must be at least 1")

    @property
    def dtau(self):
        """Receiver delay step 1/(PB)."""
        return 1.0 / (self.P * self.B)

    @property
    def dnu(self):
        """Receiver Doppler step 1/(QT)."""
        return 1.0 / (self.Q * self.T)

    def to_dict(self):
        return {
            "B": self.B, "T": self.T, "tau_p": self.tau_p, "nu_p": self.nu_p,
            "M": self.M, "N": self.N, "P": self.P, "Q": self.Q, "f_c": self.f_c, "E_p": self.E_p,
        }


def _integral(value, what):
    rounded = round(value)
    if rounded < 1 or abs(value - rounded) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"{what} = {value!r} is not a positive integer")
    return int(rounded)


def make_config(B=4e6, T=20e-3, tau_p=100e-6, P=4, Q=4, f_c=1e9):
    """Build a lattice configuration; M = B*tau_p and N = T/tau_p must be integers."""
    M = _integral(B * tau_p, "M = B*tau_p")
    N = _integral(T / tau_p, "N = T/tau_p")
    return SystemConfig(B=B, T=T, tau_p=tau_p, nu_p=1.0 / tau_p, M=M, N=N, P=int(P), Q=int(Q), f_c=f_c)


@dataclass
class TimeSamples:
    """Uniform samples; ``source`` optionally evaluates the underlying signal anywhere."""

    rate: float
    t0: float
    values: np.ndarray
    source: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("time samples must be finite")

    @property
    def times(self):
        return self.t0 + np.arange(self.values.size) / self.rate

    def energy(self):
        return float(np.sum(np.abs(self.values) ** 2) / self.rate)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re", "im"])
        for t, v in zip(self.times, self.values):
            w.writerow([_fmt(t), _fmt(v.real), _fmt(v.imag)])
        return buf.getvalue()


@dataclass
class DDGrid:
    """Uniform complex samples over a delay-Doppler rectangle.

    ``values[l, k]`` holds the sample at (tau0 + k*dtau, nu0 + l*dnu), so delay
    is the fast (row-major) axis.
    """

    tau0: float
    nu0: float
    dtau: float
    dnu: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=complex))
        if not (self.dtau > 0 and self.dnu > 0):
            raise ValueError("grid steps must be positive")

    @property
    def n_tau(self):
        return self.values.shape[1]

    @property
    def n_nu(self):
        return self.values.shape[0]

    @property
    def taus(self):
        return self.tau0 + self.dtau * np.arange(self.n_tau)

    @property
    def nus(self):
        return self.nu0 + self.dnu * np.arange(self.n_nu)

    def same_geometry(self, other, rtol=1e-9):
        return (
            self.values.shape == other.values.shape
            and np.isclose(self.dtau, other.dtau, rtol=rtol, atol=0)
            and np.isclose(self.dnu, other.dnu, rtol=rtol, atol=0)
            and abs(self.tau0 - other.tau0) <= rtol * self.dtau
            and abs(self.nu0 - other.nu0) <= rtol * self.dnu
        )

    def with_values(self, values):
        return DDGrid(self.tau0, self.nu0, self.dtau, self.dnu, values)

    def geometry(self):
        return {
            "tau0": self.tau0, "nu0": self.nu0, "dtau": self.dtau, "dnu": self.dnu,
            "n_tau": self.n_tau, "n_nu": self.n_nu,
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "nu", "re", "im"])
        taus = self.taus
        for l, nu in enumerate(self.nus):
            row = self.values[l]
            for k, tau in enumerate(taus):
                w.writerow([_fmt(tau), _fmt(nu), _fmt(row[k].real), _fmt(row[k].imag)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["tau", "nu", "re", "im"]:
            raise ValueError("expected header tau,nu,re,im")
        data = np.array(rows[1:], dtype=float)
        taus = np.unique(data[:, 0])
        nus = np.unique(data[:, 1])
        values = (data[:, 2] + 1j * data[:, 3]).reshape(nus.size, taus.size)
        dtau = taus[1] - taus[0] if taus.size > 1 else 1.0
        dnu = nus[1] - nus[0] if nus.size > 1 else 1.0
        return cls(taus[0], nus[0], dtau, dnu, values)

    def to_json(self):
        return json.dumps({
            "geometry": self.geometry(),
            "re": self.values.real.ravel().tolist(),
            "im": self.values.imag.ravel().tolist(),
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        g = d["geometry"]
        values = (np.array(d["re"]) + 1j * np.array(d["im"])).reshape(g["n_nu"], g["n_tau"])
        if values.size != g["n_tau"] * g["n_nu"]:
            raise ValueError("value count does not match geometry")
        return cls(g["tau0"], g["nu0"], g["dtau"], g["dnu"], values)


def _fmt(x):
    return format(float(x), ".17g")


def zak(x: TimeSamples, cfg: SystemConfig) -> DDGrid:
    """Discrete Zak transform over the fundamental delay-Doppler cell.

    With L samples per delay period and K periods, the output is the L x K grid
    sqrt(tau_p) * sum_n x[k + nL] exp(-j 2 pi n l / K), i.e. an FFT along the
    period index.  The grid is unitary under the Riemann weights 1/rate and
    nu_p/K.
    """
    L = _integral(x.rate * cfg.tau_p, "samples per delay period")
    if x.values.size % L:
        raise ValueError(f"{x.values.size} samples is not a multiple of {L} samples per period")
    K = x.values.size // L
    frames = x.values.reshape(K, L)
    # the time origin may sit mid-period; fold it into the delay axis phase-free
    grid = np.sqrt(cfg.tau_p) * np.fft.fft(frames, axis=0)
    return DDGrid(tau0=x.t0, nu0=0.0, dtau=1.0 / x.rate, dnu=cfg.nu_p / K, values=grid)


def izak(g: DDGrid, cfg: SystemConfig) -> TimeSamples:
    """Inverse of :func:`zak`."""
    L = g.n_tau
    K = g.n_nu
    if abs(L * g.dtau - cfg.tau_p) > 1e-9 * cfg.tau_p or abs(K * g.dnu - cfg.nu_p) > 1e-9 * cfg.nu_p:
        raise ValueError("grid does not cover exactly one delay-Doppler period")
    frames = np.fft.ifft(g.values, axis=0) / np.sqrt(cfg.tau_p)
    return TimeSamples(rate=1.0 / g.dtau, t0=g.tau0, values=frames.reshape(-1))


def zak_extend(g: DDGrid, k, l):
    """Sample a Zak grid at arbitrary integer indices using quasi-periodicity.

    Shifting delay by one period multiplies by exp(j 2 pi l / K); Doppler is
    periodic with K cells.
    """
    L, K = g.n_tau, g.n_nu
    k = np.asarray(k)
    l = np.asarray(l)
    wraps, kk = np.divmod(k, L)
    ll = np.mod(l, K)
    return g.values[ll, kk] * np.exp(2j * np.pi * wraps * ll / K)


def twisted_conv(a: DDGrid, b: DDGrid) -> DDGrid:
    """Riemann-sum twisted convolution with phase exp(j 2 pi nu' (tau - tau')).

    Returns the full linear support; the origin of the result is the sum of
    the input origins.
    """
    if not (np.isclose(a.dtau, b.dtau, rtol=1e-9) and np.isclose(a.dnu, b.dnu, rtol=1e-9)):
        raise ValueError("twisted convolution needs matching grid steps")
    dtau, dnu = a.dtau, a.dnu
    out = np.zeros((a.n_nu + b.n_nu - 1, a.n_tau + b.n_tau - 1), dtype=complex)
    tau0 = a.tau0 + b.tau0
    out_taus = tau0 + dtau * np.arange(out.shape[1])
    a_taus, a_nus = a.taus, a.nus
    for l1, k1 in zip(*np.nonzero(a.values)):
        tau1, nu1 = a_taus[k1], a_nus[l1]
        phase = np.exp(2j * np.pi * nu1 * (out_taus[k1:k1 + b.n_tau] - tau1))
        out[l1:l1 + b.n_nu, k1:k1 + b.n_tau] += a.values[l1, k1] * b.values * phase
    return DDGrid(tau0, a.nu0 + b.nu0, dtau, dnu, out * dtau * dnu)


DIRECT_LAGS = 16


class CorrelationPlan:
    """Precomputed probe-side data for discrete cross-ambiguity on one window.

    Evaluates sum_j y(t_j + tau_k) x*(t_j) exp(-j 2 pi nu_l t_j) / rate with
    t_j the probe sample times, tau_k = k / rate and nu_l = l / (Q T).  Writing
    j = p L + o (period p, offset o inside the period), the Doppler phase
    factors into exp(-j 2 pi l p / (Q N)) times a slowly varying in-period
    phase, which is expanded in a short Taylor series.  What remains per
    period is a plain correlation over lags, done by FFT against cached probe
    spectra, and one matrix product over periods.
    """

    def __init__(self, x: TimeSamples, cfg: SystemConfig, k_range, l_range, tol=1e-13):
        R = x.rate
        L = _integral(R * cfg.tau_p, "samples per delay period")
        D = cfg.Q * cfg.N
        self.x, self.cfg, self.rate, self.L, self.D = x, cfg, R, L, D
        self.ks = np.arange(k_range[0], k_range[1] + 1)
        self.ls = np.arange(l_range[0], l_range[1] + 1)
        support = np.flatnonzero(x.values)
        if support.size == 0:
            raise ValueError("probe waveform is identically zero")
        # start each period block right after the widest gap in the occupied
        # offsets so pulses straddling a period boundary stay contiguous
        offs = np.unique(support % L)
        gaps = np.diff(np.concatenate([offs, [offs[0] + L]]))
        widest = int(np.argmax(gaps))
        self.o_lo = int(offs[(widest + 1) % offs.size])
        W = int(L - gaps[widest] + 1)
        self.width = W
        self.p_lo = int((support.min() - self.o_lo) // L)
        self.n_per = int((support.max() - self.o_lo) // L) - self.p_lo + 1
        K = self.ks.size
        self.block = W + K - 1
        self.nfft = _fast_len(self.block)

        first = self.o_lo + self.p_lo * L
        idx = first + np.arange(self.n_per)[:, None] * L + np.arange(W)[None, :]
        ok = (idx >= 0) & (idx < x.values.size)
        xw = np.where(ok, x.values[np.clip(idx, 0, x.values.size - 1)], 0.0)

        half = max((W - 1) / 2, 0.5)
        centre = (W - 1) / 2
        reach = 2 * np.pi * np.abs(self.ls).max() * half / (L * D)
        order = 0
        term = 1.0
        while term > tol:
            order += 1
            term *= reach / order
        self.order = order
        q = np.arange(order)
        u = (np.arange(W) - centre) / half
        weights = u[None, :] ** q[:, None] / np.array([math.factorial(int(v)) for v in q], dtype=float)[:, None]
        g = np.conj(xw)[:, None, :] * weights[None, :, :]
        if K <= DIRECT_LAGS:
            # few lags: sliding dot products beat per-period FFTs
            self._probe_direct = np.ascontiguousarray(np.swapaxes(g, 1, 2))
            self._probe_spec = None
        else:
            self._probe_direct = None
            self._probe_spec = np.conj(np.fft.fft(np.conj(g), n=self.nfft, axis=-1))

        lam = -2j * np.pi * self.ls * half / (L * D)
        self._series = lam[None, :] ** q[:, None]
        self._periods = np.exp(-2j * np.pi * np.outer(np.arange(self.n_per) + self.p_lo, self.ls) / D)
        nus = self.ls / (cfg.Q * cfg.T)
        self._row_phase = np.exp(-2j * np.pi * self.ls * (self.o_lo + centre) / (L * D)) * np.exp(
            -2j * np.pi * nus * x.t0) / R

    @property
    def block_starts(self):
        """Echo sample index (relative to the probe origin) of each period block."""
        return (np.arange(self.n_per) + self.p_lo) * self.L + self.o_lo + self.ks[0]

    def blocks_from(self, y: TimeSamples):
        if abs(y.rate - self.rate) > 1e-9 * self.rate:
            raise ValueError("echo and probe must share a sample rate")
        lead = (self.x.t0 - y.t0) * self.rate
        base = int(round(lead))
        if abs(lead - base) > 1e-6:
            raise ValueError("echo and probe sample grids are not aligned")
        idx = base + self.block_starts[:, None] + np.arange(self.block)[None, :]
        ok = (idx >= 0) & (idx < y.values.size)
        return np.where(ok, y.values[np.clip(idx, 0, y.values.size - 1)], 0.0)

    def apply(self, blocks) -> DDGrid:
        """Cross-ambiguity from echo blocks shaped (periods, block)."""
        R = self.rate
        dnu = 1.0 / (self.cfg.Q * self.cfg.T)
        return DDGrid(self.ks[0] / R, self.ls[0] * dnu, 1.0 / R, dnu, self.apply_values(blocks))

    def apply_values(self, blocks):
        """Like :meth:`apply` but returns bare values and accepts leading batch axes."""
        K = self.ks.size
        blocks = np.asarray(blocks)
        if self._probe_direct is not None:
            windows = sliding_window_view(blocks, self.width, axis=-1)
            moments = np.swapaxes(windows @ self._probe_direct, -1, -2)
        else:
            spec = np.fft.fft(blocks, n=self.nfft, axis=-1)
            moments = np.fft.ifft(spec[..., :, None, :] * self._probe_spec, axis=-1)[..., :K]
        # moments[..., p, q, k] -> sum over periods with the Doppler phase, then the series
        per = np.tensordot(moments, self._periods, axes=([-3], [0]))
        acc = np.einsum("...qkl,ql->...lk", per, self._series)
        return acc * self._row_phase[:, None]

    def __call__(self, y: TimeSamples) -> DDGrid:
        return self.apply(self.blocks_from(y))


def _fast_len(n):
    from scipy.fft import next_fast_len
    return next_fast_len(int(n))


def dd_correlate(y: TimeSamples, x: TimeSamples, cfg: SystemConfig, k_range, l_range) -> DDGrid:
    """Discrete cross-ambiguity of echo y against probe x; see CorrelationPlan."""
    return CorrelationPlan(x, cfg, k_range, l_range)(y)
