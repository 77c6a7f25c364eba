"""Peak-detection receiver on the discrete cross-ambiguity grid.

The basic receiver reports the strongest local maxima inside the detection
window.  The interference-cancelling receiver instead repeats: take the
global peak, project the grid onto the self-ambiguity centred there to
estimate the fade, subtract that reconstruction, and continue on the
residual.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .ddcore import CorrelationPlan, DDGrid, SystemConfig, TimeSamples, _fmt

C_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class DetectionWindow:
    tau_lo: float
    tau_hi: float
    nu_lo: float
    nu_hi: float
    k_lo: int
    k_hi: int
    l_lo: int
    l_hi: int

    @property
    def n_tau(self):
        return self.k_hi - self.k_lo + 1

    @property
    def n_nu(self):
        return self.l_hi - self.l_lo + 1

    def geometry(self, cfg: SystemConfig):
        return {
            "tau0": self.k_lo * cfg.dtau, "nu0": self.l_lo * cfg.dnu,
            "dtau": cfg.dtau, "dnu": cfg.dnu, "n_tau": self.n_tau, "n_nu": self.n_nu,
        }

    def diagonal(self):
        """Delay and Doppler extents of the window, used as the miss penalty."""
        return self.tau_hi - self.tau_lo, self.nu_hi - self.nu_lo


def _floor(v):
    return math.floor(v + 1e-9)


def _ceil(v):
    return math.ceil(v - 1e-9)


def detection_window(tau_lo, tau_hi, nu_lo, nu_hi, cfg: SystemConfig) -> DetectionWindow:
    """Discrete bounds k = P floor(B tau_lo) ... P ceil(B tau_hi), likewise in Doppler."""
    if not (tau_lo < tau_hi and nu_lo < nu_hi):
        raise ValueError("detection window bounds must be increasing")
    k_lo = cfg.P * _floor(cfg.B * tau_lo)
    k_hi = cfg.P * _ceil(cfg.B * tau_hi)
    l_lo = cfg.Q * _floor(cfg.T * nu_lo)
    l_hi = cfg.Q * _ceil(cfg.T * nu_hi)
    if k_hi - k_lo >= cfg.P * cfg.M or l_hi - l_lo >= cfg.Q * cfg.N:
        raise ValueError("detection window must fit inside one delay-Doppler period")
    return DetectionWindow(tau_lo, tau_hi, nu_lo, nu_hi, k_lo, k_hi, l_lo, l_hi)


def window_around(scene_window, cfg: SystemConfig, tau_margin=(0.0, 2e-6), nu_margin=400.0):
    """Detection window grown from a scene window by delay and Doppler margins."""
    return detection_window(
        scene_window.tau_min - tau_margin[0], scene_window.tau_max + tau_margin[1],
        scene_window.nu_min - nu_margin, scene_window.nu_max + nu_margin, cfg,
    )


DENSE_WINDOW = (200e-6, 203e-6, -600.0, 600.0)
SPARSE_WINDOW = (200e-6, 207e-6, -1400.0, 1400.0)
TWO_TARGET_WINDOW = (0.0, 5e-6, -1000.0, 1000.0)


@dataclass(frozen=True)
class PeakEstimate:
    k_hat: int
    l_hat: int
    tau_hat: float
    nu_hat: float
    h_hat: complex | None
    range_m: float
    velocity_mps: float
    magnitude: float = 0.0


def to_range_velocity(tau, nu, cfg: SystemConfig):
    return C_LIGHT * tau / 2, C_LIGHT * nu / (2 * cfg.f_c)


def _peak_at(grid: DDGrid, k_idx, l_idx, cfg):
    k = int(round(grid.tau0 / grid.dtau)) + int(k_idx)
    l = int(round(grid.nu0 / grid.dnu)) + int(l_idx)
    tau, nu = k * cfg.dtau, l * cfg.dnu
    r, v = to_range_velocity(tau, nu, cfg)
    return PeakEstimate(k, l, tau, nu, None, r, v, float(abs(grid.values[l_idx, k_idx])))


def cross_ambiguity_discrete(y: TimeSamples, x: TimeSamples, win: DetectionWindow, cfg: SystemConfig, plan=None):
    """A_{y,x}[k, l] on the window, from echo and probe samples at rate P B."""
    if abs(x.rate * cfg.dtau - 1) > 1e-9:
        raise ValueError("probe must be sampled at P*B so grid delays are whole samples")
    plan = plan or CorrelationPlan(x, cfg, (win.k_lo, win.k_hi), (win.l_lo, win.l_hi))
    return plan(y)


def detect_peak(grid: DDGrid, cfg: SystemConfig) -> PeakEstimate:
    """Global maximum of |grid|; ties go to the smallest k, then smallest l."""
    mag = np.abs(grid.values)
    flat = int(np.argmax(mag.T))
    k_idx, l_idx = divmod(flat, mag.shape[0])
    return _peak_at(grid, k_idx, l_idx, cfg)


class SelfAmbiguityTable:
    """Self-ambiguity sampled at every index offset a window can produce."""

    def __init__(self, evaluator, win: DetectionWindow, cfg: SystemConfig):
        self.win, self.cfg = win, cfg
        dk = np.arange(-(win.n_tau - 1), win.n_tau)
        dl = np.arange(-(win.n_nu - 1), win.n_nu)
        if hasattr(evaluator, "grid"):
            self.values = evaluator.grid(dk * cfg.dtau, dl * cfg.dnu)
        else:
            tt, ff = np.meshgrid(dk * cfg.dtau, dl * cfg.dnu)
            self.values = evaluator(tt, ff)
        ks = np.arange(win.k_lo, win.k_hi + 1)
        self._ks = ks
        self._twist = cfg.P * cfg.Q * cfg.M * cfg.N

    def shifted(self, k_hat, l_hat):
        """A[k - k_hat, l - l_hat] exp(j 2 pi l_hat (k - k_hat) / (PQMN)) over the window."""
        w = self.win
        r0 = (w.l_lo - l_hat) + (w.n_nu - 1)
        c0 = (w.k_lo - k_hat) + (w.n_tau - 1)
        if not (0 <= r0 and r0 + w.n_nu <= self.values.shape[0] and 0 <= c0 and c0 + w.n_tau <= self.values.shape[1]):
            raise ValueError("peak lies outside the detection window")
        block = self.values[r0:r0 + w.n_nu, c0:c0 + w.n_tau]
        phase = np.exp(2j * np.pi * l_hat * (self._ks - k_hat) / self._twist)
        return block * phase[None, :]


def estimate_fade(Ayx: DDGrid, table: SelfAmbiguityTable, peak: PeakEstimate):
    """Least-squares projection of the grid onto the self-ambiguity at the peak."""
    ref = table.shifted(peak.k_hat, peak.l_hat)
    volume = float(np.sum(np.abs(ref) ** 2))
    if volume == 0:
        raise ZeroDivisionError("self-ambiguity has no energy inside the window")
    return complex(np.sum(Ayx.values * np.conj(ref)) / volume)


def cancel_target(Ayx: DDGrid, table: SelfAmbiguityTable, peak: PeakEstimate, h_hat) -> DDGrid:
    return Ayx.with_values(Ayx.values - h_hat * table.shifted(peak.k_hat, peak.l_hat))


def local_maxima(mag):
    """Boolean mask of cells strictly greater than all in-grid 8-neighbours."""
    padded = np.pad(mag, 1, constant_values=-np.inf)
    centre = padded[1:-1, 1:-1]
    mask = np.ones(mag.shape, dtype=bool)
    rows, cols = mag.shape
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            mask &= centre > padded[1 + dr:1 + dr + rows, 1 + dc:1 + dc + cols]
    return mask


def run_receiver(Ayx: DDGrid, table: SelfAmbiguityTable, n_targets, mode, cfg: SystemConfig):
    """Estimate ``n_targets`` peaks; missing detections are returned as None."""
    if n_targets < 1:
        raise ValueError("n_targets must be at least 1")
    if mode == "basic":
        mag = np.abs(Ayx.values)
        ls, ks = np.nonzero(local_maxima(mag))
        # strongest first; equal magnitudes fall back to smallest k, then l
        order = np.lexsort((ls, ks, -mag[ls, ks]))
        peaks = [_peak_at(Ayx, ks[i], ls[i], cfg) for i in order[:n_targets]]
        return peaks + [None] * (n_targets - len(peaks))
    if mode == "iti":
        peaks = []
        residual = Ayx
        for _ in range(n_targets):
            peak = detect_peak(residual, cfg)
            h = estimate_fade(residual, table, peak)
            residual = cancel_target(residual, table, peak, h)
            peaks.append(replace(peak, h_hat=h))
        return peaks
    raise ValueError(f"unknown receiver mode {mode!r}")


ESTIMATE_HEADER = ["k", "l", "tau_s", "nu_hz", "h_re", "h_im", "range_m", "velocity_mps"]


def estimates_csv(peaks):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ESTIMATE_HEADER)
    for p in peaks:
        if p is None:
            continue
        h = complex(p.h_hat) if p.h_hat is not None else complex("nan")
        w.writerow([p.k_hat, p.l_hat, _fmt(p.tau_hat), _fmt(p.nu_hat), _fmt(h.real), _fmt(h.imag),
                    _fmt(p.range_m), _fmt(p.velocity_mps)])
    return buf.getvalue()
