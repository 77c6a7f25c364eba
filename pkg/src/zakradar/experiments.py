"""Monte Carlo harnesses: ROC, RMSE against SNR, the two-target sweep, and
a closed-form versus oracle timing benchmark.

Every trial draws from its own generator keyed by (seed, SNR index, trial), so
results do not depend on how trials are split across worker threads, and all
filters see the same scenes.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ambiguity, receiver, scene
from .ddcore import SystemConfig, _fmt
from .scene import PATH_LOSS_REF
from .filters import FilterKind, FilterSpec, synthesize_waveform

N_TARGETS = 4
CHUNK = 64


@dataclass
class ExperimentConfig:
    scene: str = "dense"
    n_trials: int = 50_000
    snr_db: tuple = (-9.0,)
    seed: int = 0
    filter: str = "sinc"
    mode: str = "both"
    threads: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.scene not in ("dense", "sparse", "two_target"):
            raise ValueError(f"unknown scene kind {self.scene!r}")
        self.snr_db = tuple(float(s) for s in np.atleast_1d(self.snr_db))

    def to_dict(self):
        return dict(self.__dict__, snr_db=list(self.snr_db))


def trial_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def _pmap(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _chunks(n, size=CHUNK):
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def scene_window(kind):
    return {"dense": scene.DENSE, "sparse": scene.SPARSE}[kind]


def detection_preset(kind, cfg):
    bounds = {"dense": receiver.DENSE_WINDOW, "sparse": receiver.SPARSE_WINDOW,
              "two_target": receiver.TWO_TARGET_WINDOW}[kind]
    return receiver.detection_window(*bounds, cfg)


# ------------------------------------------------------------------ ROC


@dataclass
class RocCurve:
    gamma: np.ndarray
    pf: np.ndarray
    pd: np.ndarray
    snr_db: float
    filter: str
    n_trials: int

    def pd_at(self, pf_target):
        """Best detection probability with false-alarm rate at most ``pf_target``."""
        ok = self.pf <= pf_target
        return float(self.pd[ok].max()) if np.any(ok) else 0.0

    def to_csv(self):
        return _csv(["gamma", "pf", "pd"], zip(self.gamma, self.pf, self.pd))


def _hypothesis_samples(targets, noise, amb_eval):
    tau = np.array([t.tau for t in targets])
    nu = np.array([t.nu for t in targets])
    h = np.array([t.h for t in targets])
    dt = tau[:, None] - tau[None, :]
    df = nu[:, None] - nu[None, :]
    a = amb_eval(dt, df)
    contrib = h[None, :] * a * np.exp(2j * np.pi * nu[None, :] * dt)
    total = contrib.sum(axis=1)
    others = total - np.diag(contrib)
    return np.abs(total + noise) ** 2, np.abs(others + noise) ** 2


def roc_run(exp: ExperimentConfig, cfg: SystemConfig, spec: FilterSpec) -> RocCurve:
    """Pooled H1/H0 statistics at the target locations and the threshold sweep."""
    window = scene_window(exp.scene)
    amb_eval = ambiguity.closed_form(cfg, spec)
    snr = exp.snr_db[0]
    n0 = scene.n0_from_snr(snr, window.tau_min, cfg).N0

    def work(span):
        h1, h0 = [], []
        for t in range(*span):
            rng = trial_rng(exp.seed, 0, t)
            targets = scene.draw_scene(window, N_TARGETS, rng)
            pts = [(x.tau, x.nu) for x in targets]
            noise = scene.draw_noise_points(pts, n0, amb_eval, rng)
            a, b = _hypothesis_samples(targets, noise, amb_eval)
            h1.append(a)
            h0.append(b)
        return np.concatenate(h1), np.concatenate(h0)

    parts = _pmap(work, _chunks(exp.n_trials), exp.threads)
    h1 = np.concatenate([p[0] for p in parts])
    h0 = np.concatenate([p[1] for p in parts])
    return roc_from_samples(h1, h0, snr, spec.kind.value, exp.n_trials)


def roc_from_samples(h1, h0, snr_db, filter_name, n_trials):
    gamma = np.concatenate([[0.0], np.unique(np.concatenate([h1, h0]))])
    s1 = np.sort(h1)
    s0 = np.sort(h0)
    pd = 1.0 - np.searchsorted(s1, gamma, side="right") / s1.size
    pf = 1.0 - np.searchsorted(s0, gamma, side="right") / s0.size
    return RocCurve(gamma, pf, pd, snr_db, filter_name, n_trials)


# ----------------------------------------------------------------- RMSE


@dataclass
class RmseCurve:
    snr_db: np.ndarray
    rmse_range_m: np.ndarray
    rmse_velocity_mps: np.ndarray
    filter: str
    mode: str
    range_se_m: np.ndarray = field(default=None)
    misses: np.ndarray = field(default=None)

    def to_csv(self):
        return _csv(["snr_db", "rmse_range_m", "rmse_velocity_mps"],
                    zip(self.snr_db, self.rmse_range_m, self.rmse_velocity_mps))


def match_estimates(peaks, targets, win: receiver.DetectionWindow, cfg: SystemConfig):
    """Squared range and velocity errors per true target plus the miss count.

    Estimates claim their nearest unclaimed target in turn, strongest first
    (fade magnitude when available, else peak magnitude); distance is measured
    in delay and Doppler resolution units.  Targets left unclaimed cost the
    window extent.
    """
    present = [p for p in peaks if p is not None]
    present.sort(key=lambda p: -(abs(p.h_hat) if p.h_hat is not None else p.magnitude))
    free = list(range(len(targets)))
    err_r = np.empty(len(targets))
    err_v = np.empty(len(targets))
    for p in present:
        if not free:
            break
        d = [((p.tau_hat - targets[i].tau) * cfg.B) ** 2 + ((p.nu_hat - targets[i].nu) * cfg.T) ** 2 for i in free]
        i = free.pop(int(np.argmin(d)))
        r, v = receiver.to_range_velocity(targets[i].tau, targets[i].nu, cfg)
        err_r[i] = (p.range_m - r) ** 2
        err_v[i] = (p.velocity_mps - v) ** 2
    span_tau, span_nu = win.diagonal()
    miss_r, miss_v = receiver.to_range_velocity(span_tau, span_nu, cfg)
    for i in free:
        err_r[i] = miss_r**2
        err_v[i] = miss_v**2
    return err_r, err_v, len(free)


class _RmseSetup:
    def __init__(self, exp, cfg, spec):
        self.cfg = cfg
        self.window = scene_window(exp.scene)
        self.win = detection_preset(exp.scene, cfg)
        self.amb = ambiguity.closed_form(cfg, spec)
        self.x = synthesize_waveform(spec, cfg, rate=cfg.P * cfg.B)
        geom = self.win.geometry(cfg)
        self.geometry = geom
        self.plan = scene.noise_plan(self.x, cfg, geom)
        self.table = receiver.SelfAmbiguityTable(self.amb, self.win, cfg)


def rmse_run(exp: ExperimentConfig, cfg: SystemConfig, spec: FilterSpec):
    """RMSE curves for the requested receiver modes, keyed by mode name."""
    modes = ("basic", "iti") if exp.mode == "both" else (exp.mode,)
    setup = _RmseSetup(exp, cfg, spec)

    def work(task):
        s_idx, span = task
        n0 = scene.n0_from_snr(exp.snr_db[s_idx], setup.window.tau_min, cfg).N0
        out = {m: ([], [], 0) for m in modes}
        for t in range(*span):
            rng = trial_rng(exp.seed, s_idx + 1, t)
            targets = scene.draw_scene(setup.window, N_TARGETS, rng)
            grid = scene.synth_cross_amb(targets, setup.amb, setup.geometry)
            noise = scene.draw_noise_field(cfg, n0, setup.x, setup.geometry, rng, plan=setup.plan)
            grid = grid.with_values(grid.values + noise.values)
            for m in modes:
                peaks = receiver.run_receiver(grid, setup.table, N_TARGETS, m, cfg)
                er, ev, miss = match_estimates(peaks, targets, setup.win, cfg)
                r_list, v_list, misses = out[m]
                r_list.append(er)
                v_list.append(ev)
                out[m] = (r_list, v_list, misses + miss)
        return s_idx, out

    tasks = [(s, span) for s in range(len(exp.snr_db)) for span in _chunks(exp.n_trials, 16)]
    results = _pmap(work, tasks, exp.threads)
    curves = {}
    for m in modes:
        rr, rv, se, misses = [], [], [], []
        for s in range(len(exp.snr_db)):
            er = np.concatenate([np.concatenate(o[m][0]) for si, o in results if si == s])
            ev = np.concatenate([np.concatenate(o[m][1]) for si, o in results if si == s])
            rr.append(math.sqrt(er.mean()))
            rv.append(math.sqrt(ev.mean()))
            # standard error of the RMSE from that of the mean squared error
            se.append(er.std(ddof=1) / math.sqrt(er.size) / (2 * rr[-1]) if er.size > 1 and rr[-1] > 0 else 0.0)
            misses.append(sum(o[m][2] for si, o in results if si == s))
        curves[m] = RmseCurve(np.array(exp.snr_db), np.array(rr), np.array(rv), spec.kind.value, m,
                              np.array(se), np.array(misses))
    return curves


# ------------------------------------------------------ two-target sweep


TWO_TARGET_TAU1 = 0.25e-6


def default_separations():
    """64 separations from 0.25 to 16 delay bins."""
    return np.arange(1, 65) * 0.25


@dataclass
class SweepTable:
    filter: str
    sep_bins: np.ndarray
    err1_m: np.ndarray
    err2_m: np.ndarray

    @property
    def mean_err_m(self):
        return (self.err1_m + self.err2_m) / 2

    def to_csv(self):
        return _csv(["sep_bins", "err1_m", "err2_m"], zip(self.sep_bins, self.err1_m, self.err2_m))


def two_target_sweep(cfg: SystemConfig, specs, separations=None, snr_db=80.0, seed=0, mode="basic",
                     threads=1, n_trials=8):
    """Per-target range error against delay separation for two zero-Doppler targets.

    Target 1 sits at 0.25 us; target 2 trails it by ``sep`` delay bins.  Fades
    are the path-loss amplitudes (1e-7 / tau)^2, so target 2 is the weaker one,
    and the noise density gives target 1 the stated SNR.  Errors are averaged
    over ``n_trials`` noise draws per separation.
    """
    seps = default_separations() if separations is None else np.asarray(separations, dtype=float)
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    win = detection_preset("two_target", cfg)
    geom = win.geometry(cfg)
    tables = []
    for spec in specs:
        amb = ambiguity.closed_form(cfg, spec)
        x = synthesize_waveform(spec, cfg, rate=cfg.P * cfg.B)
        plan = scene.noise_plan(x, cfg, geom)
        table = receiver.SelfAmbiguityTable(amb, win, cfg)

        def work(i):
            tau2 = TWO_TARGET_TAU1 + seps[i] / cfg.B
            targets = [scene.Target(TWO_TARGET_TAU1, 0.0, (PATH_LOSS_REF / TWO_TARGET_TAU1) ** 2),
                       scene.Target(tau2, 0.0, (PATH_LOSS_REF / tau2) ** 2)]
            n0 = abs(targets[0].h) ** 2 / 10 ** (snr_db / 10)
            clean = scene.synth_cross_amb(targets, amb, geom)
            total = np.zeros(2)
            for t in range(n_trials):
                noise = scene.draw_noise_field(cfg, n0, x, geom, trial_rng(seed, t, i), plan=plan)
                peaks = receiver.run_receiver(clean.with_values(clean.values + noise.values), table, 2, mode, cfg)
                er, _, _ = match_estimates(peaks, targets, win, cfg)
                total += np.sqrt(er)
            return total / n_trials

        errs = np.array(_pmap(work, range(seps.size), threads))
        tables.append(SweepTable(spec.kind.value, seps, errs[:, 0], errs[:, 1]))
    return tables


def crossover(gauss: SweepTable, other: SweepTable):
    """Smallest separation from which the Gaussian mean error stays below the other's."""
    below = gauss.mean_err_m < other.mean_err_m
    for i in range(below.size):
        if below[i:].all():
            return float(gauss.sep_bins[i])
    return None


# ---------------------------------------------------------------- bench


@dataclass
class BenchEntry:
    filter: str
    grid_size: int
    closed_s: float
    oracle_s: float
    max_abs_dev: float
    direct_s: float | None = None

    @property
    def speedup(self):
        return self.oracle_s / self.closed_s

    @property
    def direct_speedup(self):
        return None if self.direct_s is None else self.oracle_s / self.direct_s

    def to_dict(self):
        return dict(self.__dict__, speedup=self.speedup, direct_speedup=self.direct_speedup)


BENCH_HEADER = ["filter", "grid_size", "closed_s", "oracle_s", "speedup", "max_abs_dev", "direct_s"]


def bench_csv(entries):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for e in entries:
        w.writerow([e.filter, e.grid_size, _fmt(e.closed_s), _fmt(e.oracle_s), _fmt(e.speedup),
                    _fmt(e.max_abs_dev), "" if e.direct_s is None else _fmt(e.direct_s)])
    return buf.getvalue()


def bench_run(cfg: SystemConfig, specs, grid_size=101):
    """Time closed-form and oracle fills of a grid over one delay-Doppler period.

    For the sinc filter the explicit pulse-pair double sum is timed as well.
    """
    taus = np.linspace(-cfg.tau_p / 2, cfg.tau_p / 2, grid_size)
    nus = np.linspace(-cfg.nu_p / 2, cfg.nu_p / 2, grid_size)
    entries = []
    for spec in specs:
        ev = ambiguity.closed_form(cfg, spec)
        t0 = time.perf_counter()
        closed = ev.grid(taus, nus)
        t1 = time.perf_counter()
        x = ambiguity.oracle_samples(spec, cfg)
        oracle = ambiguity.amb_oracle_grid(x, taus, nus)
        t2 = time.perf_counter()
        direct_s = None
        if spec.kind is FilterKind.SINC:
            tt, ff = np.meshgrid(taus, nus)
            t3 = time.perf_counter()
            ambiguity.amb_sinc_direct(cfg, tt, ff)
            direct_s = time.perf_counter() - t3
        entries.append(BenchEntry(spec.kind.value, grid_size, t1 - t0, t2 - t1,
                                  float(np.abs(closed - oracle).max()), direct_s))
    return entries
