"""Point-target radar scenes, their noiseless cross-ambiguity, and noise.

Fades follow a fourth-power path loss, E|h|^2 = (1e-7 / tau)^4, and the SNR
is quoted for a target at the minimum scene delay.  Noise in the
cross-ambiguity domain is produced two ways: jointly at a handful of points
from its exact covariance, or as a whole field by correlating sampled white
noise with the probe.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .ddcore import CorrelationPlan, DDGrid, SystemConfig, TimeSamples

PATH_LOSS_REF = 1e-7


@dataclass(frozen=True)
class Target:
    tau: float
    nu: float
    h: complex = 1.0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("target delay must be non-negative")

    def to_dict(self):
        h = complex(self.h)
        return {"tau_s": self.tau, "nu_hz": self.nu, "h_re": h.real, "h_im": h.imag}


@dataclass(frozen=True)
class SceneWindow:
    tau_min: float
    tau_max: float
    nu_min: float
    nu_max: float

    def __post_init__(self):
        if not (self.tau_min < self.tau_max and self.nu_min < self.nu_max):
            raise ValueError("scene window bounds must be increasing")


DENSE = SceneWindow(200e-6, 201e-6, -200.0, 200.0)
SPARSE = SceneWindow(200e-6, 205e-6, -1000.0, 1000.0)


@dataclass(frozen=True)
class NoiseModel:
    snr_db: float
    N0: float


def fade_variance(tau):
    return (PATH_LOSS_REF / np.asarray(tau, dtype=float)) ** 4


def draw_scene(window: SceneWindow, count: int, rng):
    """Targets uniform in the window with complex-normal path-loss fades."""
    if count < 1:
        raise ValueError("a scene needs at least one target")
    taus = rng.uniform(window.tau_min, window.tau_max, count)
    nus = rng.uniform(window.nu_min, window.nu_max, count)
    z = rng.standard_normal((count, 2))
    h = np.sqrt(fade_variance(taus) / 2) * (z[:, 0] + 1j * z[:, 1])
    return [Target(float(t), float(f), complex(a)) for t, f, a in zip(taus, nus, h)]


def n0_from_snr(snr_db, tau_min, cfg: SystemConfig) -> NoiseModel:
    """Noise density giving ``snr_db`` for a target at ``tau_min``."""
    n0 = fade_variance(tau_min) * cfg.E_p / (cfg.B * cfg.T * 10 ** (snr_db / 10))
    return NoiseModel(float(snr_db), float(n0))


def crystallization_check(targets, cfg: SystemConfig):
    """True when the scene's delay and Doppler spreads fit inside one period."""
    taus = [t.tau for t in targets]
    nus = [t.nu for t in targets]
    return (max(taus) - min(taus) < cfg.tau_p) and (max(nus) - min(nus) < cfg.nu_p)


def cross_amb_at(targets, amb_eval, tau, nu):
    """Noiseless cross-ambiguity at arbitrary points."""
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    out = np.zeros(tau.shape, dtype=complex)
    for t in targets:
        out += t.h * amb_eval(tau - t.tau, nu - t.nu) * np.exp(2j * np.pi * t.nu * (tau - t.tau))
    return out


def _axes(geometry):
    if isinstance(geometry, DDGrid):
        return geometry.taus, geometry.nus, geometry.dtau, geometry.dnu
    g = geometry
    taus = g["tau0"] + g["dtau"] * np.arange(g["n_tau"])
    nus = g["nu0"] + g["dnu"] * np.arange(g["n_nu"])
    return taus, nus, g["dtau"], g["dnu"]


def synth_cross_amb(targets, amb_eval, geometry) -> DDGrid:
    """Sum of shifted, phase-rotated self-ambiguities sampled on a grid."""
    taus, nus, dtau, dnu = _axes(geometry)
    values = np.zeros((nus.size, taus.size), dtype=complex)
    for t in targets:
        if hasattr(amb_eval, "grid"):
            a = amb_eval.grid(taus - t.tau, nus - t.nu)
        else:
            tt, ff = np.meshgrid(taus - t.tau, nus - t.nu)
            a = amb_eval(tt, ff)
        values += t.h * a * np.exp(2j * np.pi * t.nu * (taus - t.tau))[None, :]
    return DDGrid(taus[0], nus[0], dtau, dnu, values)


def noise_cov(p1, p2, N0, amb_eval):
    """E[A_n(p1) A_n(p2)^*] for white noise of density N0 at points (tau, nu)."""
    (t1, f1), (t2, f2) = p1, p2
    return N0 * np.exp(-2j * np.pi * f2 * (t2 - t1)) * amb_eval(t1 - t2, f1 - f2)


def noise_cov_matrix(points, N0, amb_eval):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    t, f = pts[:, 0], pts[:, 1]
    dt = t[:, None] - t[None, :]
    df = f[:, None] - f[None, :]
    return N0 * np.exp(2j * np.pi * f[None, :] * dt) * amb_eval(dt, df)


def draw_noise_points(points, N0, amb_eval, rng):
    """One joint draw of cross-ambiguity noise at the given points.

    Repeated points receive identical values; the covariance of the distinct
    points is factorised with a 1e-12 N0 diagonal load.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    z = rng.standard_normal((uniq.shape[0], 2))
    if N0 == 0:
        return np.zeros(pts.shape[0], dtype=complex)
    cov = noise_cov_matrix(uniq, N0, amb_eval)
    cov = (cov + cov.conj().T) / 2 + 1e-12 * N0 * np.eye(uniq.shape[0])
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("noise covariance is not positive definite after loading") from exc
    w = (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2)
    return (chol @ w)[inverse]


def noise_plan(x: TimeSamples, cfg: SystemConfig, geometry) -> CorrelationPlan:
    """Correlation plan for fields on ``geometry`` (delay step must be 1/rate)."""
    taus, nus, dtau, dnu = _axes(geometry)
    if abs(dtau * x.rate - 1) > 1e-9:
        raise ValueError("field delay step must equal the probe sample period")
    if abs(dnu * cfg.Q * cfg.T - 1) > 1e-9:
        raise ValueError("field Doppler step must be 1/(Q T)")
    k0 = int(round(taus[0] * x.rate))
    l0 = int(round(nus[0] * cfg.Q * cfg.T))
    return CorrelationPlan(x, cfg, (k0, k0 + taus.size - 1), (l0, l0 + nus.size - 1))


def _noise_blocks(plan: CorrelationPlan, scale, rng, count=None):
    lead = () if count is None else (count,)
    if plan.block <= plan.L:
        z = rng.standard_normal(lead + (plan.n_per, plan.block, 2))
        return scale * (z[..., 0] + 1j * z[..., 1])
    start = plan.block_starts[0]
    length = plan.block_starts[-1] + plan.block - start
    z = rng.standard_normal(lead + (length, 2))
    stream = scale * (z[..., 0] + 1j * z[..., 1])
    idx = (plan.block_starts - start)[:, None] + np.arange(plan.block)[None, :]
    return stream[..., idx]


def draw_noise_field(cfg: SystemConfig, N0, x: TimeSamples, geometry, rng, plan=None) -> DDGrid:
    """Cross-ambiguity of sampled white noise (variance N0 * rate) with the probe.

    Only noise samples that meet the probe are drawn.  When the per-period
    blocks do not overlap they are drawn directly; otherwise one contiguous
    stream is drawn and sliced so overlapping blocks share samples.
    """
    plan = plan or noise_plan(x, cfg, geometry)
    return plan.apply(_noise_blocks(plan, math.sqrt(N0 * x.rate / 2), rng))


def draw_noise_fields(cfg: SystemConfig, N0, x: TimeSamples, geometry, rng, count, plan=None, batch=8):
    """``count`` independent fields as an array (count, n_nu, n_tau).

    Consumes the generator exactly as ``count`` successive calls to
    :func:`draw_noise_field` would, so both give the same fields.
    """
    plan = plan or noise_plan(x, cfg, geometry)
    scale = math.sqrt(N0 * x.rate / 2)
    out = np.empty((count, plan.ls.size, plan.ks.size), dtype=complex)
    for lo in range(0, count, batch):
        n = min(batch, count - lo)
        out[lo:lo + n] = plan.apply_values(_noise_blocks(plan, scale, rng, n))
    return out


def scene_to_json(targets):
    return json.dumps([t.to_dict() for t in targets], indent=2)


def scene_from_json(text):
    return [Target(d["tau_s"], d["nu_hz"], complex(d["h_re"], d["h_im"])) for d in json.loads(text)]
