"""Random radar scenes, their noiseless cross-ambiguity, and correlated noise.

Targets are drawn uniformly in a delay-Doppler window with complex-normal
fades whose power falls as the fourth power of delay.  Noise in the
cross-ambiguity domain is not white: its covariance is the self-ambiguity.
"""
# %%
import numpy as np

from zakradar import scene
from zakradar.ambiguity import closed_form
from zakradar.ddcore import make_config
from zakradar.experiments import detection_preset
from zakradar.filters import FilterSpec, synthesize_waveform

cfg = make_config()
spec = FilterSpec.gaussian_sinc()
amb = closed_form(cfg, spec)

# %% A sparse scene.
rng = np.random.default_rng(7)
targets = scene.draw_scene(scene.SPARSE, 4, rng)
for t in targets:
    print(f"tau={t.tau * 1e6:8.3f} us  nu={t.nu:8.1f} Hz  |h|^2={abs(t.h) ** 2:.3e}")
print("crystallization holds:", scene.crystallization_check(targets, cfg))

# %% Its cross-ambiguity on the detection window.
win = detection_preset("sparse", cfg)
grid = scene.synth_cross_amb(targets, amb, win.geometry(cfg))
l, k = np.unravel_index(np.argmax(np.abs(grid.values)), grid.values.shape)
print(f"\ngrid {grid.values.shape}, strongest cell at tau={grid.taus[k] * 1e6:.3f} us, nu={grid.nus[l]:.1f} Hz")

# %% Noise level for a stated SNR at the closest range.
model = scene.n0_from_snr(-9.0, scene.SPARSE.tau_min, cfg)
print(f"SNR {model.snr_db} dB -> N0 = {model.N0:.3e}")

# %% Noise covariance between neighbouring cells, predicted and sampled.
geom = {"tau0": 0.0, "nu0": 0.0, "dtau": cfg.dtau, "dnu": cfg.dnu, "n_tau": 2, "n_nu": 1}
x = synthesize_waveform(spec, cfg, rate=cfg.P * cfg.B)
fields = scene.draw_noise_fields(cfg, 1.0, x, geom, np.random.default_rng(1), 2000)[:, 0, :]
print(f"\nvariance: sampled {np.mean(np.abs(fields[:, 0]) ** 2):.3f}, predicted 1")
pred = scene.noise_cov((0.0, 0.0), (cfg.dtau, 0.0), 1.0, amb)
print(f"neighbour covariance: sampled {np.mean(fields[:, 0] * np.conj(fields[:, 1])):.3f}, predicted {pred:.3f}")
