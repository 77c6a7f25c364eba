"""Small Monte Carlo runs: ROC, RMSE and the two-target sweep.

Trial counts here are tiny so the script finishes in about a minute; the
``zakradar`` command runs the same harnesses at full size and writes CSV
files with a manifest.
"""
# %%
import numpy as np

from zakradar import experiments
from zakradar.ddcore import make_config
from zakradar.experiments import ExperimentConfig
from zakradar.filters import FilterSpec

cfg = make_config()
filters = {"sinc": FilterSpec.sinc(), "gs": FilterSpec.gaussian_sinc(), "gauss": FilterSpec.gaussian()}

# %% ROC in the dense scene at -9 dB.
exp = ExperimentConfig(scene="dense", n_trials=500, snr_db=-9.0, seed=1)
for name, spec in filters.items():
    curve = experiments.roc_run(exp, cfg, spec)
    print(f"{name:>5}: P_D at P_F=0.01 is {curve.pd_at(0.01):.3f}, at P_F=0.1 is {curve.pd_at(0.1):.3f}")

# %% RMSE at two SNRs with the Gaussian filter, both receivers.
exp = ExperimentConfig(scene="dense", n_trials=20, snr_db=(-10.0, 0.0), seed=2)
for mode, curve in experiments.rmse_run(exp, cfg, filters["gauss"]).items():
    print(f"gauss/{mode}: range RMSE {np.round(curve.rmse_range_m, 1)} m at {curve.snr_db} dB")

# %% Two targets at growing separation.
seps = [1.0, 2.0, 4.0, 8.0, 12.0]
tables = experiments.two_target_sweep(cfg, [filters["gauss"], filters["gs"]], separations=seps, n_trials=1)
print("\nseparation (bins):", seps)
for t in tables:
    print(f"{t.filter:>5} weaker-target error (m):", np.round(t.err2_m, 1))
