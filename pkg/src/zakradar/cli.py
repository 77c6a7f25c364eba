"""Command-line entry point.

Every command writes its CSV/JSON results plus a single ``manifest.json`` into
the ``--out`` directory.  Configuration comes from an optional JSON file with
``system``, ``filter`` and ``experiment`` sections; flags override the file.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, ambiguity, experiments, receiver, scene
from .ddcore import _fmt, make_config
from .experiments import ExperimentConfig
from .filters import FilterSpec, synthesize_waveform

SYSTEM_FIELDS = {"B", "T", "tau_p", "P", "Q", "f_c"}
FILTER_FIELDS = {"name", "alpha_tau", "alpha_nu", "omega_tau", "omega_nu"}
EXPERIMENT_FIELDS = {"scene", "n_trials", "snr_db", "seed", "mode"}
MONTE_CARLO = {"scene", "detect", "roc", "rmse", "sweep"}


class ConfigError(ValueError):
    pass


def _check_fields(section, data, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}: unknown field (allowed: {', '.join(sorted(allowed))})")


def _number(section, key, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}")
    return kind(value)


def parse_config(path=None, overrides=None):
    """Build (SystemConfig, FilterSpec, ExperimentConfig) from a JSON file and flag overrides.

    ``overrides`` uses the same nested layout as the file; ``None`` values are ignored.
    """
    data = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p}: invalid JSON ({exc})") from None
    _check_fields("config", data, {"system", "filter", "experiment"})
    merged = {k: dict(data.get(k, {})) for k in ("system", "filter", "experiment")}
    for section, values in (overrides or {}).items():
        merged[section].update({k: v for k, v in values.items() if v is not None})

    sys_d, filt_d, exp_d = merged["system"], merged["filter"], merged["experiment"]
    _check_fields("system", sys_d, SYSTEM_FIELDS)
    _check_fields("filter", filt_d, FILTER_FIELDS)
    _check_fields("experiment", exp_d, EXPERIMENT_FIELDS)

    sys_kw = {k: _number("system", k, v, int if k in ("P", "Q") else float) for k, v in sys_d.items()}
    try:
        cfg = make_config(**sys_kw)
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None

    name = filt_d.get("name", "sinc")
    params = {k: _number("filter", k, v) for k, v in filt_d.items() if k != "name"}
    try:
        spec = FilterSpec.from_name(str(name), **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"filter: {exc}") from None

    exp_kw = dict(exp_d)
    if "n_trials" in exp_kw:
        exp_kw["n_trials"] = _number("experiment", "n_trials", exp_kw["n_trials"], int)
    if "seed" in exp_kw:
        exp_kw["seed"] = _number("experiment", "seed", exp_kw["seed"], int)
    if "mode" in exp_kw and exp_kw["mode"] not in ("basic", "iti", "both"):
        raise ConfigError(f"experiment.mode: expected basic, iti or both, got {exp_kw['mode']!r}")
    try:
        exp = ExperimentConfig(filter=spec.kind.value, **exp_kw)
    except ValueError as exc:
        raise ConfigError(f"experiment: {exc}") from None
    return cfg, spec, exp


def default_threads():
    env = os.environ.get("ZAKRADAR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ------------------------------------------------------------------ output


class Output:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = {}

    def write(self, name, text):
        if name == "manifest.json":
            raise ValueError("manifest.json is reserved")
        (self.dir / name).write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def manifest(self, command, config, seed, wall_s, summary=None):
        inputs = json.dumps({"command": command, "config": config, "seed": seed, "version": __version__},
                            sort_keys=True)
        doc = {
            "command": command,
            "config": config,
            "seed": seed,
            "version": __version__,
            "wall_time_s": wall_s,
            "content_hash": hashlib.sha1(f"blob {len(inputs)}\0{inputs}".encode()).hexdigest(),
            "outputs": self.files,
            "summary": summary or {},
        }
        (self.dir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _spec_dict(spec: FilterSpec):
    return {"kind": spec.kind.value, "alpha_tau": spec.alpha_tau, "alpha_nu": spec.alpha_nu,
            "omega_tau": spec.omega_tau, "omega_nu": spec.omega_nu}


def _all_specs(spec: FilterSpec, names):
    if not names:
        return [spec]
    return [FilterSpec.from_name(n) for n in names]


# ---------------------------------------------------------------- commands


def cmd_ambiguity(args, cfg, spec, exp, out):
    ev = ambiguity.closed_form(cfg, spec)
    window = (args.tau_lo * 1e-6 if args.tau_lo is not None else -8 / cfg.B,
              args.tau_hi * 1e-6 if args.tau_hi is not None else 8 / cfg.B,
              args.nu_lo if args.nu_lo is not None else -8 / cfg.T,
              args.nu_hi if args.nu_hi is not None else 8 / cfg.T)
    grid = ambiguity.amb_grid(ev, window, 1 / (args.density * cfg.B), 1 / (args.density * cfg.T))
    out.write("ambiguity.csv", grid.to_csv())
    out.write("heatmap.csv", ambiguity.heatmap_csv(grid))
    return {"window": window, "density": args.density}


def cmd_metrics(args, cfg, spec, exp, out):
    m = ambiguity.table_metrics(cfg, spec, args.cut_density, args.window_density)
    text = _json({"filter": spec.kind.value, **m.to_dict()})
    out.write("metrics.json", text)
    sys.stdout.write(text)
    return {"cut_density": args.cut_density, "window_density": args.window_density}


def cmd_validate(args, cfg, spec, exp, out):
    rep = ambiguity.validate_closed_vs_oracle(cfg, spec, args.points, args.tol, seed=exp.seed)
    text = _json(rep.to_dict())
    out.write("validate.json", text)
    sys.stdout.write(text)
    args.exit_status = 0 if rep.passed else 1
    return {"points": args.points, "tol": args.tol}


def cmd_waveform(args, cfg, spec, exp, out):
    rate = args.rate or cfg.P * cfg.B
    x = synthesize_waveform(spec, cfg, rate=rate)
    out.write("waveform.csv", x.to_csv())
    return {"rate": rate}


def _scene_targets(args, exp, cfg):
    if getattr(args, "scene_file", None):
        return scene.scene_from_json(Path(args.scene_file).read_text())
    window = experiments.scene_window(exp.scene)
    return scene.draw_scene(window, args.targets, np.random.default_rng(exp.seed))


def cmd_scene(args, cfg, spec, exp, out):
    targets = _scene_targets(args, exp, cfg)
    out.write("scene.json", scene.scene_to_json(targets) + "\n")
    rows = ["tau_s,nu_hz,h_re,h_im"]
    rows += [",".join(_fmt(v) for v in t.to_dict().values()) for t in targets]
    out.write("scene.csv", "\n".join(rows) + "\n")
    return {"targets": len(targets), "crystallized": scene.crystallization_check(targets, cfg)}


def cmd_detect(args, cfg, spec, exp, out):
    targets = _scene_targets(args, exp, cfg)
    window = experiments.scene_window(exp.scene)
    win = experiments.detection_preset(exp.scene, cfg)
    geom = win.geometry(cfg)
    amb = ambiguity.closed_form(cfg, spec)
    x = synthesize_waveform(spec, cfg, rate=cfg.P * cfg.B)
    n0 = scene.n0_from_snr(exp.snr_db[0], window.tau_min, cfg).N0
    rng = experiments.trial_rng(exp.seed, 0, 0)
    grid = scene.synth_cross_amb(targets, amb, geom)
    noise = scene.draw_noise_field(cfg, n0, x, geom, rng)
    grid = grid.with_values(grid.values + noise.values)
    table = receiver.SelfAmbiguityTable(amb, win, cfg)
    modes = ("basic", "iti") if exp.mode == "both" else (exp.mode,)
    for m in modes:
        peaks = receiver.run_receiver(grid, table, len(targets), m, cfg)
        out.write(f"estimates_{m}.csv", receiver.estimates_csv(peaks))
    out.write("cross_ambiguity.csv", grid.to_csv())
    out.write("scene.json", scene.scene_to_json(targets) + "\n")
    return {"N0": n0}


def cmd_roc(args, cfg, spec, exp, out):
    curve = experiments.roc_run(exp, cfg, spec)
    out.write("roc.csv", curve.to_csv())
    return {"pd_at": {str(p): curve.pd_at(p) for p in (1e-3, 1e-2, 1e-1)}}


def cmd_rmse(args, cfg, spec, exp, out):
    curves = experiments.rmse_run(exp, cfg, spec)
    for m, c in curves.items():
        out.write(f"rmse_{m}.csv", c.to_csv())
    return {"range_se_m": {m: c.range_se_m for m, c in curves.items()},
            "misses": {m: c.misses for m, c in curves.items()}}


def cmd_sweep(args, cfg, spec, exp, out):
    specs = _all_specs(spec, args.filters)
    snr = args.snr_db[0] if args.snr_db else 80.0
    mode = exp.mode if exp.mode != "both" else "basic"
    tables = experiments.two_target_sweep(cfg, specs, snr_db=snr, seed=exp.seed, mode=mode,
                                          threads=exp.threads, n_trials=args.sweep_trials)
    for t in tables:
        out.write(f"sweep_{t.filter}.csv", t.to_csv())
    gauss = next((t for t in tables if t.filter == "gauss"), None)
    cross = {}
    if gauss is not None:
        cross = {t.filter: experiments.crossover(gauss, t) for t in tables if t is not gauss}
    out.write("crossover.json", _json(cross))
    return {"snr_db": snr, "mode": mode, "noise_draws_per_separation": args.sweep_trials,
            "filters": [t.filter for t in tables]}


def cmd_bench(args, cfg, spec, exp, out):
    specs = _all_specs(spec, args.filters)
    entries = experiments.bench_run(cfg, specs, args.grid_size)
    out.write("bench.csv", experiments.bench_csv(entries))
    return {"grid_size": args.grid_size}


COMMANDS = {
    "ambiguity": (cmd_ambiguity, "sample the closed-form self-ambiguity on a grid"),
    "metrics": (cmd_metrics, "main-lobe width, PSLR and ISLR"),
    "validate": (cmd_validate, "compare closed form against the time-domain oracle"),
    "waveform": (cmd_waveform, "sample the probing waveform"),
    "scene": (cmd_scene, "draw a random radar scene"),
    "detect": (cmd_detect, "simulate one echo and run the receiver"),
    "roc": (cmd_roc, "ROC Monte Carlo"),
    "rmse": (cmd_rmse, "RMS range/velocity error against SNR"),
    "sweep": (cmd_sweep, "two-target separation sweep"),
    "bench": (cmd_bench, "closed-form versus oracle timing"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with system/filter/experiment sections")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--filter", help="sinc, gauss or gs")
    common.add_argument("--alpha-tau", type=float)
    common.add_argument("--alpha-nu", type=float)
    common.add_argument("--omega-tau", type=float)
    common.add_argument("--omega-nu", type=float)
    common.add_argument("--B", type=float, help="bandwidth, Hz")
    common.add_argument("--T", type=float, help="frame duration, s")
    common.add_argument("--tau-p", type=float, help="delay period, s")
    common.add_argument("--P", type=int, help="delay oversampling")
    common.add_argument("--Q", type=int, help="Doppler oversampling")
    common.add_argument("--fc", type=float, help="carrier frequency, Hz")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (default: $ZAKRADAR_THREADS or all cores)")
    common.add_argument("--scene", choices=["dense", "sparse"])
    common.add_argument("--trials", type=int)
    common.add_argument("--snr-db", type=float, nargs="+")
    common.add_argument("--mode", choices=["basic", "iti", "both"])

    parser = argparse.ArgumentParser(prog="zakradar", description="Zak-OTFS radar ambiguity and sensing tools")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {name: sub.add_parser(name, parents=[common], help=text) for name, (_, text) in COMMANDS.items()}

    a = subs["ambiguity"]
    a.add_argument("--tau-lo", type=float, help="us")
    a.add_argument("--tau-hi", type=float, help="us")
    a.add_argument("--nu-lo", type=float, help="Hz")
    a.add_argument("--nu-hi", type=float, help="Hz")
    a.add_argument("--density", type=int, default=4, help="samples per resolution bin")
    m = subs["metrics"]
    m.add_argument("--cut-density", type=int, default=100)
    m.add_argument("--window-density", type=int, default=2)
    v = subs["validate"]
    v.add_argument("--points", type=int, default=64)
    v.add_argument("--tol", type=float, default=1e-5)
    subs["waveform"].add_argument("--rate", type=float, help="sample rate, Hz (default P*B)")
    for name in ("scene", "detect"):
        subs[name].add_argument("--targets", type=int, default=experiments.N_TARGETS)
    subs["detect"].add_argument("--scene-file", help="scene JSON as written by the scene command")
    for name in ("sweep", "bench"):
        subs[name].add_argument("--filters", nargs="+", help="filters to include (default: all three)",
                                default=["sinc", "gs", "gauss"])
    subs["sweep"].add_argument("--sweep-trials", type=int, default=8, help="noise draws per separation")
    subs["bench"].add_argument("--grid-size", type=int, default=101)
    return parser


def _overrides(args):
    return {
        "system": {"B": args.B, "T": args.T, "tau_p": args.tau_p, "P": args.P, "Q": args.Q, "f_c": args.fc},
        "filter": {"name": args.filter, "alpha_tau": args.alpha_tau, "alpha_nu": args.alpha_nu,
                   "omega_tau": args.omega_tau, "omega_nu": args.omega_nu},
        "experiment": {"scene": args.scene, "n_trials": args.trials, "snr_db": args.snr_db,
                       "seed": args.seed, "mode": args.mode},
    }


_OVERRIDE_KEYS = {"B", "T", "tau_p", "P", "Q", "fc", "filter", "alpha_tau", "alpha_nu", "omega_tau",
                  "omega_nu", "scene", "trials", "snr_db", "seed", "mode"}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in MONTE_CARLO and args.seed is None:
        parser.error(f"--seed is required for the {args.command} command")
    try:
        cfg, spec, exp = parse_config(args.config, _overrides(args))
    except ConfigError as exc:
        parser.error(str(exc))
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        parser.error("--threads must be at least 1")
    exp = replace(exp, threads=threads)
    args.exit_status = 0
    out = Output(args.out)
    fn, _ = COMMANDS[args.command]
    t0 = time.perf_counter()
    extra = fn(args, cfg, spec, exp, out)
    wall = time.perf_counter() - t0
    exp_d = exp.to_dict()
    exp_d.pop("threads")  # results do not depend on the thread count
    options = {k: v for k, v in vars(args).items()
               if k not in ("config", "out", "threads", "exit_status", "command") and k not in _OVERRIDE_KEYS}
    config = {"system": cfg.to_dict(), "filter": _spec_dict(spec), "experiment": exp_d, "options": options}
    out.manifest(args.command, config, exp.seed, wall, json.loads(_json(extra)))
    return args.exit_status


if __name__ == "__main__":
    sys.exit(main())
