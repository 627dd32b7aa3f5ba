"""Command-line harness: named experiments, structured configs, run manifests.

Usage::

    polardd simulate --config run.yaml --out results/
    polardd simulate --preset fig5-bare --format json
    polardd sweep-theta --preset fig10-average
    polardd tomography --counts counts.csv
    polardd fit --series series.csv
    polardd analytic --preset fig10-average
    polardd presets list

Any manifest.json written by a run is itself a valid ``--config`` and
replays the run. Exit codes: 0 success, 2 configuration error, 3
numerical failure.
"""

import argparse
import copy
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analytic import expansion_coeffs, predict
from .cavity import CavityConfig, Layout
from .engine import EvolutionConfig, MonteCarlo, PhaseDistribution, Quadrature, evolve, sphere_average
from .fitting import fit_full, fit_sigma_phi
from .io import SERIES_COLUMNS, read_counts, read_series, write_analytic, write_counts, write_rows, write_series
from .jones import bloch_from_jones, density_from_bloch, fidelity_pure, jones_from_bloch, named_state
from .tomography import mle_reconstruct, simulate_counts

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ROUND_TRIP_NS = 6.80
GEOMETRIC_ROUND_TRIP_NS = 2.01 / 299_792_458 * 1e9

DEFAULTS = {
    "name": "run",
    "figure": None,
    "layout": "z-compensated",
    "theta": None,
    "thetas": None,
    "layouts": None,
    "sigma_phi": 0.0839,
    "phi0": -0.2182,
    "inputs": ["H", "D", "R"],
    "n_max": 40,
    "method": "quadrature",
    "samples": 100_000,
    "seed": 0,
    "quad_order": None,
    "average": False,
    "grid_size": 256,
    "per_round_trip": False,
    "time_column": False,
    "round_trip_ns": ROUND_TRIP_NS,
    "counts_per_basis": None,
    "count_noise": "poisson",
    "counts": None,
    "series": None,
    "fit_mode": "stokes",
    "likelihood": "poisson",
    "format": "csv",
}

PRESETS = {
    "fig5-bare": {
        "figure": "Fig. 5", "layout": "bare", "sigma_phi": 0.0839, "phi0": -0.2182,
        "inputs": ["H", "D", "R"], "n_max": 40,
    },
    "fig5-zcomp": {
        "figure": "Fig. 6", "layout": "z-compensated", "sigma_phi": 0.0839, "phi0": -0.2182,
        "inputs": ["H", "D", "R"], "n_max": 40,
    },
    "fig7-pauli": {
        "figure": "Fig. 7", "layout": "pauli-group", "sigma_phi": 0.0839, "phi0": -0.2182,
        "inputs": ["H", "D", "R"], "n_max": 20,
    },
    "fig8-carr-purcell": {
        "figure": "Fig. 8", "layout": "carr-purcell", "sigma_phi": 0.0839, "phi0": -0.2182,
        "inputs": ["H", "D", "R"], "n_max": 20,
    },
    "fig9-elliptical": {
        "figure": "Fig. 9", "layouts": ["generic-free", "generic-bb"], "sigma_phi": 0.0839, "phi0": 0.0,
        "thetas": [0.0, math.pi / 8, math.pi / 4, math.pi / 2], "inputs": ["E"], "n_max": 20,
        "average": False,
    },
    "fig10-average": {
        "figure": "Fig. 10", "layouts": ["generic-free", "generic-bb"], "sigma_phi": 0.0839, "phi0": 0.0,
        "thetas": [0.0, math.pi / 8, math.pi / 4, math.pi / 2], "inputs": ["H", "D", "R"], "n_max": 20,
        "average": True, "grid_size": 256,
    },
}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- config

def load_config(path=None, preset=None):
    cfg = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; try 'presets list'")
        cfg.update(copy.deepcopy(PRESETS[preset]))
        cfg["name"] = preset
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping of keys to values")
        # a run manifest carries the full resolved spec
        if "spec" in raw and "outputs" in raw:
            raw = raw["spec"]
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(raw)
    return cfg


def apply_overrides(cfg, args):
    for key in ("seed", "samples", "quad_order", "format", "counts", "series"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "samples", None) is not None:
        cfg["method"] = "montecarlo"
    return cfg


def _input_states(cfg):
    out = []
    for item in cfg["inputs"]:
        if isinstance(item, str):
            try:
                out.append((item, named_state(item)))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            vec = np.asarray(item, dtype=float)
            if vec.shape != (3,) or abs(np.linalg.norm(vec) - 1) > 1e-9:
                raise ConfigError(f"explicit input {item!r} must be a unit Bloch vector")
            label = "bloch(" + ",".join(f"{v:g}" for v in vec) + ")"
            out.append((label, jones_from_bloch(vec)))
    labels = [k for k, _ in out]
    if len(set(labels)) != len(labels):
        raise ConfigError("input states must be unique")
    return out


def _evolution(cfg):
    try:
        if cfg["method"] == "montecarlo":
            method = MonteCarlo(int(cfg["samples"]), int(cfg["seed"]))
        elif cfg["method"] == "quadrature":
            method = Quadrature(None if cfg["quad_order"] is None else int(cfg["quad_order"]))
        else:
            raise ConfigError(f"unknown method {cfg['method']!r}")
        return EvolutionConfig(int(cfg["n_max"]), method)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _dist(cfg):
    try:
        return PhaseDistribution(float(cfg["phi0"]), float(cfg["sigma_phi"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cavity(layout, theta):
    try:
        return CavityConfig(Layout(layout), theta)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- commands

def _time_ns(cfg):
    if not cfg["time_column"]:
        return None
    if cfg["round_trip_ns"] == "geometric":
        return GEOMETRIC_ROUND_TRIP_NS
    try:
        return float(cfg["round_trip_ns"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("round_trip_ns must be a number or 'geometric'") from exc


def _suffix(cfg):
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return cfg["format"]


def cmd_simulate(cfg, out):
    cav = _cavity(cfg["layout"], cfg["theta"])
    dist, evo = _dist(cfg), _evolution(cfg)
    ext = _suffix(cfg)
    if cfg["average"]:
        labelled = [("sphere", sphere_average(cav, dist, evo, int(cfg["grid_size"]), cfg["per_round_trip"]))]
    else:
        labelled = [(k, evolve(cav, dist, v, evo, cfg["per_round_trip"])) for k, v in _input_states(cfg)]
    _check_finite(labelled)
    files = [write_series(out / f"series.{ext}", labelled, _time_ns(cfg), ext)]
    if cfg["counts_per_basis"]:
        for idx, (label, s) in enumerate(labelled):
            recs = []
            for n, p in enumerate(s.bloch):
                # MC means can overshoot the sphere by sampling error
                norm = np.linalg.norm(p)
                rho = density_from_bloch(p / norm if norm > 1 else p)
                seed = [int(cfg["seed"]), idx, n] if cfg["count_noise"] == "poisson" else None
                recs.append(simulate_counts(rho, int(cfg["counts_per_basis"]), seed, cfg["count_noise"], n))
            files.append(write_counts(out / f"counts_{label}.{ext}", recs, ext))
    return files


def cmd_sweep_theta(cfg, out):
    thetas = cfg["thetas"] if cfg["thetas"] is not None else [cfg["theta"]]
    layouts = cfg["layouts"] or [cfg["layout"]]
    dist, evo = _dist(cfg), _evolution(cfg)
    ext = _suffix(cfg)
    labelled = []
    for layout in layouts:
        for theta in thetas:
            cav = _cavity(layout, None if theta is None else float(theta))
            tag = f"{layout}@{float(theta):.6f}" if theta is not None else layout
            if cfg["average"]:
                labelled.append((tag, sphere_average(cav, dist, evo, int(cfg["grid_size"]), cfg["per_round_trip"])))
            else:
                for k, v in _input_states(cfg):
                    labelled.append((f"{tag}:{k}", evolve(cav, dist, v, evo, cfg["per_round_trip"])))
    _check_finite(labelled)
    return [write_series(out / f"sweep.{ext}", labelled, _time_ns(cfg), ext)]


def cmd_analytic(cfg, out):
    layouts = cfg["layouts"] or [cfg["layout"]]
    thetas = cfg["thetas"] if cfg["thetas"] is not None else [cfg["theta"]]
    dist, evo = _dist(cfg), _evolution(cfg)
    ext = _suffix(cfg)
    files, numeric = [], []
    for layout in layouts:
        for theta in thetas:
            cav = _cavity(layout, None if theta is None else float(theta))
            if not cav.layout.is_generic:
                raise ConfigError("the analytic model covers the generic-noise layouts only")
            coeffs = expansion_coeffs(cav, dist.phi0)
            for k, v in _input_states(cfg):
                p_in = bloch_from_jones(v)
                pred = predict(coeffs, dist.sigma_phi, p_in, evo.n_max)
                tag = f"{layout}_{float(theta):.6f}_{k}"
                files.append(write_analytic(out / f"analytic_{tag}.{ext}", pred, ext))
                numeric.append((f"{layout}@{float(theta):.6f}:{k}", evolve(cav, dist, v, evo)))
    _check_finite(numeric)
    files.append(write_series(out / f"numeric.{ext}", numeric, _time_ns(cfg), ext))
    return files


def cmd_tomography(cfg, out):
    if not cfg["counts"]:
        raise ConfigError("tomography needs a count table (--counts PATH or 'counts' key)")
    try:
        records = read_counts(cfg["counts"])
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read counts: {exc}") from exc
    ext = _suffix(cfg)
    reference = None
    if cfg["inputs"] and len(cfg["inputs"]) == 1:
        reference = _input_states(cfg)[0][1]
    rows = []
    for rec in records:
        try:
            res = mle_reconstruct(rec, cfg["likelihood"])
        except ValueError as exc:
            raise NumericalFailure(f"record n_trip={rec.n_trip}: {exc}") from exc
        p = res.bloch
        fid = fidelity_pure(res.rho, reference) if reference is not None else float("nan")
        rows.append({"n": rec.n_trip, "purity": float(np.real(np.trace(res.rho @ res.rho))), "fidelity": fid,
                     "px": p[0], "py": p[1], "pz": p[2], "method": f"mle-{cfg['likelihood']}",
                     "layout": "", "theta": None, "sigma_phi": float("nan"), "phi0": float("nan"),
                     "loglik": res.loglik, "iterations": res.iterations, "converged": res.converged})
    cols = SERIES_COLUMNS + ["loglik", "iterations", "converged"]
    return [write_rows(out / f"reconstructed.{ext}", cols, rows, ext)]


def cmd_fit(cfg, out):
    if not cfg["series"]:
        raise ConfigError("fit needs a series table (--series PATH or 'series' key)")
    try:
        series = read_series(cfg["series"])
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read series: {exc}") from exc
    try:
        if cfg["fit_mode"] == "purity":
            result = fit_sigma_phi(next(iter(series.values())))
        elif cfg["fit_mode"] == "stokes":
            result = fit_full(series, quad_order=int(cfg["quad_order"] or 256))
        else:
            raise ConfigError(f"unknown fit_mode {cfg['fit_mode']!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise NumericalFailure(str(exc)) from exc
    if not result.converged:
        raise NumericalFailure("fit did not converge")
    path = out / "fit.txt"
    path.write_text(result.report())
    return [path]


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-theta": cmd_sweep_theta,
    "analytic": cmd_analytic,
    "tomography": cmd_tomography,
    "fit": cmd_fit,
}


def _check_finite(labelled):
    for label, s in labelled:
        if not (np.all(np.isfinite(s.purity)) and np.all(np.isfinite(s.bloch))):
            raise NumericalFailure(f"non-finite values in series {label!r}")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions():
    import scipy
    import sklearn

    return {"polardd": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-learn": sklearn.__version__, "pyyaml": yaml.__version__}


def run(command, cfg, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files = COMMANDS[command](cfg, out)
    wall = time.perf_counter() - start
    manifest = {
        "name": cfg["name"],
        "figure": cfg["figure"],
        "command": command,
        "spec": cfg,
        "seed": cfg["seed"],
        "versions": _versions(),
        "wall_time_s": wall,
        "outputs": {Path(f).name: _sha256(f) for f in files},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def build_parser():
    parser = argparse.ArgumentParser(prog="polardd", description="Polarization decoherence simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML config or a previous manifest.json")
        p.add_argument("--preset", help="builtin experiment name")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int, help="Monte-Carlo samples (switches to Monte Carlo)")
        p.add_argument("--quad-order", type=int, dest="quad_order")
        p.add_argument("--out", type=Path, default=Path("."))
        p.add_argument("--format", choices=("csv", "json"))
        if name == "tomography":
            p.add_argument("--counts", type=str)
        if name == "fit":
            p.add_argument("--series", type=str)
    presets = sub.add_parser("presets")
    presets.add_argument("action", choices=("list",))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "presets":
        for name, spec in PRESETS.items():
            print(f"{name}\t{spec['figure']}")
        return EXIT_OK
    try:
        cfg = apply_overrides(load_config(args.config, args.preset), args)
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        manifest = run(args.command, cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in manifest["outputs"]:
        print(Path(args.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
