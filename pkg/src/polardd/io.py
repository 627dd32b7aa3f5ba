"""CSV and JSON readers/writers for series, predictions and count records.

Floats are written with 17 significant digits so files round-trip exactly
and identical runs produce identical bytes.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .engine import DecaySeries
from .tomography import PROJECTORS, CountRecord

SERIES_COLUMNS = ["n", "purity", "fidelity", "px", "py", "pz", "method", "layout", "theta", "sigma_phi", "phi0"]
# extra columns needed to read a file back for fitting
SERIES_EXTRA = ["input", "in_px", "in_py", "in_pz", "unit"]
ANALYTIC_COLUMNS = ["n", "D_n", "gamma_n", "purity", "fidelity"] + [f"V{i}{j}" for i in range(3) for j in range(3)]
COUNT_COLUMNS = ["n_trip"] + list(PROJECTORS)
AMPLITUDE_COLUMNS = ["omega", "re_h", "im_h", "re_v", "im_v"]


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{x:.17g}"
    return str(x)


def _parse_float(s):
    return float("nan") if s in ("", "nan") else float(s)


def series_rows(series, label="", round_trip_ns=None):
    """Rows (dicts) of one DecaySeries; ``label`` names its input state."""
    p_in = series.input_bloch if series.input_bloch is not None else [float("nan")] * 3
    rtps = 1
    if series.unit == "step" and series.layout:
        from .cavity import Layout

        rtps = Layout(series.layout).round_trips_per_step
    for k, (n, pur, fid, b) in enumerate(series.records()):
        row = {
            "n": n, "purity": pur, "fidelity": fid, "px": b[0], "py": b[1], "pz": b[2],
            "method": series.method, "layout": series.layout, "theta": series.theta,
            "sigma_phi": series.sigma_phi, "phi0": series.phi0,
            "input": label, "in_px": p_in[0], "in_py": p_in[1], "in_pz": p_in[2], "unit": series.unit,
        }
        if round_trip_ns is not None:
            row["time_ns"] = n * rtps * round_trip_ns
        if series.purity_se is not None:
            row["purity_se"] = series.purity_se[k]
        if series.half_cycle is not None:
            row["half_cycle"] = bool(series.half_cycle[k])
        yield row


def write_rows(path, columns, rows, fmt_out="csv"):
    path = Path(path)
    rows = list(rows)
    if fmt_out == "json":
        payload = [{c: _json_value(r.get(c)) for c in columns if c in r} for r in rows]
        path.write_text(json.dumps(payload, indent=1) + "\n")
        return path
    if fmt_out != "csv":
        raise ValueError(f"unknown output format {fmt_out!r}")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])
    return path


def _json_value(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_series(path, labelled_series, round_trip_ns=None, fmt_out="csv"):
    """Write several (label, DecaySeries) pairs into one table."""
    rows = []
    for label, s in labelled_series:
        rows.extend(series_rows(s, label, round_trip_ns))
    cols = SERIES_COLUMNS + SERIES_EXTRA
    for extra in ("purity_se", "half_cycle", "time_ns"):
        if any(extra in r for r in rows):
            cols.append(extra)
    return write_rows(path, cols, rows, fmt_out)


def read_series(path):
    """Read a DecaySeries table back; returns {input label: DecaySeries}."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = set(SERIES_COLUMNS) - set(rows[0] if rows else {})
    if not rows or missing:
        raise ValueError(f"not a decay-series table (missing {sorted(missing)})")
    groups = {}
    for r in rows:
        groups.setdefault(r.get("input", "") or "series", []).append(r)
    out = {}
    for label, rs in groups.items():
        r0 = rs[0]
        p_in = None
        if r0.get("in_px", "") not in ("", "nan"):
            p_in = np.array([float(r0["in_px"]), float(r0["in_py"]), float(r0["in_pz"])])
        theta = None if r0["theta"] in ("", "nan") else float(r0["theta"])
        out[label] = DecaySeries(
            n=[int(r["n"]) for r in rs],
            purity=[float(r["purity"]) for r in rs],
            fidelity=[_parse_float(r["fidelity"]) for r in rs],
            bloch=[[float(r["px"]), float(r["py"]), float(r["pz"])] for r in rs],
            layout=r0["layout"], theta=theta, sigma_phi=_parse_float(r0["sigma_phi"]),
            phi0=_parse_float(r0["phi0"]), method=r0["method"], unit=r0.get("unit") or "step",
            input_bloch=p_in,
        )
    return out


def write_analytic(path, pred, fmt_out="csv"):
    rows = []
    for k, n in enumerate(pred.n):
        row = {"n": int(n), "D_n": pred.decoherence[k], "gamma_n": pred.gamma[k],
               "purity": pred.purity[k], "fidelity": pred.fidelity[k]}
        for i in range(3):
            for j in range(3):
                row[f"V{i}{j}"] = pred.v[k, i, j]
        rows.append(row)
    return write_rows(path, ANALYTIC_COLUMNS, rows, fmt_out)


def write_counts(path, records, fmt_out="csv"):
    rows = [dict(n_trip=r.n_trip, **r.counts) for r in records]
    return write_rows(path, COUNT_COLUMNS, rows, fmt_out)


def read_counts(path):
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(COUNT_COLUMNS) - set(reader.fieldnames):
            raise ValueError(f"count table needs columns {COUNT_COLUMNS}")
        return [CountRecord(int(r["n_trip"]), {k: int(float(r[k])) for k in PROJECTORS}) for r in reader]


def write_amplitudes(path, spec, fmt_out="csv"):
    rows = [{"omega": w, "re_h": a.real, "im_h": a.imag, "re_v": b.real, "im_v": b.imag}
            for w, a, b in zip(spec.omega, spec.alpha_h, spec.alpha_v)]
    return write_rows(path, AMPLITUDE_COLUMNS, rows, fmt_out)
