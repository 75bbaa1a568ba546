"""Command-line front end: plot-ready sweeps and link simulations as CSV/JSON tables.

Commands::

    capacity      capacity and PIE versus n_a (heterodyne, homodyne, Holevo)
    ppm-optimize  optimal PPM order and PIE lower bound versus n_a
    filter        matched-filter power transfer theta_n(dt) and efficiency/selectivity
    simulate      Monte Carlo link simulation for one modulation format
    equivalence   PPM / FSK / BPSK-Hadamard simulated side by side

Options may also come from ``--config FILE``: one ``key = value`` per line,
keys being long option names (``nb = 1e-3``, ``na-grid = 1e-7:1e-3:9``).
Command-line flags override the file, which overrides built-in defaults.
Without ``--out`` the table goes to ``$PHOTONSTARVED_OUTPUT_DIR/<command>.<format>``
(current directory when the variable is unset).

Exit codes: 0 success, 2 usage, 3 malformed grid, 4 unsupported Hadamard
order, 5 unwritable output, 6 numerical/domain error, 7 bad config file.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import modes
from . import modulation as mod
from . import ppm
from .errors import ConvergenceError, DivergentLimitError, DomainError, UnsupportedOrderError
from .photodetection import DetectorKind
from .rng import RandomStream

OUTPUT_DIR_ENV = "PHOTONSTARVED_OUTPUT_DIR"

EXIT_CODES = {
    "usage": 2,
    "grid": 3,
    "hadamard-order": 4,
    "output": 5,
    "numeric": 6,
    "config": 7,
}

CSV_HEADERS = {
    "capacity": ["scheme", "n_a", "n_b", "bits_per_slot", "pie", "pie_asymptote"],
    "ppm-optimize": ["n_a", "n_b", "detector", "M", "seed", "pulse_energy", "pie_lb",
                     "holevo_pie", "pie_ratio", "mi", "mi_stderr"],
    "simulate": ["format", "M", "n_a", "n_b", "detector", "seed", "shards", "frames", "errors",
                 "fer", "fer_low", "fer_high", "mi", "mi_stderr"],
    "equivalence": ["format", "M", "n_a", "n_b", "detector", "seed", "shards", "frames", "errors",
                    "fer", "fer_low", "fer_high", "mi", "mi_stderr", "mi_z_max", "fer_z_max", "passed"],
}


class CliError(Exception):
    def __init__(self, category, message):
        super().__init__(message)
        self.category = category


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


# --- value parsers ---------------------------------------------------------

def parse_log_grid(text: str) -> list[float]:
    """``start:stop:points`` log-spaced (inclusive), or a single positive value."""
    try:
        parts = text.split(":")
        if len(parts) == 1:
            values = [float(parts[0])]
        elif len(parts) == 3:
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
            if points < 1 or start <= 0.0 or stop <= 0.0:
                raise ValueError
            if points == 1:
                if start != stop:
                    raise ValueError
                values = [start]
            else:
                if stop <= start:
                    raise ValueError
                values = [float(v) for v in np.logspace(math.log10(start), math.log10(stop), points)]
        else:
            raise ValueError
    except ValueError:
        raise CliError("grid", f"malformed log grid {text!r} (want start:stop:points, start<stop, positive)") from None
    if any(not (v > 0.0) or not math.isfinite(v) for v in values):
        raise CliError("grid", f"grid values must be positive: {text!r}")
    return values


def parse_linear_grid(text: str) -> list[float]:
    """``start:stop:points`` linearly spaced (inclusive), or a single non-negative value."""
    try:
        parts = text.split(":")
        if len(parts) == 1:
            values = [float(parts[0])]
        elif len(parts) == 3:
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
            if points < 1 or start < 0.0 or (points > 1 and stop <= start):
                raise ValueError
            values = [float(v) for v in np.linspace(start, stop, points)]
        else:
            raise ValueError
    except ValueError:
        raise CliError("grid", f"malformed window grid {text!r} (want start:stop:points)") from None
    if any(v < 0.0 or not math.isfinite(v) for v in values):
        raise CliError("grid", f"windows must be non-negative: {text!r}")
    return values


def parse_float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError("grid", f"malformed number list {text!r}") from None
    if not values or any(v < 0.0 or not math.isfinite(v) for v in values):
        raise CliError("grid", f"need a non-empty list of non-negative numbers, got {text!r}")
    return values


def parse_int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError("grid", f"malformed integer list {text!r}") from None
    if not values:
        raise CliError("grid", "empty integer list")
    return values


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise CliError("usage", f"expected an integer, got {text!r}") from None
    if v < 1:
        raise CliError("usage", f"expected a positive integer, got {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise CliError("usage", f"expected an integer, got {text!r}") from None
    if v < 0:
        raise CliError("usage", f"expected a non-negative integer, got {text!r}")
    return v


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise CliError("usage", f"expected a number, got {text!r}") from None


# --- option table ------------------------------------------------------------
# (dest, flag, converter, default, help); defaults here are the lowest-precedence layer

_COMMON = [
    ("out", "--out", str, None, "output file (default: $PHOTONSTARVED_OUTPUT_DIR/<command>.<format>)"),
    ("format", "--format", str, None, "csv or json (default: from --out suffix, else csv)"),
]

OPTIONS = {
    "capacity": [
        ("scheme", "--scheme", str, "holevo", "heterodyne, homodyne, holevo or all"),
        ("na", "--na", parse_log_grid, "1e-6:1:61", "n_a value or log grid start:stop:points"),
        ("nb", "--nb", parse_float_list, "1e-5,1e-4,1e-3,1e-2", "comma-separated n_b values"),
    ],
    "ppm-optimize": [
        ("na_grid", "--na-grid", parse_log_grid, "1e-7:1e-1:25", "n_a log grid start:stop:points"),
        ("nb", "--nb", parse_float_list, "1e-5,1e-4,1e-3,1e-2", "comma-separated n_b values"),
        ("detector", "--detector", str, "pnr", "pnr, geiger or both"),
        ("orders", "--orders", parse_int_list, None, "comma-separated PPM orders (default 2..2^24)"),
        ("mi_frames", "--mi-frames", _nonneg_int, "0", "frames for the MI column (0 = skip; Geiger is exact)"),
        ("seed", "--seed", _nonneg_int, None, "RNG seed (needed when --mi-frames > 0)"),
    ],
    "filter": [
        ("windows", "--windows", parse_linear_grid, "0:8:101", "detection windows start:stop:points (linear)"),
        ("modes", "--modes", _nonneg_int, "8", "highest mode index tabulated"),
        ("grid_points", "--grid-points", _positive_int, "4096", "time grid points"),
        ("half_width", "--half-width", _float, "20", "time grid half-width"),
    ],
    "simulate": [
        ("modulation", "--modulation", str, "ppm", "ppm, fsk or hadamard"),
        ("order", "--M", _positive_int, "16", "modulation order"),
        ("na", "--na", _float, "0.01", "signal photons per slot"),
        ("nb", "--nb", _float, "1e-3", "background photons per slot"),
        ("detector", "--detector", str, "pnr", "pnr or geiger"),
        ("frames", "--frames", _positive_int, "100000", "number of frames"),
        ("seed", "--seed", _nonneg_int, None, "RNG seed (required)"),
        ("shards", "--shards", _positive_int, str(ppm.DEFAULT_SHARDS), "fixed shard count (part of the seed layout)"),
        ("workers", "--workers", _positive_int, "1", "worker threads (does not change results)"),
    ],
    "equivalence": [
        ("order", "--M", _positive_int, "8", "modulation order (power of two)"),
        ("na", "--na", _float, "0.05", "signal photons per slot"),
        ("nb", "--nb", _float, "1e-3", "background photons per slot"),
        ("detector", "--detector", str, "pnr", "pnr or geiger"),
        ("frames", "--frames", _positive_int, "100000", "frames per format"),
        ("seed", "--seed", _nonneg_int, None, "RNG seed (required)"),
        ("shards", "--shards", _positive_int, str(ppm.DEFAULT_SHARDS), "fixed shard count"),
        ("workers", "--workers", _positive_int, "1", "worker threads"),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="photonstarved", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command, options in OPTIONS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value config file")
        for dest, flag, _, default, help_text in _COMMON + options:
            # raw strings; converted after merging with the config file
            p.add_argument(flag, dest=dest, default=argparse.SUPPRESS,
                           help=f"{help_text} [default: {default}]" if default is not None else help_text)
    return parser


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments, blank lines ignored)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("config", f"cannot read config file {path}: {exc.strerror}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("config", f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_").lower()] = value
    return values


def resolve_options(command: str, cli_values: dict) -> dict:
    """Merge defaults < config file < flags, then convert every value."""
    options = _COMMON + OPTIONS[command]
    known = {dest for dest, *_ in options}
    aliases = {flag.lstrip("-").replace("-", "_").lower(): dest for dest, flag, *_ in options}
    merged = {dest: default for dest, _, _, default, _ in options}
    if "config" in cli_values:
        for key, value in read_config(cli_values["config"]).items():
            dest = aliases.get(key, key)
            if dest not in known:
                raise CliError("config", f"unknown config key {key!r} for command {command}")
            merged[dest] = value
    for dest, value in cli_values.items():
        if dest in known:
            merged[dest] = value
    converted = {}
    for dest, _, conv, _, _ in options:
        value = merged[dest]
        converted[dest] = None if value is None else conv(value)
    return converted


# --- commands ------------------------------------------------------------------

def _num(x):
    """Round to 12 significant digits (shared by CSV and JSON so they agree exactly)."""
    if isinstance(x, bool) or x is None or isinstance(x, (int, np.integer, str)):
        return x.item() if isinstance(x, np.integer) else x
    x = float(x)
    if not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def _detectors(text):
    if text == "both":
        return [DetectorKind.PNR, DetectorKind.GEIGER]
    try:
        return [DetectorKind(text)]
    except ValueError:
        raise CliError("usage", f"unknown detector {text!r}") from None


def run_capacity(opts):
    schemes = list(cap.Scheme) if opts["scheme"] == "all" else [opts["scheme"]]
    rows = []
    for scheme in schemes:
        try:
            scheme = cap.Scheme(scheme)
        except ValueError:
            raise CliError("usage", f"unknown scheme {scheme!r}") from None
        for r in cap.capacity_sweep(scheme, opts["na"], opts["nb"]):
            try:
                r["pie_asymptote"] = cap.pie_asymptote(scheme, r["n_b"])
            except DivergentLimitError:
                r["pie_asymptote"] = math.inf
            rows.append(r)
    return rows, f"capacity: {len(rows)} rows"


def run_ppm_optimize(opts):
    if opts["mi_frames"] and opts["seed"] is None:
        raise CliError("usage", "--seed is required when --mi-frames > 0")
    grid = opts["na_grid"]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise CliError("grid", "n_a grid must be strictly increasing")
    rows = []
    for detector in _detectors(opts["detector"]):
        for n_b in opts["nb"]:
            stream = RandomStream(opts["seed"]) if opts["seed"] is not None else None
            for n_a in grid:
                design = ppm.optimize_order(
                    n_a, n_b, detector, opts["orders"], mi_frames=opts["mi_frames"],
                    rng_stream=None if stream is None else stream.child(f"{detector.value}:{n_b!r}:{n_a!r}"),
                )
                hol = cap.cap_holevo(cap.LinkParams(n_a, n_b)).pie
                rows.append({
                    "n_a": n_a, "n_b": n_b, "detector": detector.value, "M": design.M,
                    "seed": opts["seed"], "pulse_energy": design.pulse_energy,
                    "pie_lb": design.pie_lower_bound, "holevo_pie": hol,
                    "pie_ratio": design.pie_lower_bound / hol, "mi": design.mi, "mi_stderr": design.mi_stderr,
                })
    return rows, f"ppm-optimize: {len(rows)} designs"


def run_filter(opts):
    grid = modes.TimeGrid(opts["grid_points"], opts["half_width"])
    windows = opts["windows"]
    n_max = opts["modes"]
    prof = modes.transfer_profile(n_max + 1, windows, grid)
    complete = modes.tradeoff_curve(windows, grid=grid, mode_sum="complete")
    truncated_total = prof.theta.sum(axis=0)
    rows = []
    for j, dt in enumerate(windows):
        row = {"window": dt}
        for n in range(n_max + 1):
            row[f"theta_{n}"] = prof.theta[n, j]
        eff, sel = complete[j]
        row["efficiency"] = eff
        row["selectivity"] = sel
        row["selectivity_modes"] = prof.theta[0, j] / truncated_total[j] if truncated_total[j] > 0 else 1.0
        rows.append(row)
    return rows, f"filter: {len(rows)} windows, modes 0..{n_max}"


def _check_modulation(name):
    try:
        return mod.Format(name)
    except ValueError:
        raise CliError("usage", f"unknown modulation {name!r}") from None


def run_simulate(opts):
    if opts["seed"] is None:
        raise CliError("usage", "--seed is required for simulate")
    fmt = _check_modulation(opts["modulation"])
    detector = _detectors(opts["detector"])
    if len(detector) != 1:
        raise CliError("usage", "simulate takes a single detector")
    report = mod.simulate_link(fmt, opts["order"], opts["na"], opts["nb"], detector[0], opts["frames"],
                               RandomStream(opts["seed"]), opts["shards"], opts["workers"])
    return [report.to_dict()], (f"simulate: {fmt.value} M={report.M} FER={report.fer:.4g} "
                                f"MI={report.mi:.6g}+-{report.mi_stderr:.2g} bits/frame")


def run_equivalence(opts):
    if opts["seed"] is None:
        raise CliError("usage", "--seed is required for equivalence")
    detector = _detectors(opts["detector"])
    if len(detector) != 1:
        raise CliError("usage", "equivalence takes a single detector")
    rep = mod.format_equivalence_check(opts["order"], opts["na"], opts["nb"], detector[0], opts["frames"],
                                       opts["seed"], opts["shards"], opts["workers"])
    rows = []
    for name, r in rep.reports.items():
        row = r.to_dict()
        row["mi_z_max"] = max(z for k, z in rep.mi_z.items() if name in k.split("-"))
        row["fer_z_max"] = max(z for k, z in rep.fer_z.items() if name in k.split("-"))
        row["passed"] = rep.passed
        rows.append(row)
    status = "agree" if rep.passed else "DISAGREE"
    return rows, f"equivalence: formats {status} (max MI z = {max(rep.mi_z.values()):.3g})"


COMMANDS = {
    "capacity": run_capacity,
    "ppm-optimize": run_ppm_optimize,
    "filter": run_filter,
    "simulate": run_simulate,
    "equivalence": run_equivalence,
}


# --- output ---------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def render_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def render_json(rows, header) -> str:
    payload = [{k: _json_value(row.get(k)) for k in header} for row in rows]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _output_path(command, opts):
    fmt = opts["format"]
    if opts["out"]:
        path = Path(opts["out"])
        if fmt is None:
            fmt = "json" if path.suffix.lower() == ".json" else "csv"
    else:
        fmt = fmt or "csv"
        path = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"{command}.{fmt}"
    if fmt not in ("csv", "json"):
        raise CliError("usage", f"unknown output format {fmt!r}")
    return path, fmt


def _write(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError("output", f"cannot write {path}: {exc.strerror}") from None


def run(argv=None) -> int:
    """Entry point returning the exit status; errors go to stderr as ``error[category]: message``."""
    try:
        ns = build_parser().parse_args(argv)
        cli_values = {k: v for k, v in vars(ns).items() if k != "command"}
        opts = resolve_options(ns.command, cli_values)
        path, fmt = _output_path(ns.command, opts)
        rows, summary = COMMANDS[ns.command](opts)
        rows = [{k: _num(v) for k, v in row.items()} for row in rows]
        header = CSV_HEADERS.get(ns.command) or list(rows[0])
        text = render_csv(rows, header) if fmt == "csv" else render_json(rows, header)
        _write(path, text)
    except CliError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES[exc.category]
    except UnsupportedOrderError as exc:
        print(f"error[hadamard-order]: {exc}", file=sys.stderr)
        return EXIT_CODES["hadamard-order"]
    except (DomainError, ConvergenceError, ArithmeticError, ValueError) as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
        return EXIT_CODES["numeric"]
    print(f"{summary} -> {path}")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
