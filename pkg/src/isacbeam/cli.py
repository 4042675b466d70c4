"""Command-line entry points and CSV emission.

Subcommands: design, sweep-power, sweep-delta, beampattern, timing.
Each reads an optional INI config (defaults mirror the standard
simulation table), applies --seed/--mode/--out overrides, and emits CSV
with a fixed column schema. Rows are ordered by (grid index, mode) and
float cells use repr, so output for a fixed seed is byte-stable.

Exit codes: 0 success, 2 configuration error, 3 infeasible design,
4 numerical failure.
"""

import argparse
import csv
import io
import statistics
import sys

import numpy as np

from . import design, radar
from .arrays import beampattern_gain, beampattern_trace
from .config import build_options, build_scenario, load_config
from .errors import ConfigError, InfeasibleError, NumericalError

SWEEP_POWER_HEADER = ["p_max_dbm", "mode", "sum_beampattern_gain_db",
                      "sum_crlb", "rcrlb_deg", "rmse_deg", "min_rate"]
SWEEP_DELTA_HEADER = ["delta", "mode", "sum_crlb", "rmse_deg", "min_rate", "r_min"]
BEAMPATTERN_HEADER = ["theta_deg", "mode", "gain_db"]
TIMING_HEADER = ["mode", "stage", "mean_s", "stddev_s", "runs"]
DESIGN_HEADER = ["mode", "sum_crlb", "rcrlb_deg", "min_rate", "wall_time_s",
                 "sp1_iterations", "sp2_iterations", "rates"]


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(header, rows, out_path=None, metadata=None):
    buf = io.StringIO()
    for key, value in (metadata or []):
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])
    text = buf.getvalue()
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def read_csv(text):
    """Parse emitted CSV back into (metadata, header, rows of strings)."""
    metadata = []
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            metadata.append((key.strip(), value))
        elif line.strip():
            lines.append(line)
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError("empty CSV")
    return metadata, rows[0], rows[1:]


def _modes(arg):
    modes = [m.strip() for m in arg.split(",") if m.strip()]
    if not modes:
        raise ConfigError("no mode given")
    for m in modes:
        if m not in design.MODES:
            raise ConfigError(f"unknown mode '{m}' (choose from {', '.join(design.MODES)})")
    return modes


def _iters(trace):
    return trace.iterations if trace is not None else ""


def _run_one(cfg, mode, seed=None, power_budget_dbm=None, overload=None):
    scenario = build_scenario(cfg, seed=seed, power_budget_dbm=power_budget_dbm,
                              overload=overload)
    return scenario, design.run(scenario, mode=mode, opts=build_options(cfg))


def cmd_design(args):
    cfg = load_config(args.config)
    mode = _modes(args.mode)[0]
    scenario, res = _run_one(cfg, mode, seed=args.seed)
    record = [
        ("mode", res.mode),
        ("sum_crlb", _fmt(res.sum_crlb)),
        ("rcrlb_deg", _fmt(float(np.rad2deg(res.rcrlb)))),
        ("min_rate", _fmt(res.rates.min_rate)),
        ("r_min", _fmt(res.r_min)),
        ("wall_time_s", _fmt(res.wall_time)),
        ("sp1_iterations", _iters(res.traces["sp1"])),
        ("sp2_iterations", _iters(res.traces["sp2"])),
        ("rates", ";".join(_fmt(r) for r in res.rates.rate)),
    ]
    for key, value in record:
        print(f"{key}={value}")
    if args.out:
        row = [res.mode, res.sum_crlb, float(np.rad2deg(res.rcrlb)),
               res.rates.min_rate, res.wall_time,
               _iters(res.traces["sp1"]), _iters(res.traces["sp2"]),
               ";".join(_fmt(r) for r in res.rates.rate)]
        write_csv(DESIGN_HEADER, [row], out_path=args.out)
    return 0


def cmd_sweep_power(args):
    cfg = load_config(args.config)
    modes = _modes(args.mode)
    grid = cfg.get("experiment", "power_grid_dbm")
    if not grid:
        raise ConfigError("empty power grid")
    trials = cfg.get("experiment", "trials")
    music_grid = cfg.get("experiment", "music_grid_deg")
    rows = []
    for p_dbm in grid:
        for mode in modes:
            scenario, res = _run_one(cfg, mode, seed=args.seed,
                                     power_budget_dbm=p_dbm)
            report = radar.monte_carlo(scenario, res, trials, grid_deg=music_grid)
            gain = sum(beampattern_gain(res.r_x, t.angle) for t in scenario.targets)
            rows.append([p_dbm, mode, 10.0 * np.log10(max(gain, 1e-300)),
                         res.sum_crlb, float(np.rad2deg(res.rcrlb)),
                         float(np.rad2deg(report.rmse)), res.rates.min_rate])
    write_csv(SWEEP_POWER_HEADER, rows, out_path=args.out)
    return 0


def cmd_sweep_delta(args):
    cfg = load_config(args.config)
    modes = _modes(args.mode)
    grid = cfg.get("experiment", "delta_grid")
    if not grid:
        raise ConfigError("empty delta grid")
    if min(grid) < 0.0 or max(grid) > 1.0:
        raise ConfigError("delta grid values must lie in [0, 1]")
    trials = cfg.get("experiment", "trials")
    music_grid = cfg.get("experiment", "music_grid_deg")
    rows = []
    for delta in grid:
        for mode in modes:
            scenario, res = _run_one(cfg, mode, seed=args.seed, overload=delta)
            report = radar.monte_carlo(scenario, res, trials, grid_deg=music_grid)
            rows.append([delta, mode, res.sum_crlb,
                         float(np.rad2deg(report.rmse)),
                         res.rates.min_rate, res.r_min])
    write_csv(SWEEP_DELTA_HEADER, rows, out_path=args.out)
    return 0


def cmd_beampattern(args):
    cfg = load_config(args.config)
    modes = _modes(args.mode)
    step = cfg.get("experiment", "grid_deg")
    if step <= 0:
        raise ConfigError("beampattern grid resolution must be positive")
    points = int(round(180.0 / step)) + 1
    theta_deg = np.linspace(-90.0, 90.0, points)
    traces = {}
    metadata = []
    for mode in modes:
        scenario, res = _run_one(cfg, mode, seed=args.seed)
        gains = beampattern_trace(res.r_x, np.deg2rad(theta_deg))
        traces[mode] = 10.0 * np.log10(np.maximum(gains, 1e-300))
    metadata.append(("target_angles_deg", ";".join(
        _fmt(float(np.rad2deg(t.angle))) for t in scenario.targets)))
    metadata.append(("user_angles_deg", ";".join(
        _fmt(float(np.rad2deg(u.angle))) for u in scenario.users)))
    rows = []
    for i, theta in enumerate(theta_deg):
        for mode in modes:
            rows.append([float(theta), mode, traces[mode][i]])
    write_csv(BEAMPATTERN_HEADER, rows, out_path=args.out, metadata=metadata)
    return 0


def cmd_timing(args):
    cfg = load_config(args.config)
    modes = _modes(args.mode)
    runs = cfg.get("experiment", "trials")
    if runs < 3:
        raise ConfigError("timing needs at least 3 runs (experiment trials)")
    rows = []
    for mode in modes:
        stages = {}
        totals = []
        for _ in range(runs):
            _, res = _run_one(cfg, mode, seed=args.seed)
            totals.append(res.wall_time)
            for stage, seconds in res.stage_times.items():
                stages.setdefault(stage, []).append(seconds)
        for stage in sorted(stages):
            rows.append([mode, stage, statistics.mean(stages[stage]),
                         statistics.stdev(stages[stage]), runs])
        rows.append([mode, "total", statistics.mean(totals),
                     statistics.stdev(totals), runs])
    write_csv(TIMING_HEADER, rows, out_path=args.out)
    return 0


def _parser():
    parser = argparse.ArgumentParser(
        prog="isacbeam",
        description="Dual-function beamforming design and radar evaluation")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("design", cmd_design, "run one design and print its record"),
        ("sweep-power", cmd_sweep_power, "design and evaluate over a power grid"),
        ("sweep-delta", cmd_sweep_delta, "design and evaluate over overload factors"),
        ("beampattern", cmd_beampattern, "emit beampattern traces per mode"),
        ("timing", cmd_timing, "repeat designs and report stage timings"),
    ]
    for name, func, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--mode", default="sgcdf",
                       help="mode name, or comma-separated list for sweeps")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
