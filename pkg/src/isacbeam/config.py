"""Flat key-value configuration with scenario/solver/experiment sections.

Powers are dBm and angles are degrees in config files; conversion to
watts and radians happens exactly once, when the scenario is built.
Parsing is strict: unknown sections or keys are rejected with their
location, and a parsed config dumps back to text that re-parses to an
identical structure.
"""

import configparser
import io
from dataclasses import dataclass

from .errors import ConfigError
from .rcg import RcgOptions
from .scenario import make_scenario


def _float_list(text):
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(part) for part in items)


_SCHEMA = {
    "scenario": {
        "num_tx": (int, 32),
        "num_rx": (int, 32),
        "num_users": (int, 6),
        "target_angles_deg": (_float_list, (-45.0, 30.0, 60.0)),
        "target_ranges_m": (_float_list, (50.0, 60.0, 70.0)),
        "noise_power_dbm": (float, -96.0),
        "power_budget_dbm": (float, 20.0),
        "snapshots": (int, 1024),
        "rician_k": (float, 0.1),
        "overload": (float, 0.7),
        "seed": (int, 1),
        "user_range_min_m": (float, 50.0),
        "user_range_max_m": (float, 55.0),
        "user_angle_min_deg": (float, -25.0),
        "user_angle_max_deg": (float, 25.0),
        "pathloss_exponent": (float, 2.2),
        "pathloss_ref_db": (float, -30.0),
        "pathloss_ref_m": (float, 1.0),
    },
    "solver": {
        "c1": (float, 1e-4),
        "c2": (float, 0.4),
        "eps": (float, 1e-3),
        "max_iters": (int, 2000),
        "max_linesearch_evals": (int, 30),
        "restart_period": (int, 0),      # 0 means automatic (column count)
    },
    "experiment": {
        "power_grid_dbm": (_float_list, (10.0, 15.0, 20.0)),
        "delta_grid": (_float_list, (0.3, 0.5, 0.7)),
        "trials": (int, 30),
        "grid_deg": (float, 0.1),        # beampattern trace resolution
        "music_grid_deg": (float, 0.02),
        "seed": (int, 0),                # 0 means use the scenario seed
        "out": (str, ""),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: tuple     # frozen (key, value) pairs per section
    solver: tuple
    experiment: tuple

    def section(self, name):
        return dict(getattr(self, name))

    def get(self, section, key):
        return self.section(section)[key]


def _freeze(values):
    return ExperimentConfig(
        scenario=tuple(sorted(values["scenario"].items())),
        solver=tuple(sorted(values["solver"].items())),
        experiment=tuple(sorted(values["experiment"].items())))


def default_config():
    return _freeze({s: {k: d for k, (_, d) in keys.items()}
                    for s, keys in _SCHEMA.items()})


def parse_config(text, source="<config>"):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
            cast = _SCHEMA[section][key][0]
            try:
                values[section][key] = cast(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{source}: bad value for '{key}' in [{section}]: {raw!r} ({exc})"
                ) from exc
    return _freeze(values)


def load_config(path=None):
    if path is None:
        return default_config()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def dump_config(cfg):
    """Config as INI text; parse_config(dump_config(c)) == c."""
    out = io.StringIO()
    for section in ("scenario", "solver", "experiment"):
        out.write(f"[{section}]\n")
        for key, value in getattr(cfg, section):
            if isinstance(value, tuple):
                text = ",".join(repr(v) for v in value)
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            out.write(f"{key} = {text}\n")
        out.write("\n")
    return out.getvalue()


def build_scenario(cfg, seed=None, power_budget_dbm=None, overload=None):
    """Scenario from the config's scenario section, with overrides."""
    s = cfg.section("scenario")
    if seed is None:
        seed = cfg.get("experiment", "seed") or s["seed"]
    if power_budget_dbm is None:
        power_budget_dbm = s["power_budget_dbm"]
    if overload is None:
        overload = s["overload"]
    if len(s["target_angles_deg"]) != len(s["target_ranges_m"]):
        raise ConfigError("target_angles_deg and target_ranges_m lengths differ")
    try:
        return make_scenario(
            num_tx=s["num_tx"], num_rx=s["num_rx"], num_users=s["num_users"],
            target_angles_deg=s["target_angles_deg"],
            target_ranges_m=s["target_ranges_m"],
            noise_power_dbm=s["noise_power_dbm"],
            power_budget_dbm=power_budget_dbm,
            snapshots=s["snapshots"], rician_k=s["rician_k"],
            overload=overload, seed=seed,
            user_range_m=(s["user_range_min_m"], s["user_range_max_m"]),
            user_sector_deg=(s["user_angle_min_deg"], s["user_angle_max_deg"]),
            pathloss_exponent=s["pathloss_exponent"],
            pathloss_ref_db=s["pathloss_ref_db"],
            pathloss_ref_m=s["pathloss_ref_m"])
    except ValueError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def build_options(cfg):
    s = cfg.section("solver")
    try:
        return RcgOptions(
            c1=s["c1"], c2=s["c2"], eps=s["eps"], max_iters=s["max_iters"],
            max_linesearch_evals=s["max_linesearch_evals"],
            restart_period=s["restart_period"] or None)
    except ValueError as exc:
        raise ConfigError(f"invalid solver options: {exc}") from exc
