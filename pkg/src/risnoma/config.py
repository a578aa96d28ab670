"""TOML run configuration.

The file is flat: every key lives at the top level. Scenario keys and
experiment keys share one namespace so any of them can be overridden from
the command line with ``--set key=value`` (the value is parsed as TOML, and
taken as a plain string if that fails).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import tomli

from .montecarlo import ExperimentConfig
from .scenario import ModelRangeWarning, Scenario


class ConfigError(Exception):
    """One or more configuration problems; ``problems`` lists them all."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


_REAL = "real"
_INT = "integer"
_BOOL = "boolean"
_POINT = "point"
_STR = "string"

# key -> (kind, is_list, default)
SCHEMA: dict[str, tuple[str, bool, Any]] = {
    "ue_positions": (_POINT, True, None),
    "ris_position": (_POINT, False, None),
    "bs_position": (_POINT, False, None),
    "n_elements": (_INT, False, None),
    "fc_ghz": (_REAL, False, 2.4),
    "n0_dbm": (_REAL, False, -130.0),
    "pt_dbm": (_REAL, False, 0.0),
    "partition_sizes": (_INT, True, []),
    "qos_rate_bps_hz": (_REAL, False, 2.0),
    "bandwidth": (_REAL, False, 1.0),
    "modulation_orders": (_INT, True, []),
    "sweep_pt_dbm": (_REAL, True, []),
    "sweep_rate": (_REAL, True, []),
    "schemes": (_STR, True, ["noma", "tdma"]),
    "csi_zeta": (_REAL, False, 0.0),
    "los_mode": (_BOOL, False, False),
    "seed": (_INT, False, None),
    "min_errors": (_INT, False, 100),
    "max_trials": (_INT, False, 10 ** 7),
    "trials_per_point": (_INT, False, 10 ** 6),
    "symbols_per_channel": (_INT, False, 1),
    "workers": (_INT, False, 1),
    "sinr_samples": (_INT, False, 100_000),
    "ue_pair": (_INT, True, []),
}
REQUIRED = ("ue_positions", "ris_position", "bs_position", "n_elements")
SCENARIO_KEYS = ("ue_positions", "ris_position", "bs_position", "n_elements", "fc_ghz", "n0_dbm", "pt_dbm",
                 "partition_sizes", "qos_rate_bps_hz", "bandwidth", "modulation_orders")


def _check_scalar(kind: str, v) -> bool:
    if kind == _BOOL:
        return isinstance(v, bool)
    if isinstance(v, bool):
        return False
    if kind == _INT:
        return isinstance(v, int)
    if kind == _REAL:
        return isinstance(v, (int, float))
    if kind == _STR:
        return isinstance(v, str)
    if kind == _POINT:
        return (isinstance(v, list) and len(v) == 2
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v))
    return False


def _describe(kind: str, is_list: bool) -> str:
    base = {"point": "[x, y] pair"}.get(kind, kind)
    return f"list of {base}" if is_list else base


def parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError([f"override {text!r}: expected key=value"])
    key, raw = (s.strip() for s in text.split("=", 1))
    try:
        value = tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        value = raw
    return key, value


def check_values(raw: dict) -> tuple[dict, list[str]]:
    """Check key names, presence and types. Returns (resolved, problems)."""
    problems = []
    for key in raw:
        if key not in SCHEMA:
            problems.append(f"unknown key {key!r}")
    for key in REQUIRED:
        if key not in raw:
            problems.append(f"missing required key {key!r}")
    resolved = {}
    for key, (kind, is_list, default) in SCHEMA.items():
        if key not in raw:
            if key not in REQUIRED:
                resolved[key] = list(default) if isinstance(default, list) else default
            continue
        v = raw[key]
        ok = (isinstance(v, list) and all(_check_scalar(kind, e) for e in v)) if is_list else _check_scalar(kind, v)
        if not ok:
            problems.append(f"type mismatch for {key!r}: expected {_describe(kind, is_list)}, "
                            f"got {type(v).__name__} {v!r}")
            continue
        if kind == _REAL:
            v = [float(e) for e in v] if is_list else float(v)
        resolved[key] = v
    return resolved, problems


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration. ``seed`` is None when the file has none."""

    path: Optional[str]
    values: dict
    scenario: Scenario
    seed: Optional[int]

    def experiment(self, seed: int, sweep=None, sweep_kind: str = "pt_dbm", scheme: str = "noma",
                   workers: Optional[int] = None) -> ExperimentConfig:
        v = self.values
        if sweep is None:
            sweep = v["sweep_pt_dbm"] or [v["pt_dbm"]]
        return ExperimentConfig(
            scenario=self.scenario, scheme=scheme, sweep=tuple(sweep), sweep_kind=sweep_kind,
            csi_zeta=v["csi_zeta"], los_mode=v["los_mode"], seed=seed, min_errors=v["min_errors"],
            max_trials=v["max_trials"], trials_per_point=v["trials_per_point"],
            symbols_per_channel=v["symbols_per_channel"], workers=workers or v["workers"])


def _invariant(msg: str) -> str:
    return f"invariant violated: {msg}"


def build(raw: dict, path: Optional[str] = None) -> RunConfig:
    values, problems = check_values(raw)
    if problems:
        raise ConfigError(problems)
    scenario = None
    try:
        with warnings.catch_warnings():
            # range warnings are re-emitted by path_loss_db below, once
            warnings.simplefilter("ignore", ModelRangeWarning)
            scenario = Scenario(**{k: (tuple(values[k]) if isinstance(values[k], list) else values[k])
                                   for k in SCENARIO_KEYS})
    except ValueError as exc:
        problems.append(_invariant(str(exc)))
    seed = values["seed"]
    if seed is not None and not 0 <= seed < 2 ** 64:
        problems.append(_invariant("seed: must be in [0, 2^64)"))
    for key in ("min_errors",):
        if values[key] < 0:
            problems.append(_invariant(f"{key}: must be nonnegative"))
    for key in ("max_trials", "trials_per_point", "symbols_per_channel", "workers", "sinr_samples"):
        if values[key] < 1:
            problems.append(_invariant(f"{key}: must be positive"))
    if not 0 <= values["csi_zeta"] < 1:
        problems.append(_invariant("csi_zeta: must lie in [0, 1)"))
    for key in ("sweep_pt_dbm", "sweep_rate", "csi_zeta"):
        v = values[key]
        if not all(math.isfinite(e) for e in (v if isinstance(v, list) else [v])):
            problems.append(_invariant(f"{key}: values must be finite"))
    if any(r < 0 for r in values["sweep_rate"]):
        problems.append(_invariant("sweep_rate: rates must be nonnegative"))
    bad = [s for s in values["schemes"] if s.lower() not in ("noma", "tdma")]
    if bad or not values["schemes"]:
        problems.append(_invariant(f"schemes: entries must be 'noma' or 'tdma', got {values['schemes']}"))
    pair = values["ue_pair"]
    if pair and scenario is not None:
        if len(pair) != 2 or len(set(pair)) != 2 or not all(1 <= u <= scenario.n_users for u in pair):
            problems.append(_invariant(f"ue_pair: need two distinct UE numbers in 1..{scenario.n_users}"))
    if problems:
        raise ConfigError(problems)
    try:
        scenario.link_budget()  # also surfaces path-loss range warnings
    except ValueError as exc:
        raise ConfigError([_invariant(str(exc))]) from exc
    return RunConfig(path, values, scenario, seed)


def load_raw(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: malformed TOML: {exc}"]) from exc


def validate_config(path, overrides=()) -> RunConfig:
    """Load, apply ``key=value`` overrides and validate a config file.

    Raises :class:`ConfigError` listing every problem found. Path-loss
    validity warnings are issued as :class:`ModelRangeWarning`, not errors.
    """
    raw = load_raw(path)
    for text in overrides:
        key, value = parse_override(text)
        raw[key] = value
    return build(raw, str(Path(path)))
