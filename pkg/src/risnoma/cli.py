"""Command-line front end.

    risnoma <subcommand> <config.toml> [--seed S] [--out DIR] [--set key=value ...] [--workers W]

Every run writes its CSV files plus ``run_manifest.json`` into ``--out``.
Exit status: 0 on success, 1 for configuration errors, 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import secrets
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .config import ConfigError, RunConfig, validate_config
from .csvio import fmt_float, write_rows
from .montecarlo import collect_sinr_components, run_ber, run_outage, run_sum_rate, tdma_counterpart
from .oma import tdma_outage
from .partition import search_partition_k2
from .scenario import ModelRangeWarning, dbm_to_mw
from .theory import DegenerateInputError, NumericalFailure, bep_mpsk, fit_gamma, ks_statistic, noma_outage, sep_mpsk

SUBCOMMANDS = ("outage", "ber", "sumrate", "qos", "fitdist", "optimize", "theory")

FITDIST_HEADER = ("ue", "pt_dbm", "kappa", "rho", "ks_stat")
BEP_HEADER = ("ue", "pt_dbm", "order", "sep", "bep")
OPTIMIZE_HEADER = ("n1", "n2", "pout_1", "pout_2", "objective", "is_argmin")
THEORY_HEADER = ("scheme", "pt_dbm", "rate", "ue", "pout")


def _experiments(cfg: RunConfig, seed: int, workers, sweep=None, sweep_kind="pt_dbm"):
    base = cfg.experiment(seed, sweep=sweep, sweep_kind=sweep_kind, workers=workers)
    for scheme in dict.fromkeys(s.lower() for s in cfg.values["schemes"]):
        yield scheme, (base if scheme == "noma" else tdma_counterpart(base))


def _cmd_mc(runner, prefix, sweep_key=None):
    def cmd(cfg: RunConfig, seed, workers, out: Path):
        sweep, kind = None, "pt_dbm"
        if sweep_key is not None:
            sweep = cfg.values[sweep_key] or [cfg.values["qos_rate_bps_hz"]]
            kind = "rate"
        files = []
        for scheme, exp in _experiments(cfg, seed, workers, sweep, kind):
            name = f"{prefix}_{scheme}.csv"
            runner(exp).to_csv(out / name)
            files.append(name)
        return files
    return cmd


def _cmd_fitdist(cfg: RunConfig, seed, workers, out: Path):
    exp = cfg.experiment(seed, workers=workers)
    sc = cfg.scenario
    useful, interf = collect_sinr_components(exp, cfg.values["sinr_samples"])
    n0 = dbm_to_mw(sc.n0_dbm)
    fits, beps = [FITDIST_HEADER], [BEP_HEADER]
    for k in range(sc.n_users):
        for pt_dbm in exp.sweep:
            p = dbm_to_mw(pt_dbm)
            gamma = p * useful[:, k] / (p * interf[:, k] + n0)
            fit = fit_gamma(gamma)
            ks = ks_statistic(gamma, fit.cdf)
            fits.append((str(k + 1), fmt_float(pt_dbm), fmt_float(fit.kappa), fmt_float(fit.rho), fmt_float(ks)))
            m = sc.modulation_orders[k]
            beps.append((str(k + 1), fmt_float(pt_dbm), str(m), fmt_float(sep_mpsk(fit, m)),
                         fmt_float(bep_mpsk(fit, m))))
    write_rows(out / "fitdist.csv", fits)
    write_rows(out / "fitdist_bep.csv", beps)
    return ["fitdist.csv", "fitdist_bep.csv"]


def _cmd_optimize(cfg: RunConfig, seed, workers, out: Path):
    sc = cfg.scenario
    pair = cfg.values["ue_pair"]
    if pair:
        sc = sc.select_users([u - 1 for u in pair])
    elif sc.n_users != 2:
        raise ConfigError([f"invariant violated: ue_pair: required when the scenario has {sc.n_users} UEs"])
    search = search_partition_k2(sc)
    rows = [OPTIMIZE_HEADER]
    for c in search.curve:
        rows.append((str(c.sizes[0]), str(c.sizes[1]), fmt_float(c.outages[0]), fmt_float(c.outages[1]),
                     fmt_float(c.objective), "1" if c is search.best else "0"))
    write_rows(out / "optimize.csv", rows)
    return ["optimize.csv"]


def _cmd_theory(cfg: RunConfig, seed, workers, out: Path):
    sc = cfg.scenario
    v = cfg.values
    pts = v["sweep_pt_dbm"] or [v["pt_dbm"]]
    rates = v["sweep_rate"] or [v["qos_rate_bps_hz"]]
    fns = {"noma": noma_outage, "tdma": tdma_outage}
    rows = [THEORY_HEADER]
    for scheme in dict.fromkeys(s.lower() for s in v["schemes"]):
        for pt in pts:
            for r in rates:
                for k in range(sc.n_users):
                    rows.append((scheme, fmt_float(pt), fmt_float(r), str(k + 1),
                                 fmt_float(fns[scheme](sc, k, pt, r))))
    write_rows(out / "theory_outage.csv", rows)
    return ["theory_outage.csv"]


COMMANDS = {
    "outage": _cmd_mc(run_outage, "outage"),
    "ber": _cmd_mc(run_ber, "ber"),
    "sumrate": _cmd_mc(run_sum_rate, "sumrate"),
    "qos": _cmd_mc(run_outage, "qos", sweep_key="sweep_rate"),
    "fitdist": _cmd_fitdist,
    "optimize": _cmd_optimize,
    "theory": _cmd_theory,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risnoma", description="RIS-partitioned downlink NOMA simulator")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("config", help="TOML configuration file")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config; drawn at random if absent)")
    ap.add_argument("--out", default=".", help="output directory (default: current directory)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key; repeatable")
    ap.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    return ap


def _manifest(args, cfg: RunConfig, seed: int, out: Path, files, started, elapsed):
    values = dict(cfg.values)
    values["seed"] = seed
    return {
        "subcommand": args.subcommand,
        "config_path": str(Path(args.config).resolve()),
        "overrides": list(args.overrides),
        "seed": seed,
        "out_dir": str(out.resolve()),
        "version": __version__,
        "backend": _accel.backend(),
        "started_utc": started,
        "wall_clock_s": elapsed,
        "files": files,
        "config": values,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("default", ModelRangeWarning)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    try:
        cfg = validate_config(args.config, args.overrides)
        if args.workers is not None and args.workers < 1:
            raise ConfigError(["invariant violated: workers: must be positive"])
        seed = args.seed if args.seed is not None else cfg.seed
        if seed is None:
            seed = secrets.randbits(63)
        if not 0 <= seed < 2 ** 64:
            raise ConfigError(["invariant violated: seed: must be in [0, 2^64)"])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            files = COMMANDS[args.subcommand](cfg, seed, args.workers, out)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 1
    except (NumericalFailure, ArithmeticError, DegenerateInputError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    manifest = _manifest(args, cfg, seed, out, files, started, time.perf_counter() - t0)
    with open(out / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {', '.join(files)} to {out} (seed {seed})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
