"""Seeded Monte Carlo experiment engine.

Work is cut into batches of channel draws. Batch ``b`` of an experiment
always uses the stream ``make_rng(seed, stage, b)`` and its size depends on
the configuration only, so results are identical for any worker count.

Within a batch every sweep point sees the same channels, symbols and unit
noise (common random numbers), which keeps curves smooth and makes
comparisons between neighbouring points much tighter than their individual
standard errors. NOMA and TDMA runs with the same seed also share channels.

One channel draw can carry ``symbols_per_channel`` symbol vectors
(quasi-static block fading). The default of 1 gives fully independent trials.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .channel import CsiErrorModel, corrupt_csi, make_rng, sample_links, sample_realization
from .csvio import fmt_float, write_rows
from .scenario import Scenario, dbm_to_mw

SCHEMES = ("noma", "tdma")
SWEEP_KINDS = ("pt_dbm", "rate")

# stream namespaces
_STAGE_CHANNEL = 1
_STAGE_SINR = 2

_WORK_PER_BATCH = 2 ** 21


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    scheme: str = "noma"
    sweep: tuple[float, ...] = (0.0,)
    sweep_kind: str = "pt_dbm"
    csi_zeta: float = 0.0
    los_mode: bool = False
    seed: int = 0
    min_errors: int = 100
    max_trials: int = 10 ** 7
    trials_per_point: int = 10 ** 6
    symbols_per_channel: int = 1
    workers: int = 1
    noise_off: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sweep", tuple(float(v) for v in self.sweep))
        object.__setattr__(self, "scheme", self.scheme.lower())
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme: must be one of {SCHEMES}, got {self.scheme!r}")
        if self.sweep_kind not in SWEEP_KINDS:
            raise ValueError(f"sweep_kind: must be one of {SWEEP_KINDS}, got {self.sweep_kind!r}")
        if not self.sweep:
            raise ValueError("sweep: must be nonempty")
        if not all(math.isfinite(v) for v in self.sweep):
            raise ValueError("sweep: values must be finite")
        if self.sweep_kind == "rate" and any(v < 0 for v in self.sweep):
            raise ValueError("sweep: rates must be nonnegative")
        for name in ("max_trials", "trials_per_point", "symbols_per_channel", "workers"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name}: must be a positive integer")
        if self.min_errors < 0:
            raise ValueError("min_errors: must be nonnegative")
        CsiErrorModel(self.csi_zeta)
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed: must be a 64-bit unsigned integer")

    def with_updates(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    @property
    def batch_draws(self) -> int:
        sc = self.scenario
        return int(np.clip(_WORK_PER_BATCH // (sc.n_elements * (sc.n_users + 1)), 8, 4096))

    def sweep_values(self):
        """Per-point (pt_linear, rate) pairs."""
        sc = self.scenario
        if self.sweep_kind == "pt_dbm":
            return [(dbm_to_mw(p), sc.qos_rate_bps_hz) for p in self.sweep]
        return [(dbm_to_mw(sc.pt_dbm), r) for r in self.sweep]


@dataclass
class ExperimentResult:
    """Per-point, per-UE estimates.

    ``totals`` holds aggregate metrics (name -> (value, stderr), each of
    shape (points,)); they appear in the CSV with the name in the ``ue``
    column. UEs are 1-based in the CSV.
    """

    axis_name: str
    axis: np.ndarray
    metric: str
    scheme: str
    values: np.ndarray            # (points, K)
    trials: np.ndarray            # (points, K) channel uses, or bits sent for BER
    counts: Optional[np.ndarray]  # (points, K) bit errors / outage hits, None for means
    stderr: np.ndarray
    seed: int
    elapsed: float = 0.0
    totals: dict = field(default_factory=dict)

    CSV_HEADER = ("axis", "ue", "metric", "trials", "errors_or_hits", "stderr", "seed")

    def rows(self):
        yield self.CSV_HEADER
        seed = str(self.seed)
        for i, a in enumerate(self.axis):
            ax = fmt_float(a)
            for k in range(self.values.shape[1]):
                hits = "" if self.counts is None else str(int(self.counts[i, k]))
                yield (ax, str(k + 1), fmt_float(self.values[i, k]), str(int(self.trials[i, k])), hits,
                       fmt_float(self.stderr[i, k]), seed)
            for name, (val, se) in self.totals.items():
                yield (ax, name, fmt_float(val[i]), str(int(self.trials[i, 0])), "", fmt_float(se[i]), seed)

    def to_csv(self, path) -> None:
        write_rows(path, self.rows())


# -- batch primitives ----------------------------------------------------------

def _bounds(sc: Scenario) -> np.ndarray:
    return np.concatenate(([0], np.cumsum(sc.partition_sizes))).astype(np.int64)


def _draw_batch(cfg: ExperimentConfig, stage: int, index: int, n_draws: int, n_sym: int, with_noise: bool):
    """Channels, estimates, symbols and unit noise for one batch.

    Returns ``(coupling (T,K,K), direct (T,K), symbols (T,L,K), noise or None)``.
    The draw order (h, g, f, symbols, noise) is fixed so that both schemes
    and all CSI levels see the same channels.
    """
    sc = cfg.scenario
    lb = sc.link_budget()
    k = sc.n_users
    rng = make_rng(cfg.seed, stage, index)
    real = sample_realization(lb, sc.n_elements, rng, los=cfg.los_mode, batch=n_draws)
    if cfg.csi_zeta > 0:
        # errors live on their own stream; all zeta > 0 runs share it and
        # zeta = 0 is exactly the zero-scaled draw
        model = CsiErrorModel(cfg.csi_zeta)
        csi_rng = make_rng(cfg.seed, stage, index, 1)
        h_est = corrupt_csi(real.h, model, lb.sigma2_h, csi_rng)
        g_est = corrupt_csi(real.g, model, np.asarray(lb.sigma2_g)[:, None], csi_rng)
    else:
        h_est, g_est = real.h, real.g
    orders = np.asarray(sc.modulation_orders, dtype=np.int64)
    symbols = rng.integers(0, orders, size=(n_draws, n_sym, k)).astype(np.int64)
    noise = None
    if with_noise:
        noise = sample_links((n_draws, n_sym, k), 1.0, rng)
    if cfg.scheme == "noma":
        coupling = kernels.coupling_matrix(real.h, real.g, h_est, g_est, _bounds(sc))
    else:
        diag = kernels.tdma_coupling(real.h, real.g, h_est, g_est)
        coupling = np.zeros((n_draws, k, k), dtype=np.complex128)
        idx = np.arange(k)
        coupling[:, idx, idx] = diag
    direct = real.f if real.f is not None else np.zeros((n_draws, k), dtype=np.complex128)
    return coupling, np.ascontiguousarray(direct), symbols, noise


def _sinr_power_parts(cfg, stage, index, n_draws, n_sym):
    coupling, _, symbols, _ = _draw_batch(cfg, stage, index, n_draws, n_sym, False)
    orders = np.asarray(cfg.scenario.modulation_orders, dtype=np.int64)
    useful, interf = kernels.sinr_parts(coupling, symbols, orders)
    return useful.reshape(-1, useful.shape[-1]), interf.reshape(-1, interf.shape[-1])


def _symbols_per_draw(cfg: ExperimentConfig, needs_symbols: bool) -> int:
    # without interference the symbols do not affect the SINR, so repeating a
    # channel would only duplicate trials
    if cfg.scheme == "tdma" and not needs_symbols:
        return 1
    return int(cfg.symbols_per_channel)


def _batch_plan(cfg: ExperimentConfig, n_draws: int):
    size = cfg.batch_draws
    full, rest = divmod(n_draws, size)
    plan = [size] * full
    if rest:
        plan.append(rest)
    return plan


def _parallel_map(fn, arg_tuples, workers: int, pool=None):
    if pool is not None:
        return list(pool.map(fn, *zip(*arg_tuples))) if arg_tuples else []
    if workers <= 1 or len(arg_tuples) <= 1:
        return [fn(*a) for a in arg_tuples]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*arg_tuples)))


def _thresholds(cfg: ExperimentConfig):
    sc = cfg.scenario
    scale = sc.n_users if cfg.scheme == "tdma" else 1
    pts = cfg.sweep_values()
    power = np.array([p for p, _ in pts])
    thr = np.array([2.0 ** (scale * r / sc.bandwidth) - 1.0 for _, r in pts])
    return power, thr


def _sinr(useful, interf, power, n0):
    return power * useful / (power * interf + n0)


# -- outage ------------------------------------------------------------------

def _outage_task(cfg, index, n_draws, n_sym):
    useful, interf = _sinr_power_parts(cfg, _STAGE_CHANNEL, index, n_draws, n_sym)
    power, thr = _thresholds(cfg)
    n0 = dbm_to_mw(cfg.scenario.n0_dbm)
    hits = np.empty((len(power), useful.shape[1]), dtype=np.int64)
    for i, (p, r) in enumerate(zip(power, thr)):
        if r <= 0.0:
            hits[i] = 0
            continue
        hits[i] = np.count_nonzero(_sinr(useful, interf, p, n0) < r, axis=0)
    return hits


def run_outage(cfg: ExperimentConfig) -> ExperimentResult:
    """Fraction of trials with SINR below the rate threshold.

    A rate of zero gives a threshold of zero, which no SINR can undercut.
    """
    t0 = time.perf_counter()
    n_sym = _symbols_per_draw(cfg, False)
    n_draws = -(-cfg.trials_per_point // n_sym)
    plan = _batch_plan(cfg, n_draws)
    parts = _parallel_map(_outage_task, [(cfg, b, n, n_sym) for b, n in enumerate(plan)], cfg.workers)
    hits = np.sum(parts, axis=0)
    trials = np.full(hits.shape, n_draws * n_sym, dtype=np.int64)
    p = hits / trials
    return ExperimentResult(cfg.sweep_kind, np.array(cfg.sweep), "outage", cfg.scheme, p, trials, hits,
                            np.sqrt(p * (1 - p) / trials), cfg.seed, time.perf_counter() - t0)


# -- sum rate ----------------------------------------------------------------

def _sum_rate_task(cfg, index, n_draws, n_sym):
    useful, interf = _sinr_power_parts(cfg, _STAGE_CHANNEL, index, n_draws, n_sym)
    power, _ = _thresholds(cfg)
    n0 = dbm_to_mw(cfg.scenario.n0_dbm)
    k = useful.shape[1]
    share = 1.0 / k if cfg.scheme == "tdma" else 1.0
    acc = np.zeros((len(power), k + 2, 2))
    for i, p in enumerate(power):
        gamma = _sinr(useful, interf, p, n0)
        rate = share * np.log2(1.0 + gamma)
        cols = [rate[:, j] for j in range(k)] + [rate.sum(axis=1), gamma.mean(axis=1)]
        for j, c in enumerate(cols):
            acc[i, j, 0] = c.sum()
            acc[i, j, 1] = np.dot(c, c)
    return acc


def run_sum_rate(cfg: ExperimentConfig) -> ExperimentResult:
    """Mean per-UE rate and sum rate in bps/Hz.

    NOMA: ``sum_k log2(1 + gamma_k)``. TDMA: ``(1/K) sum_k log2(1 + gamma_k)``.
    TDMA results also carry ``snr_average``, the mean of ``(1/K) sum_k gamma_k``.
    """
    t0 = time.perf_counter()
    n_sym = _symbols_per_draw(cfg, False)
    n_draws = -(-cfg.trials_per_point // n_sym)
    plan = _batch_plan(cfg, n_draws)
    parts = _parallel_map(_sum_rate_task, [(cfg, b, n, n_sym) for b, n in enumerate(plan)], cfg.workers)
    acc = np.sum(parts, axis=0)
    n = n_draws * n_sym
    mean = acc[..., 0] / n
    var = np.maximum(acc[..., 1] / n - mean ** 2, 0.0)
    se = np.sqrt(var / n)
    k = cfg.scenario.n_users
    totals = {"sum": (mean[:, k], se[:, k])}
    if cfg.scheme == "tdma":
        totals["snr_average"] = (mean[:, k + 1], se[:, k + 1])
    trials = np.full((len(cfg.sweep), k), n, dtype=np.int64)
    return ExperimentResult(cfg.sweep_kind, np.array(cfg.sweep), "rate", cfg.scheme, mean[:, :k], trials, None,
                            se[:, :k], cfg.seed, time.perf_counter() - t0, totals)


# -- bit error rate ------------------------------------------------------------

def _ber_task(cfg, index, n_draws, n_sym, active):
    coupling, direct, symbols, noise = _draw_batch(cfg, _STAGE_CHANNEL, index, n_draws, n_sym, True)
    sc = cfg.scenario
    orders = np.asarray(sc.modulation_orders, dtype=np.int64)
    n0 = 0.0 if cfg.noise_off else dbm_to_mw(sc.n0_dbm)
    noise = np.ascontiguousarray(noise * math.sqrt(n0))
    power, _ = _thresholds(cfg)
    out = {}
    for i in active:
        bits, _ = kernels.detect_errors(coupling, symbols, noise, direct, math.sqrt(power[i]), orders)
        out[i] = np.asarray(bits, dtype=np.int64)
    return out


def run_ber(cfg: ExperimentConfig) -> ExperimentResult:
    """Per-UE BER with nearest-phase (ML) detection and Gray demapping.

    Each sweep point consumes batches in index order until every UE has
    ``min_errors`` bit errors or ``max_trials`` symbols were sent; the batch
    that crosses the limit is completed. With several workers, batches run in
    waves and results past a point's stopping batch are discarded, so the
    output does not depend on the worker count.
    """
    if cfg.sweep_kind != "pt_dbm":
        raise ValueError("sweep_kind: BER runs sweep the transmit power")
    t0 = time.perf_counter()
    sc = cfg.scenario
    k = sc.n_users
    n_pts = len(cfg.sweep)
    n_sym = _symbols_per_draw(cfg, True)
    draws = cfg.batch_draws
    per_batch = draws * n_sym
    bps = np.array([int(m).bit_length() - 1 for m in sc.modulation_orders])
    errors = np.zeros((n_pts, k), dtype=np.int64)
    sent = np.zeros(n_pts, dtype=np.int64)
    active = list(range(n_pts))
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        batch = 0
        while active:
            wave = [(cfg, batch + i, draws, n_sym, tuple(active)) for i in range(max(cfg.workers, 1))]
            results = _parallel_map(_ber_task, wave, cfg.workers, pool)
            for res in results:
                for i in list(active):
                    errors[i] += res[i]
                    sent[i] += per_batch
                    if np.all(errors[i] >= cfg.min_errors) or sent[i] >= cfg.max_trials:
                        active.remove(i)
            batch += len(wave)
    finally:
        if pool is not None:
            pool.shutdown()
    bits = sent[:, None] * bps[None, :]
    p = errors / bits
    return ExperimentResult("pt_dbm", np.array(cfg.sweep), "ber", cfg.scheme, p, bits, errors,
                            np.sqrt(p * (1 - p) / bits), cfg.seed, time.perf_counter() - t0)


# -- SINR populations ----------------------------------------------------------

def collect_sinr_components(cfg: ExperimentConfig, count: int):
    """``count`` i.i.d. draws of (|useful|^2, |interference|^2), each (count, K).

    Both exclude the transmit power; every draw uses a fresh channel.
    """
    if count < 1:
        raise ValueError("count: must be positive")
    plan = _batch_plan(cfg, int(count))
    parts = _parallel_map(_sinr_power_parts, [(cfg, _STAGE_SINR, b, n, 1) for b, n in enumerate(plan)],
                          cfg.workers)
    return np.concatenate([u for u, _ in parts]), np.concatenate([i for _, i in parts])


def collect_sinr_samples(cfg: ExperimentConfig, count: int, ue: int = 0,
                         pt_dbm: Optional[float] = None) -> np.ndarray:
    """i.i.d. SINR draws of user ``ue`` (0-based) at ``pt_dbm``."""
    sc = cfg.scenario
    if not 0 <= ue < sc.n_users:
        raise ValueError(f"ue: must be in [0, {sc.n_users})")
    useful, interf = collect_sinr_components(cfg, count)
    p = dbm_to_mw(sc.pt_dbm if pt_dbm is None else pt_dbm)
    return _sinr(useful[:, ue], interf[:, ue], p, dbm_to_mw(sc.n0_dbm))


def tdma_counterpart(cfg: ExperimentConfig) -> ExperimentConfig:
    """Same experiment under TDMA with spectral-efficiency matched orders."""
    sc = cfg.scenario
    k = sc.n_users
    orders = tuple(2 ** (k * (int(m).bit_length() - 1)) for m in sc.modulation_orders)
    return cfg.with_updates(scheme="tdma", scenario=replace(sc, modulation_orders=orders))


RUNNERS = {"outage": run_outage, "ber": run_ber, "sumrate": run_sum_rate}
