"""TDMA baseline.

Each user gets a 1/K time share with the whole RIS aligned to it, so it must
carry K times the rate (outage threshold ``2^(K R/B) - 1``) or, for BER, use
``M_OMA = 2^(K * eta)`` to match the spectral efficiency ``eta``.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .theory import outage_probability


def tdma_snr(pt_linear: float, h, g_k, n0_linear: float) -> float:
    """``Pt |sum_n |h_n||g_nk||^2 / N0`` over all elements, no interference."""
    amp = np.sum(np.abs(np.asarray(h)) * np.abs(np.asarray(g_k)), axis=-1)
    return pt_linear * amp ** 2 / n0_linear


def tdma_threshold(rate: float, n_users: int, bandwidth: float = 1.0) -> float:
    return 2.0 ** (n_users * rate / bandwidth) - 1.0


def tdma_outage(scenario, k: int, pt_dbm: Optional[float] = None, rate: Optional[float] = None) -> float:
    pt_dbm = scenario.pt_dbm if pt_dbm is None else pt_dbm
    rate = scenario.qos_rate_bps_hz if rate is None else rate
    lb = scenario.link_budget()
    pt = 10.0 ** (pt_dbm / 10.0)
    r = tdma_threshold(rate, scenario.n_users, scenario.bandwidth)
    return outage_probability(scenario.n_elements, 0, lb.sigma2_h, lb.sigma2_g[k], r, lb.n0_linear / pt)


def oma_equivalent_order(n_users: int, eta: float) -> int:
    exponent = n_users * eta
    if abs(exponent - round(exponent)) > 1e-12 or round(exponent) < 1:
        raise ValueError(f"K*eta = {exponent} is not a positive integer")
    return 2 ** int(round(exponent))


def noma_sum_rate(sinr, axis=-1):
    return np.sum(np.log2(1.0 + np.asarray(sinr)), axis=axis)


def tdma_sum_rate(snr, axis=-1):
    """``(1/K) sum_k log2(1 + snr_k)`` (time-shared Shannon rate)."""
    snr = np.asarray(snr)
    return np.sum(np.log2(1.0 + snr), axis=axis) / snr.shape[axis]


def tdma_snr_average(snr, axis=-1):
    """Literal ``(sum_k snr_k) / K``; an SNR, kept for comparison only."""
    snr = np.asarray(snr)
    return np.sum(snr, axis=axis) / snr.shape[axis]


def bits_per_symbol(order: int) -> int:
    return int(math.log2(order))
