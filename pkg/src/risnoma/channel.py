"""Rayleigh fading draws and the statistical CSI-error model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scenario import LinkBudget


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream identified by ``(seed, *key)``.

    Streams for different keys are statistically independent, so work can be
    split into keyed units and scheduled in any order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def sample_links(count, variance: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, variance) draws; ``count`` may be an int or a shape tuple."""
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    shape = (count,) if np.isscalar(count) else tuple(count)
    # (re, im) pairs reinterpreted in place as complex numbers
    out = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0]
    out *= np.sqrt(variance / 2.0)
    return out


@dataclass(frozen=True)
class CsiErrorModel:
    """Estimation error ``eps ~ CN(0, zeta * sigma^2)`` on every coefficient."""

    zeta: float = 0.0

    def __post_init__(self):
        if self.zeta < 0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")
        if self.zeta >= 1:
            raise ValueError(f"zeta must be below 1, got {self.zeta}")


def corrupt_csi(links: np.ndarray, model: CsiErrorModel, variance, rng: np.random.Generator) -> np.ndarray:
    """Return the estimate ``links - eps`` with fresh ``eps ~ CN(0, zeta*variance)``.

    The error is always drawn (scaled by zero when ``zeta == 0``) so that runs
    differing only in ``zeta`` consume identical random streams. ``variance``
    may be an array broadcastable against ``links``.
    """
    if model.zeta < 0:
        raise ValueError(f"zeta must be nonnegative, got {model.zeta}")
    unit = sample_links(np.shape(links), 1.0, rng)
    return links - unit * np.sqrt(model.zeta * np.asarray(variance, dtype=float))


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    g: np.ndarray
    f: Optional[np.ndarray] = None

    @property
    def n_elements(self) -> int:
        return self.h.shape[-1]

    @property
    def n_users(self) -> int:
        return self.g.shape[-2]


def sample_realization(budget: LinkBudget, n_elements: int, rng: np.random.Generator,
                       los: bool = False, batch: Optional[int] = None) -> ChannelRealization:
    """Draw h (N,), g (K, N) and optionally f (K,).

    With ``batch`` set, every array gains a leading axis of that length.
    The draw order is h, g (user by user), f.
    """
    lead = () if batch is None else (batch,)
    k = len(budget.sigma2_g)
    h = sample_links(lead + (n_elements,), budget.sigma2_h, rng)
    g = sample_links(lead + (k, n_elements), 1.0, rng)
    g *= np.sqrt(np.asarray(budget.sigma2_g))[:, None]
    f = None
    if los:
        f = sample_links(lead + (k,), 1.0, rng) * np.sqrt(np.asarray(budget.sigma2_f))
    return ChannelRealization(h, g, f)
