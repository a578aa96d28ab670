"""Deterministic system description: geometry, path loss and link budgets.

Powers are carried in linear milliwatts (``10 ** (dBm / 10)``). Only the
ratio P_t / N_0 enters any SINR, so the mW convention cancels; mixing it
with watts would silently shift every result by 30 dB.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

# Validity range of the UMi NLOS model.
DISTANCE_RANGE_M = (10.0, 2000.0)
FREQUENCY_RANGE_GHZ = (2.0, 6.0)


class ModelRangeWarning(UserWarning):
    """A distance or frequency falls outside the path-loss model's range."""


@dataclass(frozen=True)
class NodePosition:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")


def distance(a: NodePosition, b: NodePosition) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def path_loss_db(d: float, fc_ghz: float) -> float:
    """3GPP UMi NLOS path loss ``36.7 log10(d) + 22.7 + 26 log10(fc)`` in dB.

    ``d`` is in meters and ``fc_ghz`` in GHz. Values outside the model's
    validity range produce a :class:`ModelRangeWarning` but are still
    evaluated.
    """
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    if not fc_ghz > 0:
        raise ValueError(f"carrier frequency must be positive, got {fc_ghz}")
    lo, hi = DISTANCE_RANGE_M
    if not lo <= d <= hi:
        warnings.warn(f"distance {d:.3f} m outside [{lo:g}, {hi:g}] m", ModelRangeWarning, stacklevel=2)
    lo, hi = FREQUENCY_RANGE_GHZ
    if not lo <= fc_ghz <= hi:
        warnings.warn(f"fc {fc_ghz:g} GHz outside [{lo:g}, {hi:g}] GHz", ModelRangeWarning, stacklevel=2)
    return 36.7 * math.log10(d) + 22.7 + 26.0 * math.log10(fc_ghz)


def link_variance(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


def dbm_to_mw(dbm):
    return 10.0 ** (dbm / 10.0)


def uniform_sizes(n_elements: int, n_users: int) -> tuple[int, ...]:
    """Split N elements into K near-equal contiguous blocks (extras go first)."""
    base, extra = divmod(n_elements, n_users)
    return tuple(base + (1 if k < extra else 0) for k in range(n_users))


def _is_pow2(m: int) -> bool:
    return m >= 2 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class LinkBudget:
    sigma2_h: float
    sigma2_g: tuple[float, ...]
    pt_linear: float
    n0_linear: float
    # BS->UE direct links, only used when a line-of-sight path is simulated
    sigma2_f: tuple[float, ...] = ()

    def __post_init__(self):
        vals = (self.sigma2_h, self.pt_linear, self.n0_linear, *self.sigma2_g, *self.sigma2_f)
        if not all(v > 0 for v in vals):
            raise ValueError("link budget entries must be strictly positive")


@dataclass(frozen=True)
class Scenario:
    """The deterministic world of one experiment.

    ``partition_sizes`` defaults to a near-uniform split; ``modulation_orders``
    defaults to BPSK for every user.
    """

    ue_positions: tuple[NodePosition, ...]
    ris_position: NodePosition
    bs_position: NodePosition
    fc_ghz: float = 2.4
    n0_dbm: float = -130.0
    pt_dbm: float = 0.0
    n_elements: int = 512
    partition_sizes: tuple[int, ...] = ()
    qos_rate_bps_hz: float = 2.0
    bandwidth: float = 1.0
    modulation_orders: tuple[int, ...] = ()

    def __post_init__(self):
        ues = tuple(p if isinstance(p, NodePosition) else NodePosition(*p) for p in self.ue_positions)
        object.__setattr__(self, "ue_positions", ues)
        for name in ("ris_position", "bs_position"):
            p = getattr(self, name)
            if not isinstance(p, NodePosition):
                object.__setattr__(self, name, NodePosition(*p))
        for name in ("fc_ghz", "n0_dbm", "pt_dbm", "qos_rate_bps_hz", "bandwidth"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name}: must be finite")
        k = len(ues)
        if k < 1:
            raise ValueError("ue_positions: at least one UE is required")
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements: must be a positive integer, got {self.n_elements}")
        if not self.partition_sizes:
            object.__setattr__(self, "partition_sizes", uniform_sizes(self.n_elements, k))
        else:
            object.__setattr__(self, "partition_sizes", tuple(int(s) for s in self.partition_sizes))
        if not self.modulation_orders:
            object.__setattr__(self, "modulation_orders", (2,) * k)
        else:
            object.__setattr__(self, "modulation_orders", tuple(int(m) for m in self.modulation_orders))
        sizes = self.partition_sizes
        if len(sizes) != k:
            raise ValueError(f"partition_sizes: expected {k} entries, got {len(sizes)}")
        if any(s < 1 for s in sizes):
            raise ValueError("partition_sizes: entries must be positive")
        if sum(sizes) != self.n_elements:
            raise ValueError(f"partition_sizes sum {sum(sizes)} != n_elements {self.n_elements}")
        if len(self.modulation_orders) != k:
            raise ValueError(f"modulation_orders: expected {k} entries, got {len(self.modulation_orders)}")
        if not all(_is_pow2(m) for m in self.modulation_orders):
            raise ValueError("modulation_orders: each order must be a power of two >= 2")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth: must be positive")
        if self.qos_rate_bps_hz < 0:
            raise ValueError("qos_rate_bps_hz: must be nonnegative")
        if not self.fc_ghz > 0:
            raise ValueError("fc_ghz: must be positive")

    @property
    def n_users(self) -> int:
        return len(self.ue_positions)

    def with_updates(self, **changes) -> "Scenario":
        if "ue_positions" in changes or "n_elements" in changes:
            changes.setdefault("partition_sizes", ())
        if "ue_positions" in changes:
            changes.setdefault("modulation_orders", ())
        return replace(self, **changes)

    def select_users(self, indices: Sequence[int]) -> "Scenario":
        """Sub-scenario with the given 0-based users and a uniform split."""
        return replace(
            self,
            ue_positions=tuple(self.ue_positions[i] for i in indices),
            modulation_orders=tuple(self.modulation_orders[i] for i in indices),
            partition_sizes=(),
        )

    def link_budget(self) -> LinkBudget:
        ris, bs = self.ris_position, self.bs_position
        s2h = link_variance(path_loss_db(distance(ris, bs), self.fc_ghz))
        s2g = tuple(link_variance(path_loss_db(distance(u, ris), self.fc_ghz)) for u in self.ue_positions)
        s2f = tuple(link_variance(path_loss_db(distance(u, bs), self.fc_ghz)) for u in self.ue_positions)
        return LinkBudget(s2h, s2g, dbm_to_mw(self.pt_dbm), dbm_to_mw(self.n0_dbm), s2f)


TABLE1_UES = ((15.0, 12.0), (10.0, 8.0), (5.0, 2.0), (2.0, 1.0))


def table1_scenario(n_users: int = 4, **overrides) -> Scenario:
    """Reference geometry: four UEs, RIS at (35, 5), BS at (55, 10), 2.4 GHz, N0 = -130 dBm."""
    kw = dict(
        ue_positions=TABLE1_UES[:n_users],
        ris_position=(35.0, 5.0),
        bs_position=(55.0, 10.0),
        fc_ghz=2.4,
        n0_dbm=-130.0,
    )
    kw.update(overrides)
    return Scenario(**kw)
