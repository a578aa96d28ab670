"""Fairness-driven RIS element allocation.

The objective is the sum of pairwise absolute outage gaps between users.
Only the two-user case is searched (exhaustively over ``N1 = 1 .. N-1``);
larger K has no practical exact search and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .theory import noma_outage


@dataclass(frozen=True)
class PartitionCandidate:
    sizes: tuple[int, ...]
    objective: float
    outages: tuple[float, ...] = ()


@dataclass(frozen=True)
class PartitionSearch:
    best: PartitionCandidate
    curve: tuple[PartitionCandidate, ...]

    @property
    def best_index(self) -> int:
        return self.curve.index(self.best)


def fairness_objective(outages: Sequence[float]) -> float:
    p = [float(v) for v in outages]
    if not p:
        raise ValueError("need at least one outage probability")
    if any(not 0.0 <= v <= 1.0 for v in p):
        raise ValueError("outage probabilities must lie in [0, 1]")
    return float(sum(abs(a - b) for a, b in combinations(p, 2)))


def search_partition_k2(scenario, pt_dbm: Optional[float] = None, rate: Optional[float] = None) -> PartitionSearch:
    """Exhaustive N1 sweep for a two-user scenario.

    Outages come from the analytical model, so the search is deterministic.
    Ties go to the smaller N1.
    """
    if scenario.n_users != 2:
        raise NotImplementedError("partition search is only supported for K = 2")
    n = scenario.n_elements
    if n < 2:
        raise ValueError("need at least two RIS elements")
    curve = []
    for n1 in range(1, n):
        sc = scenario.with_updates(partition_sizes=(n1, n - n1))
        outs = tuple(noma_outage(sc, k, pt_dbm, rate) for k in range(2))
        curve.append(PartitionCandidate((n1, n - n1), fairness_objective(outs), outs))
    objective = np.array([c.objective for c in curve])
    best = curve[int(np.argmin(objective))]  # argmin returns the first minimum
    return PartitionSearch(best, tuple(curve))
