"""RIS-partitioned downlink physical layer.

Each RIS partition serves one user: its elements cancel the phases of the
cascaded channel and add that user's PSK symbol phase, so the BS only has to
radiate an unmodulated carrier. Indices are 0-based throughout.

PSK convention: symbol ``mu`` has phase ``2*pi*mu/M`` and carries the
binary-reflected Gray code of ``mu`` (most significant bit first).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Partition:
    """K disjoint contiguous blocks covering ``range(N)``."""

    bounds: tuple[int, ...]

    @property
    def n_users(self) -> int:
        return len(self.bounds) - 1

    @property
    def n_elements(self) -> int:
        return self.bounds[-1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.bounds[:-1], self.bounds[1:]))

    @property
    def index_sets(self) -> tuple[np.ndarray, ...]:
        return tuple(np.arange(a, b) for a, b in zip(self.bounds[:-1], self.bounds[1:]))

    def block(self, k: int) -> slice:
        return slice(self.bounds[k], self.bounds[k + 1])

    def owner(self) -> np.ndarray:
        """Owning user of every element."""
        return np.repeat(np.arange(self.n_users), self.sizes)


def partition(n_elements: int, sizes: Sequence[int]) -> Partition:
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise ValueError("partition sizes must be positive")
    if sum(sizes) != n_elements:
        raise ValueError(f"partition sizes sum to {sum(sizes)}, expected {n_elements}")
    return Partition(tuple(int(b) for b in np.concatenate(([0], np.cumsum(sizes)))))


def gray_encode(mu):
    return mu ^ (mu >> 1)


def gray_decode(code):
    mu = code
    shift = code >> 1
    while np.any(shift):
        mu = mu ^ shift
        shift = shift >> 1
    return mu


@dataclass(frozen=True)
class PskSymbol:
    index: int
    order: int

    @property
    def phase(self) -> float:
        return TWO_PI * self.index / self.order


def _bits_per_symbol(order: int) -> int:
    if order < 2 or order & (order - 1):
        raise ValueError(f"modulation order must be a power of two >= 2, got {order}")
    return order.bit_length() - 1


def psk_symbol(bits: Sequence[int], order: int) -> PskSymbol:
    nb = _bits_per_symbol(order)
    if len(bits) != nb:
        raise ValueError(f"expected {nb} bits for M={order}, got {len(bits)}")
    code = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0/1, got {b}")
        code = (code << 1) | int(b)
    return PskSymbol(int(gray_decode(code)), order)


def symbol_bits(index: int, order: int) -> list[int]:
    nb = _bits_per_symbol(order)
    code = gray_encode(index)
    return [(code >> (nb - 1 - i)) & 1 for i in range(nb)]


def wrap_phase(x):
    """Map angles to [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, TWO_PI) - np.pi


def safe_angle(z):
    """Phase of ``z``; exact zeros are defined to have phase 0."""
    z = np.asarray(z)
    return np.where(z == 0, 0.0, np.angle(z))


@dataclass(frozen=True)
class RisConfiguration:
    theta: np.ndarray


def configure_ris(h, g, symbols: Sequence[PskSymbol], part: Partition) -> RisConfiguration:
    """Align each partition to its user and imprint that user's symbol phase.

    ``theta[n] = xi_k - angle(h[n]) - angle(g[k, n])`` for ``n`` in block ``k``.
    Pass channel estimates here to model imperfect CSI.
    """
    h = np.asarray(h)
    g = np.atleast_2d(np.asarray(g))
    if h.shape[-1] != part.n_elements or g.shape[-1] != part.n_elements:
        raise ValueError("channel length does not match partition size")
    if len(symbols) != part.n_users or g.shape[0] != part.n_users:
        raise ValueError("need one symbol and one RIS->UE vector per user")
    theta = np.empty(part.n_elements)
    for k, sym in enumerate(symbols):
        sl = part.block(k)
        theta[sl] = sym.phase - safe_angle(h[sl]) - safe_angle(g[k, sl])
    return RisConfiguration(wrap_phase(theta))


def synthesize_rx(pt_linear: float, h, g_k, theta, noise_sample: complex = 0.0,
                  direct: Optional[complex] = None) -> complex:
    """``sqrt(Pt) * (f_k + sum_n g_k[n] exp(1j theta[n]) h[n]) + w``."""
    theta = theta.theta if isinstance(theta, RisConfiguration) else np.asarray(theta)
    s = np.sum(np.asarray(g_k) * np.exp(1j * theta) * np.asarray(h))
    if direct is not None:
        s = s + direct
    return complex(np.sqrt(pt_linear) * s + noise_sample)


def decompose_rx(h, g, part: Partition, symbols: Sequence[PskSymbol], k: int) -> tuple[complex, complex]:
    """Noise-free received sample of user ``k`` split as (useful, interference).

    useful = exp(1j xi_k) * sum_{n in I_k} |h_n||g_nk|
    interference = sum_{j != k} sum_{n in I_j} |h_n| g_nk exp(1j (xi_j - psi_nj))
    Both exclude the sqrt(Pt) factor.
    """
    h = np.asarray(h)
    g = np.atleast_2d(np.asarray(g))
    alpha = np.abs(h)
    useful = np.exp(1j * symbols[k].phase) * np.sum(alpha[part.block(k)] * np.abs(g[k, part.block(k)]))
    interf = 0j
    for j in range(part.n_users):
        if j == k:
            continue
        sl = part.block(j)
        interf += np.sum(alpha[sl] * g[k, sl] * np.exp(1j * (symbols[j].phase - safe_angle(g[j, sl]))))
    return complex(useful), complex(interf)


def instantaneous_sinr(pt_linear: float, h, g, part: Partition, symbols: Sequence[PskSymbol],
                       n0_linear: float, k: int) -> float:
    """SINR of user ``k`` under perfect-CSI alignment (``g`` holds all K vectors)."""
    useful, interf = decompose_rx(h, g, part, symbols, k)
    return pt_linear * abs(useful) ** 2 / (pt_linear * abs(interf) ** 2 + n0_linear)


def ml_detect(y: complex, delta: float, order: int, direct: Optional[tuple[complex, float]] = None) -> int:
    """``argmin_mu |y' - exp(1j 2 pi mu / M) delta|^2``, ties to the lowest index.

    ``direct=(f_k, pt_linear)`` removes a known line-of-sight term first.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    if direct is not None:
        f_k, pt = direct
        y = y - np.sqrt(pt) * f_k
    ref = delta * np.exp(1j * TWO_PI * np.arange(order) / order)
    dist = np.abs(y - ref) ** 2
    # reference points carry rounding error, so near-equal distances are ties
    tol = 1e-12 * (abs(y) + delta) ** 2
    return int(np.flatnonzero(dist <= dist.min() + tol)[0])


def bit_errors(mu, mu_hat) -> int:
    diff = np.bitwise_xor(gray_encode(np.asarray(mu)), gray_encode(np.asarray(mu_hat)))
    return int(np.sum(np.bitwise_count(diff.astype(np.uint64))))
