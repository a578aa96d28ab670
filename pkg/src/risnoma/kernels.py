"""Monte Carlo hot loops.

Every kernel has a ``_loop`` version (numba) and a ``_numpy`` version with
identical semantics. The public names dispatch on :data:`_accel.USE_NUMBA`.

Array conventions, for a batch of ``T`` channel draws, ``K`` users and ``N``
RIS elements:

* ``h``: (T, N) BS->RIS coefficients.
* ``g``: (T, K, N) RIS->UE coefficients.
* ``h_est``, ``g_est``: the channel estimates the RIS controller uses to set
  its phases (identical to ``h``, ``g`` under perfect CSI).
* ``bounds``: (K + 1,) partition boundaries, block ``k`` is
  ``bounds[k]:bounds[k + 1]``.

The coupling matrix ``C[t, k, j]`` is the contribution of partition ``j`` to
user ``k`` before the partition's symbol phase is applied::

    C[t, k, j] = sum_{n in block j} h[t, n] g[t, k, n] exp(-1j (arg h_est[t, n] + arg g_est[t, j, n]))

so that the noiseless received sample of user ``k`` is
``sqrt(P) * sum_j exp(1j xi_j) C[t, k, j]``. It does not depend on the
transmitted symbols, which lets one channel draw serve many symbols.
"""

import numpy as np

from . import _accel
from ._accel import njit

TWO_PI = 2.0 * np.pi


def unit_conj(z):
    """exp(-1j * angle(z)); zero-magnitude entries get phase 0."""
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = np.conj(z[nz]) / mag[nz]
    return out


# -- coupling matrix ---------------------------------------------------------

@njit
def _unit_conj(z):
    m2 = z.real * z.real + z.imag * z.imag
    if m2 == 0.0:
        return 1.0 + 0.0j
    s = 1.0 / np.sqrt(m2)
    return complex(z.real * s, -z.imag * s)


@njit
def _coupling_loop(h, g, h_est, g_est, bounds):
    T, K, N = g.shape
    out = np.zeros((T, K, K), dtype=np.complex128)
    for t in range(T):
        for j in range(K):
            for n in range(bounds[j], bounds[j + 1]):
                rot = h[t, n] * _unit_conj(h_est[t, n]) * _unit_conj(g_est[t, j, n])
                for k in range(K):
                    out[t, k, j] += rot * g[t, k, n]
    return out


def _coupling_numpy(h, g, h_est, g_est, bounds):
    T, K, N = g.shape
    out = np.empty((T, K, K), dtype=np.complex128)
    hrot = h * unit_conj(h_est)
    for j in range(K):
        sl = slice(bounds[j], bounds[j + 1])
        rot = hrot[:, sl] * unit_conj(g_est[:, j, sl])
        out[:, :, j] = np.einsum("tn,tkn->tk", rot, g[:, :, sl])
    return out


@njit
def _tdma_coupling_loop(h, g, h_est, g_est):
    T, K, N = g.shape
    out = np.zeros((T, K), dtype=np.complex128)
    for t in range(T):
        for n in range(N):
            hr = h[t, n] * _unit_conj(h_est[t, n])
            for k in range(K):
                out[t, k] += hr * g[t, k, n] * _unit_conj(g_est[t, k, n])
    return out


def _tdma_coupling_numpy(h, g, h_est, g_est):
    hrot = h * unit_conj(h_est)
    return np.einsum("tn,tkn->tk", hrot, g * unit_conj(g_est))


# -- symbol detection --------------------------------------------------------

@njit
def _popcount(x):
    c = 0
    while x:
        c += x & 1
        x >>= 1
    return c


@njit
def _detect_loop(coupling, symbols, noise, direct, sqrt_p, orders):
    T, L, K = symbols.shape
    bit_err = np.zeros(K, dtype=np.int64)
    sym_err = np.zeros(K, dtype=np.int64)
    phasor = np.empty(K, dtype=np.complex128)
    for t in range(T):
        for l in range(L):
            for j in range(K):
                phasor[j] = np.exp(1j * TWO_PI * symbols[t, l, j] / orders[j])
            for k in range(K):
                s = 0j
                for j in range(K):
                    s += phasor[j] * coupling[t, k, j]
                y = sqrt_p * (s + direct[t, k]) + noise[t, l, k]
                # receiver strips the known direct-path term
                y = y - sqrt_p * direct[t, k]
                m = orders[k]
                ang = np.arctan2(y.imag, y.real)
                # nearest phase; exact midpoints round up, unlike ml_detect (measure zero)
                mu_hat = int(np.floor(ang * m / TWO_PI + 0.5)) % m
                mu = symbols[t, l, k]
                if mu_hat != mu:
                    sym_err[k] += 1
                    bit_err[k] += _popcount((mu ^ (mu >> 1)) ^ (mu_hat ^ (mu_hat >> 1)))
    return bit_err, sym_err


def _detect_numpy(coupling, symbols, noise, direct, sqrt_p, orders):
    phasor = np.exp(1j * TWO_PI * symbols / orders)
    s = np.einsum("tkj,tlj->tlk", coupling, phasor)
    y = sqrt_p * (s + direct[:, None, :]) + noise
    y = y - sqrt_p * direct[:, None, :]
    mu_hat = np.floor(np.angle(y) * orders / TWO_PI + 0.5).astype(np.int64) % orders
    wrong = mu_hat != symbols
    diff = (symbols ^ (symbols >> 1)) ^ (mu_hat ^ (mu_hat >> 1))
    bits = np.bitwise_count(diff.astype(np.uint64)).astype(np.int64)
    return bits.sum(axis=(0, 1)), wrong.sum(axis=(0, 1)).astype(np.int64)


# -- SINR components ---------------------------------------------------------

@njit
def _sinr_parts_loop(coupling, symbols, orders):
    T, L, K = symbols.shape
    useful = np.empty((T, L, K))
    interf = np.empty((T, L, K))
    phasor = np.empty(K, dtype=np.complex128)
    for t in range(T):
        for l in range(L):
            for j in range(K):
                phasor[j] = np.exp(1j * TWO_PI * symbols[t, l, j] / orders[j])
            for k in range(K):
                s = 0j
                for j in range(K):
                    if j != k:
                        s += phasor[j] * coupling[t, k, j]
                c = coupling[t, k, k]
                useful[t, l, k] = c.real * c.real + c.imag * c.imag
                interf[t, l, k] = s.real * s.real + s.imag * s.imag
    return useful, interf


def _sinr_parts_numpy(coupling, symbols, orders):
    T, L, K = symbols.shape
    phasor = np.exp(1j * TWO_PI * symbols / orders)
    diag = np.einsum("tkk->tk", coupling)
    off = coupling.copy()
    idx = np.arange(K)
    off[:, idx, idx] = 0.0
    s = np.einsum("tkj,tlj->tlk", off, phasor)
    useful = np.broadcast_to(np.abs(diag[:, None, :]) ** 2, (T, L, K)).copy()
    return useful, np.abs(s) ** 2


if _accel.USE_NUMBA:
    coupling_matrix = _coupling_loop
    tdma_coupling = _tdma_coupling_loop
    detect_errors = _detect_loop
    sinr_parts = _sinr_parts_loop
else:
    coupling_matrix = _coupling_numpy
    tdma_coupling = _tdma_coupling_numpy
    detect_errors = _detect_numpy
    sinr_parts = _sinr_parts_numpy
