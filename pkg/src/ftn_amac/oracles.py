"""Independent dense reference computations.

These deliberately avoid the structured shortcuts used elsewhere in the
package (Kronecker simplification, Schur-block inverse, factored square
roots) so they can serve as cross-checks in tests and in ``validate``.
"""

from __future__ import annotations

import numpy as np

from .channel import MimoChannel
from .gram import GramSet
from .pulse import PulseShape, autocorr

LN2 = np.log(2.0)


def entrywise_noise_cov(pulse: PulseShape, delta: float, n: int, m: int,
                        tau1: float, tau2: float, sigma0_sq: float = 1.0) -> np.ndarray:
    """Noise sample covariance built entry by entry from the sampling instants.

    Sample ``(k', m, i)`` is taken at ``i delta T + tau_k'`` on antenna ``m``;
    noise is white across antennas and has correlation ``sigma0_sq g(dt)`` in
    time.
    """
    taus = (tau1, tau2)
    idx = [(kp, ant, i) for kp in range(2) for ant in range(m) for i in range(n)]
    out = np.zeros((len(idx), len(idx)))
    for a, (ka, ma, ia) in enumerate(idx):
        for b, (kb, mb, ib) in enumerate(idx):
            if ma != mb:
                continue
            dt = (ia - ib) * delta * pulse.T + taus[ka] - taus[kb]
            out[a, b] = sigma0_sq * autocorr(pulse, dt)
    return out


def dense_channel_matrix(channel: MimoChannel, gram: GramSet) -> np.ndarray:
    """The ``2MN x 2LN`` composite channel matrix of the two-grid model."""
    h1, h2 = channel.h1, channel.h2
    return np.block([
        [np.kron(h1, gram.g_matrix), np.kron(h2, gram.g12)],
        [np.kron(h1, gram.g21), np.kron(h2, gram.g_matrix)],
    ])


def dense_noise_cov(gram: GramSet, m: int, sigma0_sq: float = 1.0) -> np.ndarray:
    eye = np.eye(m)
    return sigma0_sq * np.block([
        [np.kron(eye, gram.g_matrix), np.kron(eye, gram.g12)],
        [np.kron(eye, gram.g21), np.kron(eye, gram.g_matrix)],
    ])


def dense_kron_blocks(channel: MimoChannel, gram: GramSet) -> np.ndarray:
    """``H^H Sigma_Omega^-1 H`` by a general dense solve."""
    h = dense_channel_matrix(channel, gram)
    return h.conj().T @ np.linalg.solve(dense_noise_cov(gram, channel.m), h)


def definitional_sum_rate(channel: MimoChannel, gram: GramSet, sigma_a1: np.ndarray,
                          sigma_a2: np.ndarray, sigma0_sq: float = 1.0) -> float:
    """``(log det E[Y Y^H] - log det Sigma_Omega) / (N delta T)`` in bits/s."""
    h = dense_channel_matrix(channel, gram)
    s = np.block([
        [sigma_a1, np.zeros((sigma_a1.shape[0], sigma_a2.shape[1]))],
        [np.zeros((sigma_a2.shape[0], sigma_a1.shape[1])), sigma_a2],
    ])
    noise = dense_noise_cov(gram, channel.m, sigma0_sq)
    _, ld_y = np.linalg.slogdet(h @ s @ h.conj().T + noise)
    _, ld_n = np.linalg.slogdet(noise)
    return (ld_y - ld_n) / LN2 / gram.block_duration


def classic_mac_rates(h1, h2, z1, z2, sigma0_sq: float = 1.0):
    """Pentagon of the memoryless MIMO MAC with input covariances ``z1, z2``."""
    m = h1.shape[0]

    def ld(a):
        return np.linalg.slogdet(np.eye(m) + a / sigma0_sq)[1] / LN2

    a1 = h1 @ z1 @ h1.conj().T
    a2 = h2 @ z2 @ h2.conj().T
    return ld(a1), ld(a2), ld(a1 + a2)


def ftn_single_user_capacity(mu, levels, delta: float, t_sym: float = 1.0,
                             sigma0_sq: float = 1.0) -> float:
    """Closed-form MIMO-FTN single-user rate with ``Sigma = Z kron delta T G^-1``.

    ``(1/(delta T)) sum_i log2(1 + delta T mu_i levels_i / sigma0_sq)``.
    """
    dT = delta * t_sym
    mu = np.asarray(mu, dtype=float)
    levels = np.asarray(levels, dtype=float)
    return float(np.sum(np.log2(1.0 + dT * mu * levels / sigma0_sq)) / dT)
