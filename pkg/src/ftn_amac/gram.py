"""Toeplitz Gram matrices of the FTN sampling model.

``G_delta`` collects the pulse autocorrelation at the symbol spacing and
``G_12``/``G_21`` the cross terms between the two users' sampling grids.

Two Schur complements of the stacked matrix ``[[G, G_12], [G_21, G]]`` are
kept. ``q = G - G_12 G^-1 G_21`` is the complement of the lower-right block
and satisfies ``G^-1/2 q G^-1/2 = I - K K^H`` for the whitened cross term
``K``. ``schur = G - G_21 G^-1 G_12`` is the complement of the upper-left
block, the one the 2x2 block-inverse formula needs. The Toeplitz matrices are
persymmetric, so ``schur = J q J`` with ``J`` the exchange matrix; both share
their spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as la

from .pulse import PulseShape, autocorr, stability_bound

__all__ = [
    "EIGEN_FLOOR",
    "SYNC_TOL",
    "GramError",
    "GramSet",
    "CrossSvd",
    "build_gram",
    "build_gram_set",
    "cross_svd",
    "sym_sqrt",
    "identity_svd",
]

EIGEN_FLOOR = 1e-10
SYNC_TOL = 1e-12


class GramError(ValueError):
    """Raised when a Gram matrix fails its positive-definiteness certificate."""


def _check_delta(pulse: PulseShape, delta: float):
    lo = stability_bound(pulse.beta)
    # tolerate rounding of 1/(1+beta) itself, e.g. delta=0.8 for beta=0.25
    if not lo - 1e-12 <= delta <= 1.0:
        raise ValueError(
            f"acceleration factor delta={delta} outside the stable range "
            f"[1/(1+beta), 1] = [{lo:.6g}, 1]; below 1/(1+beta) the Gram "
            "matrix has eigenvalues approaching zero"
        )


def build_gram(pulse: PulseShape, delta: float, n: int, offset: float = 0.0) -> np.ndarray:
    """N x N Toeplitz matrix with entries ``g((r - s) delta T + offset)``."""
    if n < 1:
        raise ValueError(f"symbol count must be >= 1, got {n}")
    _check_delta(pulse, delta)
    lags = np.arange(-(n - 1), n) * delta * pulse.T + offset
    g = autocorr(pulse, lags)
    idx = np.arange(n)
    # row r, column s -> lag index (r - s) + (n - 1)
    return np.asarray(g)[idx[:, None] - idx[None, :] + n - 1]


def sym_sqrt(a: np.ndarray, floor: float = EIGEN_FLOOR):
    """Symmetric square root and inverse square root of an SPD matrix."""
    w, v = la.eigh(a)
    w = np.maximum(w, floor)
    root = (v * np.sqrt(w)) @ v.conj().T
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    return root, inv_root


@dataclass(frozen=True)
class GramSet:
    """All temporal matrices for one (pulse, delta, N, tau1 - tau2) setting."""

    pulse: PulseShape
    n: int
    delta: float
    tau_diff: float
    g_matrix: np.ndarray
    g12: np.ndarray
    g21: np.ndarray
    q: np.ndarray
    schur: np.ndarray
    g_sqrt: np.ndarray
    g_inv_sqrt: np.ndarray
    g_min_eig: float
    q_min_eig: float
    synchronous: bool

    @property
    def t_sym(self) -> float:
        return self.pulse.T

    @property
    def block_duration(self) -> float:
        """``N delta T``, the time span of one block."""
        return self.n * self.delta * self.pulse.T


def build_gram_set(pulse: PulseShape, delta: float, n: int,
                   tau1: float = 0.0, tau2: float = 0.0) -> GramSet:
    """Assemble ``G_delta``, ``G_12``, ``G_21``, ``Q`` and the square roots.

    Raises
    ------
    GramError
        If the smallest eigenvalue of ``G_delta`` is at or below
        ``EIGEN_FLOOR``.

    Notes
    -----
    When ``|tau1 - tau2| <= SYNC_TOL`` the set is flagged ``synchronous``;
    ``Q`` is then zero and rate evaluation must use the single-stream model.
    ``q_min_eig`` is recorded, not enforced; it can underflow to rounding
    level at the stability boundary for long blocks.
    """
    tau_diff = float(tau1 - tau2)
    if abs(tau_diff) >= delta * pulse.T:
        raise ValueError(
            f"|tau1 - tau2| = {abs(tau_diff)} must be below one FTN symbol "
            f"delta*T = {delta * pulse.T}"
        )
    g = build_gram(pulse, delta, n)
    w, v = la.eigh(g)
    g_min = float(w[0])
    if g_min <= EIGEN_FLOOR:
        raise GramError(
            f"G_delta is numerically singular: min eigenvalue {g_min:.3e} <= {EIGEN_FLOOR:g} "
            f"(beta={pulse.beta}, delta={delta}, N={n})"
        )
    g_sqrt = (v * np.sqrt(w)) @ v.T
    g_inv_sqrt = (v / np.sqrt(w)) @ v.T

    synchronous = abs(tau_diff) <= SYNC_TOL
    if synchronous:
        g12 = g.copy()
        g21 = g.copy()
        q = np.zeros_like(g)
        schur = q.copy()
        q_min = 0.0
    else:
        g12 = build_gram(pulse, delta, n, tau_diff)
        g21 = build_gram(pulse, delta, n, -tau_diff)
        cho = la.cho_factor(g, lower=True)
        q = g - g12 @ la.cho_solve(cho, g21)
        q = 0.5 * (q + q.T)
        schur = g - g21 @ la.cho_solve(cho, g12)
        schur = 0.5 * (schur + schur.T)
        # no error on q_min <= 0: at delta = 1/(1+beta) and N >= 16 the two
        # sampling grids oversample the pulse band and q is singular to
        # working precision; rates never invert it, noise_cov_inverse does.
        q_min = float(la.eigvalsh(q)[0])

    return GramSet(
        pulse=pulse, n=n, delta=float(delta), tau_diff=tau_diff,
        g_matrix=g, g12=g12, g21=g21, q=q, schur=schur,
        g_sqrt=g_sqrt, g_inv_sqrt=g_inv_sqrt,
        g_min_eig=g_min, q_min_eig=q_min, synchronous=synchronous,
    )


@dataclass(frozen=True)
class CrossSvd:
    """SVD ``u diag(lam) v^H`` of the whitened cross-coupling matrix."""

    u: np.ndarray
    v: np.ndarray
    lam: np.ndarray


def cross_svd(gram: GramSet) -> CrossSvd:
    """SVD of ``G^{-1/2} G_12 G^{-1/2}`` with nonincreasing singular values."""
    if gram.synchronous:
        raise ValueError("cross_svd is undefined for a synchronous GramSet (Q = 0)")
    k = gram.g_inv_sqrt @ gram.g12 @ gram.g_inv_sqrt
    try:
        u, lam, vh = la.svd(k)
    except la.LinAlgError as exc:
        raise la.LinAlgError(f"SVD of whitened cross Gram did not converge: {exc}") from exc
    return CrossSvd(u=u, v=vh.conj().T, lam=lam)


def identity_svd(n: int) -> CrossSvd:
    """Cross-coupling factors of a synchronous setting (``K = I``)."""
    eye = np.eye(n)
    return CrossSvd(u=eye, v=eye.copy(), lam=np.ones(n))
