"""Noise covariance, log-det mutual informations and rate pentagons.

Rates are reported in bits per second: each log-det is taken over one block
of ``N`` symbols and divided by the block duration ``N delta T``, which puts
FTN (``delta < 1``) and Nyquist signaling on a common axis. The noise power
``sigma0_sq`` enters every expression as ``1/sigma0_sq``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as la

from .channel import MimoChannel, spatial_gram
from .gram import GramSet

__all__ = [
    "RateError",
    "CovariancePair",
    "NoiseInverse",
    "PowerReport",
    "RatePentagon",
    "noise_cov",
    "noise_cov_inverse",
    "kron_blocks",
    "single_user_rate",
    "sum_rate",
    "sum_rate_synchronous",
    "power_check",
    "pentagon",
]

LOG2E = 1.0 / np.log(2.0)


class RateError(ArithmeticError):
    """A log-det argument was not positive definite."""


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = la.eigh(0.5 * (a + a.conj().T))
    if w[0] < -1e-8 * max(1.0, abs(w[-1])):
        raise RateError(f"covariance is not PSD (min eigenvalue {w[0]:.3e})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


@dataclass(frozen=True)
class CovariancePair:
    """Input covariances of both users, optionally Kronecker structured.

    When ``structured`` the dense matrices are assembled exactly as
    ``z_k kron xi_k``.
    """

    sigma_a1: np.ndarray
    sigma_a2: np.ndarray
    z1: np.ndarray | None = None
    z2: np.ndarray | None = None
    xi1: np.ndarray | None = None
    xi2: np.ndarray | None = None
    structured: bool = False

    @classmethod
    def from_factors(cls, z1, xi1, z2, xi2) -> "CovariancePair":
        return cls(sigma_a1=np.kron(z1, xi1), sigma_a2=np.kron(z2, xi2),
                   z1=z1, z2=z2, xi1=xi1, xi2=xi2, structured=True)

    def sigma(self, k: int) -> np.ndarray:
        return self.sigma_a1 if k == 1 else self.sigma_a2

    def factors(self, k: int):
        return (self.z1, self.xi1) if k == 1 else (self.z2, self.xi2)

    def sqrt(self, k: int) -> np.ndarray:
        """PSD square root of ``Sigma_Ak`` (factor-wise when structured)."""
        if self.structured:
            z, xi = self.factors(k)
            return np.kron(_psd_sqrt(z), _psd_sqrt(xi))
        return _psd_sqrt(self.sigma(k))


def noise_cov(gram: GramSet, m: int, sigma0_sq: float = 1.0) -> np.ndarray:
    """Dense ``2MN x 2MN`` covariance of the matched-filter noise samples."""
    if gram.synchronous:
        raise ValueError("noise covariance of the two-grid model is singular when tau1 == tau2")
    eye = np.eye(m)
    out = sigma0_sq * np.block([
        [np.kron(eye, gram.g_matrix), np.kron(eye, gram.g12)],
        [np.kron(eye, gram.g21), np.kron(eye, gram.g_matrix)],
    ])
    # certified by Cholesky rather than the G_delta eigen-floor: at the
    # stability boundary the stacked matrix is PD with eigenvalues ~1e-12
    try:
        la.cholesky(out, lower=True)
    except la.LinAlgError as exc:
        raise RateError("noise covariance is not positive definite to working precision") from exc
    return out


@dataclass(frozen=True)
class NoiseInverse:
    """``Sigma_Omega^-1`` as four ``N x N`` blocks, each to be kron'd with ``I_M``."""

    b11: np.ndarray
    b12: np.ndarray
    b21: np.ndarray
    b22: np.ndarray
    m: int
    sigma0_sq: float

    def dense(self) -> np.ndarray:
        eye = np.eye(self.m)
        return np.block([
            [np.kron(eye, self.b11), np.kron(eye, self.b12)],
            [np.kron(eye, self.b21), np.kron(eye, self.b22)],
        ])


def noise_cov_inverse(gram: GramSet, m: int, sigma0_sq: float = 1.0) -> NoiseInverse:
    """Block inverse of the noise covariance through the Schur complement.

    With ``S = G - G_21 G^-1 G_12``::

        [[G^-1 + G^-1 G_12 S^-1 G_21 G^-1,  -G^-1 G_12 S^-1],
         [-S^-1 G_21 G^-1,                   S^-1          ]] / sigma0_sq
    """
    if gram.synchronous:
        raise RateError("Schur complement is zero for synchronous users; no inverse exists")
    g_cho = la.cho_factor(gram.g_matrix, lower=True)
    try:
        s_cho = la.cho_factor(gram.schur, lower=True)
    except la.LinAlgError as exc:
        raise RateError(
            f"Schur complement is singular to working precision (min eigenvalue {gram.q_min_eig:.3e})"
        ) from exc
    g_inv = la.cho_solve(g_cho, np.eye(gram.n))
    s_inv = la.cho_solve(s_cho, np.eye(gram.n))
    g_inv = 0.5 * (g_inv + g_inv.T)
    s_inv = 0.5 * (s_inv + s_inv.T)
    left = g_inv @ gram.g12  # G^-1 G_12
    right = gram.g21 @ g_inv  # G_21 G^-1
    b12 = -left @ s_inv
    b21 = -s_inv @ right
    b11 = g_inv + left @ s_inv @ right
    inv_s = 1.0 / sigma0_sq
    return NoiseInverse(b11=inv_s * b11, b12=inv_s * b12, b21=inv_s * b21,
                        b22=inv_s * s_inv, m=m, sigma0_sq=sigma0_sq)


def kron_blocks(channel: MimoChannel, gram: GramSet) -> np.ndarray:
    """``H^H Sigma_Omega^-1 H`` (unit noise) via the mixed-product simplification."""
    h1, h2 = channel.h1, channel.h2
    return np.block([
        [np.kron(spatial_gram(h1), gram.g_matrix), np.kron(h1.conj().T @ h2, gram.g12)],
        [np.kron(h2.conj().T @ h1, gram.g21), np.kron(spatial_gram(h2), gram.g_matrix)],
    ])


def _log2det_eye_plus(c: np.ndarray) -> float:
    """``log2 det(I + c c^H)`` via Cholesky of the Hermitian argument."""
    a = c @ c.conj().T
    a = 0.5 * (a + a.conj().T)
    a[np.diag_indices_from(a)] += 1.0
    try:
        low = la.cholesky(a, lower=True)
    except la.LinAlgError as exc:
        raise RateError("log-det argument is not positive definite") from exc
    return 2.0 * LOG2E * float(np.sum(np.log(np.real(np.diag(low)))))


def _log2det_sym(s_half: np.ndarray, k: np.ndarray, sigma0_sq: float) -> float:
    """``log2 det(I + S^1/2 K S^1/2 / sigma0_sq)`` for Hermitian PSD ``K``."""
    a = s_half.conj().T @ k @ s_half / sigma0_sq
    a = 0.5 * (a + a.conj().T)
    a[np.diag_indices_from(a)] += 1.0
    try:
        low = la.cholesky(a, lower=True)
    except la.LinAlgError as exc:
        raise RateError("log-det argument is not positive definite") from exc
    return 2.0 * LOG2E * float(np.sum(np.log(np.real(np.diag(low)))))


def single_user_rate(h_k: np.ndarray, gram: GramSet, sigma_ak: np.ndarray | None,
                     sigma0_sq: float = 1.0, sqrt: np.ndarray | None = None) -> float:
    """``log2 det(I_LN + (H^H H kron G) Sigma_Ak / sigma0_sq) / (N delta T)``.

    ``sqrt`` may carry a precomputed PSD square root of ``sigma_ak``.
    """
    s_half = _psd_sqrt(sigma_ak) if sqrt is None else sqrt
    k = np.kron(spatial_gram(h_k), gram.g_matrix)
    return _log2det_sym(s_half, k, sigma0_sq) / gram.block_duration


def sum_rate(channel: MimoChannel, gram: GramSet, cov: CovariancePair,
             sigma0_sq: float = 1.0, sqrts=None) -> float:
    """Sum-rate mutual information of the asynchronous two-grid model.

    Routes to :func:`sum_rate_synchronous` when the Gram set is flagged
    synchronous.
    """
    if gram.synchronous:
        return sum_rate_synchronous(channel, gram, cov, sigma0_sq, sqrts=sqrts)
    s1, s2 = sqrts if sqrts is not None else (cov.sqrt(1), cov.sqrt(2))
    s_half = la.block_diag(s1, s2)
    return _log2det_sym(s_half, kron_blocks(channel, gram), sigma0_sq) / gram.block_duration


def sum_rate_synchronous(channel: MimoChannel, gram: GramSet, cov: CovariancePair,
                         sigma0_sq: float = 1.0, sqrts=None) -> float:
    """Sum rate of the single-grid model (``tau1 == tau2``, MN samples).

    ``log2 det(I_MN + (I_M kron G)^-1 sum_k (H_k kron G) Sigma_Ak (H_k kron G)^H / sigma0_sq)``
    evaluated as ``log2 det(I + F F^H)`` with ``F`` the whitened, stacked
    per-user factors.
    """
    s1, s2 = sqrts if sqrts is not None else (cov.sqrt(1), cov.sqrt(2))
    m = channel.m
    g = gram.g_matrix
    g_low = la.cholesky(g, lower=True)
    # (I_M kron L)^-1 (H kron G) = H kron (L^-1 G) = H kron L^T
    white = g_low.T
    parts = []
    for h, s_half in ((channel.h1, s1), (channel.h2, s2)):
        parts.append(np.kron(h, white) @ s_half)
    f = np.hstack(parts) / np.sqrt(sigma0_sq)
    assert f.shape[0] == m * gram.n
    return _log2det_eye_plus(f) / gram.block_duration


@dataclass(frozen=True)
class PowerReport:
    """Per-user normalized transmit powers ``tr((I kron G) Sigma) / (N delta T)``."""

    ratios: tuple[float, float]
    budgets: tuple[float, float]
    feasible: bool
    slack: float = 1e-6

    def user_ok(self, k: int) -> bool:
        return self.ratios[k - 1] <= self.budgets[k - 1] * (1 + self.slack) + 1e-15


def power_check(cov: CovariancePair, gram: GramSet, p_k, slack: float = 1e-6) -> PowerReport:
    """Check ``tr((I_L kron G) Sigma_Ak) / (N delta T) <= P_k`` for both users.

    Structured covariances are also evaluated through the factorized trace
    ``tr(Z) tr(G^1/2 Xi G^1/2)`` and both paths must agree.
    """
    budgets = tuple(float(p) for p in np.broadcast_to(np.asarray(p_k, dtype=float), (2,)))
    g = gram.g_matrix
    n = gram.n
    ratios = []
    for k in (1, 2):
        sig = cov.sigma(k)
        l = sig.shape[0] // n
        # tr((I_L kron G) Sigma) = sum over diagonal N x N blocks of tr(G Sigma_ll)
        dense = sum(np.trace(g @ sig[i * n:(i + 1) * n, i * n:(i + 1) * n]) for i in range(l))
        dense = float(np.real(dense)) / gram.block_duration
        if cov.structured:
            z, xi = cov.factors(k)
            fact = float(np.real(np.trace(z) * np.trace(gram.g_sqrt @ xi @ gram.g_sqrt)))
            fact /= gram.block_duration
            if not np.isclose(dense, fact, rtol=1e-9, atol=1e-12):
                raise AssertionError(f"trace factorization mismatch for user {k}: {dense} vs {fact}")
        ratios.append(dense)
    report = PowerReport(ratios=tuple(ratios), budgets=budgets, feasible=True, slack=slack)
    ok = report.user_ok(1) and report.user_ok(2)
    return PowerReport(ratios=tuple(ratios), budgets=budgets, feasible=ok, slack=slack)


@dataclass(frozen=True)
class RatePentagon:
    """Rate constraints ``R1 <= r1_max, R2 <= r2_max, R1 + R2 <= r_sum``."""

    r1_max: float
    r2_max: float
    r_sum: float
    alpha: float = float("nan")
    metadata: dict = field(default_factory=dict)

    def corner(self, alpha: float | None = None) -> tuple[float, float]:
        """Boundary point targeted by the weight ``alpha``.

        ``alpha <= 1/2`` favours user 2 (``R2 = r2_max``), ``alpha > 1/2``
        favours user 1.
        """
        a = self.alpha if alpha is None else alpha
        if a <= 0.5:
            r2 = self.r2_max
            r1 = min(self.r_sum - r2, self.r1_max)
        else:
            r1 = self.r1_max
            r2 = min(self.r_sum - r1, self.r2_max)
        return max(r1, 0.0), max(r2, 0.0)


def pentagon(channel: MimoChannel, gram: GramSet, cov: CovariancePair,
             sigma0_sq: float = 1.0, alpha: float = float("nan"),
             metadata: dict | None = None, tol: float = 1e-9) -> RatePentagon:
    """Evaluate the three rate constraints for a fixed covariance pair."""
    s1, s2 = cov.sqrt(1), cov.sqrt(2)
    r1 = single_user_rate(channel.h1, gram, None, sigma0_sq, sqrt=s1)
    r2 = single_user_rate(channel.h2, gram, None, sigma0_sq, sqrt=s2)
    rs = sum_rate(channel, gram, cov, sigma0_sq, sqrts=(s1, s2))
    slack = tol * max(1.0, rs)
    if not (max(r1, r2) <= rs + slack and rs <= r1 + r2 + slack and min(r1, r2) >= -slack):
        raise RateError(f"pentagon invariant violated: r1={r1}, r2={r2}, r_sum={rs}")
    return RatePentagon(r1_max=r1, r2_max=r2, r_sum=rs, alpha=alpha,
                        metadata=dict(metadata or {}))
