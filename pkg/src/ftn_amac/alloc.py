"""Spatial waterfilling and the weighted temporal eigenvalue program.

The input covariance of user ``k`` is ``Sigma_k = Z_k kron Xi_k``. ``Z_k``
waterfills the spatial eigenmodes of ``H_k^H H_k``; ``Xi_k`` precodes in time
and is built from the eigenvalues ``psi_k`` returned by :func:`solve_f_alpha`.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as la

from .channel import spatial_gram
from .gram import CrossSvd, GramSet

__all__ = [
    "WaterfillResult",
    "PsiAllocation",
    "SolverError",
    "waterfill_spatial",
    "equal_power_spatial",
    "falpha_objective",
    "falpha_gradient",
    "project_capped_simplex",
    "solve_f_alpha",
    "grid_oracle_f_alpha",
    "temporal_covariance",
    "assemble_covariance",
]

log = logging.getLogger(__name__)

LN2 = np.log(2.0)


@dataclass(frozen=True)
class WaterfillResult:
    z: np.ndarray
    levels: np.ndarray
    water_level: float
    gains: np.ndarray


def waterfill_spatial(h_k: np.ndarray, p_k: float, sigma0_sq: float = 1.0) -> WaterfillResult:
    """Waterfill power ``p_k`` over the eigenmodes of ``H^H H``.

    Returns ``Z = E diag(levels) E^H`` where ``levels_i = max(0, w - sigma0_sq/mu_i)``
    and ``sum(levels) = p_k``. Modes are ordered by decreasing gain ``mu_i``.
    """
    if p_k < 0:
        raise ValueError(f"power must be nonnegative, got {p_k}")
    mu, vecs = la.eigh(spatial_gram(h_k))
    order = np.argsort(mu)[::-1]
    mu = np.clip(mu[order], 0.0, None)
    vecs = vecs[:, order]
    l = mu.size
    levels = np.zeros(l)
    water = 0.0
    usable = int(np.count_nonzero(mu > 0))
    if p_k > 0 and usable:
        floors = sigma0_sq / mu[:usable]
        # shrink the active set until the weakest active mode stays wet
        for k in range(usable, 0, -1):
            water = (p_k + floors[:k].sum()) / k
            if water > floors[k - 1]:
                break
        levels[:k] = np.maximum(water - floors[:k], 0.0)
    z = (vecs * levels) @ vecs.conj().T
    z = 0.5 * (z + z.conj().T)
    return WaterfillResult(z=z, levels=levels, water_level=float(water), gains=mu)


def equal_power_spatial(h_k: np.ndarray, p_k: float) -> WaterfillResult:
    """``Z = (P / L) I_L``, the no-waterfilling baseline."""
    l = h_k.shape[1]
    mu = np.sort(np.clip(la.eigvalsh(spatial_gram(h_k)), 0.0, None))[::-1]
    return WaterfillResult(z=np.eye(l) * (p_k / l), levels=np.full(l, p_k / l),
                           water_level=float("nan"), gains=mu)


# -- weighted temporal program ---------------------------------------------------


def _weights(alpha: float):
    """(single-term weight, single-term user, joint weight); branch one at 1/2."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha <= 0.5:
        return 1.0 - 2.0 * alpha, 2, alpha
    return 2.0 * alpha - 1.0, 1, 1.0 - alpha


def falpha_objective(psi1, psi2, lam, alpha: float, sigma0_sq: float = 1.0) -> float:
    """Weighted per-symbol objective in bits.

    For ``alpha <= 1/2``::

        (1 - 2 alpha)/N sum log2(1 + psi2/s) + alpha/N sum log2(D_i)

    with ``D_i = 1 + psi1/s + psi2/s + psi1 psi2 (1 - lam_i^2)/s^2`` and
    ``s = sigma0_sq``; the other branch swaps the users' roles.
    """
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    w_single, who, w_joint = _weights(alpha)
    s = sigma0_sq
    c = 1.0 - lam ** 2
    joint = np.log1p(psi1 / s + psi2 / s + psi1 * psi2 * c / s ** 2)
    single = np.log1p((psi2 if who == 2 else psi1) / s)
    return float((w_single * single.sum(axis=-1) + w_joint * joint.sum(axis=-1)) / (n * LN2))


def _objective_batch(psi1, psi2, lam, alpha, sigma0_sq):
    """Vectorized objective over leading batch axes (used by the grid oracle)."""
    n = lam.size
    w_single, who, w_joint = _weights(alpha)
    s = sigma0_sq
    c = 1.0 - lam ** 2
    joint = np.log1p(psi1 / s + psi2 / s + psi1 * psi2 * c / s ** 2)
    single = np.log1p((psi2 if who == 2 else psi1) / s)
    return (w_single * single.sum(axis=-1) + w_joint * joint.sum(axis=-1)) / (n * LN2)


def falpha_gradient(psi1, psi2, lam, alpha: float, sigma0_sq: float = 1.0):
    """Analytic gradient ``(dF/dpsi1, dF/dpsi2)``."""
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    w_single, who, w_joint = _weights(alpha)
    s = sigma0_sq
    c = 1.0 - lam ** 2
    d = 1.0 + psi1 / s + psi2 / s + psi1 * psi2 * c / s ** 2
    g1 = w_joint * (1.0 / s + psi2 * c / s ** 2) / d
    g2 = w_joint * (1.0 / s + psi1 * c / s ** 2) / d
    if who == 2:
        g2 = g2 + w_single / (s + psi2)
    else:
        g1 = g1 + w_single / (s + psi1)
    scale = 1.0 / (n * LN2)
    return g1 * scale, g2 * scale


def project_capped_simplex(x: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto ``{y >= 0, sum(y) <= budget}``."""
    y = np.maximum(x, 0.0)
    if y.sum() <= budget:
        return y
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - budget
    k = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(x - theta, 0.0)


@dataclass(frozen=True)
class PsiAllocation:
    alpha: float
    psi1: np.ndarray
    psi2: np.ndarray
    objective_value: float
    solver_iterations: int
    kkt_residual: float


class SolverError(RuntimeError):
    def __init__(self, message: str, best: PsiAllocation):
        super().__init__(message)
        self.best = best


def _kkt_residual(x1, x2, g1, g2, budget):
    r1 = x1 - project_capped_simplex(x1 + g1, budget)
    r2 = x2 - project_capped_simplex(x2 + g2, budget)
    return float(max(np.abs(r1).max(), np.abs(r2).max()))


def solve_f_alpha(lam, alpha: float, n: int | None = None, delta: float = 1.0,
                  t_sym: float = 1.0, sigma0_sq: float = 1.0, tol: float = 1e-8,
                  max_iter: int = 100_000, active=(True, True)) -> PsiAllocation:
    """Maximize the weighted temporal objective by projected gradient ascent.

    Both users are constrained to ``psi >= 0, sum(psi) <= N delta T``. The
    iteration starts from ``psi = delta T`` (full power, uniform), uses
    Barzilai-Borwein trial steps with Armijo backtracking, and stops once the
    unit-step gradient mapping ``max|psi - P(psi + grad)|`` is below ``tol``.

    A user whose rate does not enter the objective (user 1 at ``alpha = 0``,
    user 2 at ``alpha = 1``) keeps the full-power start ``delta T``. A user
    flagged inactive (zero transmit power) is pinned at ``psi = 0``.

    Raises
    ------
    SolverError
        After ``max_iter`` iterations without meeting ``tol``; the best
        iterate is attached as ``.best``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size if n is None else n
    if lam.size != n:
        raise ValueError(f"expected {n} singular values, got {lam.size}")
    if np.any(lam < 0) or np.any(lam > 1 + 1e-9):
        raise ValueError("singular values must lie in [0, 1]")
    # long blocks at the stability boundary give lam = 1 + O(1e-14)
    lam = np.minimum(lam, 1.0)
    dT = delta * t_sym
    budget = n * dT

    on1, on2 = (float(bool(a)) for a in active)

    def f(a, b):
        return falpha_objective(a, b, lam, alpha, sigma0_sq)

    def grad(a, b):
        d1, d2 = falpha_gradient(a, b, lam, alpha, sigma0_sq)
        return on1 * d1, on2 * d2

    x1 = np.full(n, on1 * dT)
    x2 = np.full(n, on2 * dT)
    fx = f(x1, x2)
    g1, g2 = grad(x1, x2)
    # curvature of log2(1 + psi/s) at the start bounds a sensible first step
    step = n * LN2 * (sigma0_sq + dT) ** 2
    res = _kkt_residual(x1, x2, g1, g2, budget)
    it = 0
    while res > tol:
        if it >= max_iter:
            best = PsiAllocation(alpha, x1, x2, fx, it, res)
            raise SolverError(f"f(alpha={alpha}) did not converge: residual {res:.3e}", best)
        it += 1
        t = step
        while True:
            y1 = project_capped_simplex(x1 + t * g1, budget)
            y2 = project_capped_simplex(x2 + t * g2, budget)
            d1, d2 = y1 - x1, y2 - x2
            fy = f(y1, y2)
            lin = float(g1 @ d1 + g2 @ d2)
            quad = float(d1 @ d1 + d2 @ d2) / (2.0 * t)
            if fy >= fx + lin - quad - 1e-15 * max(1.0, abs(fx)) or t < 1e-14:
                break
            t *= 0.5
        h1, h2 = grad(y1, y2)
        sy = -float(d1 @ (h1 - g1) + d2 @ (h2 - g2))
        ss = float(d1 @ d1 + d2 @ d2)
        step = min(max(ss / sy, 1e-12), 1e12) if sy > 0 else min(2.0 * t, 1e12)
        x1, x2, fx, g1, g2 = y1, y2, fy, h1, h2
        res = _kkt_residual(x1, x2, g1, g2, budget)
    log.debug("f(alpha=%g) converged in %d iterations, residual %.2e", alpha, it, res)
    return PsiAllocation(alpha=float(alpha), psi1=x1, psi2=x2, objective_value=fx,
                         solver_iterations=it, kkt_residual=res)


def _face_grid(n: int, budget: float, step: float) -> np.ndarray:
    """Grid points on ``{psi >= 0, sum(psi) = budget}`` (first n-1 coords gridded)."""
    if n == 1:
        return np.array([[budget]])
    ticks = np.arange(0.0, budget + 1e-12, step)
    pts = []
    for head in itertools.product(ticks, repeat=n - 1):
        rest = budget - sum(head)
        if rest >= -1e-12:
            pts.append((*head, max(rest, 0.0)))
    return np.array(pts)


def grid_oracle_f_alpha(lam, alpha: float, n: int | None = None, delta: float = 1.0,
                        t_sym: float = 1.0, sigma0_sq: float = 1.0, step: float = 0.005,
                        max_points: int = 50_000_000) -> PsiAllocation:
    """Exhaustive grid search of the temporal program for ``N <= 3``.

    The objective is strictly increasing in every ``psi`` that it contains,
    so the maximum lies on the full-budget face; the grid covers that face
    with spacing ``step``. A user absent from the objective is fixed at
    ``delta T`` as in :func:`solve_f_alpha`.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size if n is None else n
    if n > 3:
        raise ValueError(f"grid oracle is exponential in N; refusing N={n} > 3")
    dT = delta * t_sym
    budget = n * dT
    w_single, who, w_joint = _weights(alpha)
    face = _face_grid(n, budget, step)
    fixed = np.full((1, n), dT)
    cand1 = face if (w_joint > 0 or who == 1) else fixed
    cand2 = face if (w_joint > 0 or who == 2) else fixed
    if cand1.shape[0] * cand2.shape[0] > max_points:
        raise ValueError("grid too large; increase step")
    best_val, best = -np.inf, None
    chunk = max(1, 2_000_000 // max(1, cand2.shape[0]))
    for start in range(0, cand1.shape[0], chunk):
        p1 = cand1[start:start + chunk, None, :]
        vals = _objective_batch(p1, cand2[None, :, :], lam, alpha, sigma0_sq)
        idx = np.unravel_index(np.argmax(vals), vals.shape)
        if vals[idx] > best_val:
            best_val = float(vals[idx])
            best = (cand1[start + idx[0]].copy(), cand2[idx[1]].copy())
    return PsiAllocation(alpha=float(alpha), psi1=best[0], psi2=best[1],
                         objective_value=best_val, solver_iterations=int(cand1.shape[0] * cand2.shape[0]),
                         kkt_residual=float("nan"))


def temporal_covariance(gram: GramSet, svd: CrossSvd, psi_k: np.ndarray, user: int,
                        whiten: bool = True) -> np.ndarray:
    """``Xi_k = G^-1/2 W diag(psi_k) W^H G^-1/2`` with ``W = U`` (user 1) or ``V`` (user 2).

    ``whiten=False`` drops the ``G^-1/2`` factors (precoding designed as if
    ``G = I``); ``Xi`` is then rescaled so that ``tr(G Xi) = sum(psi_k)``,
    which keeps the transmit power equal to the precoded case.
    """
    if user not in (1, 2):
        raise ValueError("user must be 1 or 2")
    psi_k = np.asarray(psi_k, dtype=float)
    if np.any(psi_k < 0):
        raise ValueError("temporal eigenvalues must be nonnegative")
    w = svd.u if user == 1 else svd.v
    core = (w * psi_k) @ w.conj().T
    if whiten:
        xi = gram.g_inv_sqrt @ core @ gram.g_inv_sqrt
    else:
        xi = core
        used = float(np.real(np.trace(gram.g_matrix @ xi)))
        if used > 0:
            xi = xi * (psi_k.sum() / used)
    xi = 0.5 * (xi + xi.conj().T)
    w_min = la.eigvalsh(xi)[0]
    if w_min < -1e-8 * max(1.0, float(np.abs(xi).max())):
        raise ValueError(f"temporal covariance is not PSD (min eigenvalue {w_min:.3e})")
    return xi


def assemble_covariance(gram: GramSet, svd: CrossSvd, z, psi: PsiAllocation | np.ndarray,
                        user: int, whiten: bool = True):
    """Return ``(Sigma_k, Xi_k)`` with ``Sigma_k = Z_k kron Xi_k``.

    ``z`` is a spatial covariance or a :class:`WaterfillResult`; ``psi`` an
    allocation (the user's eigenvalues are picked from it) or a plain vector.
    """
    z = getattr(z, "z", z)
    if isinstance(psi, PsiAllocation):
        psi = psi.psi1 if user == 1 else psi.psi2
    xi = temporal_covariance(gram, svd, psi, user, whiten=whiten)
    return np.kron(z, xi), xi
