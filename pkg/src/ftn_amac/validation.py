"""Oracle cross-checks shared by ``ftn-amac validate`` and the test suite.

Each check returns a :class:`CheckResult` holding the worst observed error,
the tolerance it was judged against and the individual failures, so callers
can print a table or assert on it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .alloc import (assemble_covariance, falpha_gradient, falpha_objective, grid_oracle_f_alpha,
                    solve_f_alpha, waterfill_spatial)
from .channel import sample_channel
from .gram import build_gram_set, cross_svd, identity_svd
from .oracles import (classic_mac_rates, definitional_sum_rate, dense_kron_blocks,
                      ftn_single_user_capacity)
from .pulse import PulseShape, autocorr, autocorr_numeric
from .rates import CovariancePair, kron_blocks, noise_cov, noise_cov_inverse, pentagon, single_user_rate, sum_rate
from .region import ScenarioConfig, trace_region

__all__ = [
    "CheckResult",
    "check_schur_inverse",
    "check_kron_blocks",
    "check_definitional_sum_rate",
    "check_single_user_endpoint",
    "check_nyquist_sync",
    "check_solver_vs_grid",
    "check_gradient",
    "check_singular_value_bound",
    "check_pulse_oracle",
    "check_pentagon_containment",
    "run_validation",
]

BETA = 0.25
TAU_FRACS = (0.25, 0.5)


@dataclass
class CheckResult:
    name: str
    tol: float
    worst: float = 0.0
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and not self.failures

    def record(self, err: float, case) -> None:
        self.cases += 1
        self.worst = max(self.worst, float(err))
        if not err <= self.tol:
            self.failures.append((case, float(err)))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name:<28} worst={self.worst:.3e}  tol={self.tol:.0e}  "
                f"cases={self.cases}  failed={len(self.failures)}")


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _grid(ms, ns, deltas, tau_fracs=TAU_FRACS):
    return itertools.product(ms, ns, deltas, tau_fracs)


def check_schur_inverse(ms=(1, 2, 3), ns=(1, 2, 4, 8), deltas=(0.8, 0.9, 1.0),
                        tol=1e-8) -> CheckResult:
    """``noise_cov @ noise_cov_inverse == I`` in relative Frobenius norm."""
    res = CheckResult("schur_block_inverse", tol)
    pulse = PulseShape(BETA)
    for m, n, d, tf in _grid(ms, ns, deltas):
        gram = build_gram_set(pulse, d, n, 0.0, tf * d)
        prod = noise_cov(gram, m) @ noise_cov_inverse(gram, m).dense()
        eye = np.eye(prod.shape[0])
        res.record(_rel(prod, eye), (m, n, d, tf))
    return res


def check_kron_blocks(ms=(1, 2, 3), ns=(1, 2, 4, 8), deltas=(0.8, 0.9, 1.0),
                      seeds=(0, 1, 2), tol=1e-8) -> CheckResult:
    """Mixed-product blocks against a dense solve of the full system."""
    res = CheckResult("kronecker_simplification", tol)
    pulse = PulseShape(BETA)
    for m, n, d, tf in _grid(ms, ns, deltas):
        gram = build_gram_set(pulse, d, n, 0.0, tf * d)
        for seed in seeds:
            ch = sample_channel(seed, m, m)
            res.record(_rel(kron_blocks(ch, gram), dense_kron_blocks(ch, gram)), (m, n, d, tf, seed))
    return res


def _random_psd(rng, size, scale=1.0):
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return scale * (a @ a.conj().T) / size


def check_definitional_sum_rate(pairs=5, m=2, n=3, delta=0.8, tau_frac=0.5, tol=1e-8) -> CheckResult:
    """Structured sum rate against ``log det E[YY^H] - log det Sigma_Omega``."""
    res = CheckResult("definitional_sum_rate", tol)
    gram = build_gram_set(PulseShape(BETA), delta, n, 0.0, tau_frac * delta)
    rng = np.random.default_rng(20240)
    for i in range(pairs):
        ch = sample_channel(i, m, m)
        s1 = _random_psd(rng, m * n)
        s2 = _random_psd(rng, m * n)
        cov = CovariancePair(sigma_a1=s1, sigma_a2=s2)
        for s2_noise in (1.0, 0.1):
            got = sum_rate(ch, gram, cov, s2_noise)
            want = definitional_sum_rate(ch, gram, s1, s2, s2_noise)
            res.record(abs(got - want) / max(1.0, abs(want)), (i, s2_noise))
    return res


def check_single_user_endpoint(seeds=(0, 1, 2), m=3, n=8, delta=0.8, tau_frac=0.5,
                               snr_db=20.0, tol=1e-8) -> CheckResult:
    """At ``alpha = 0``: ``Xi_2 = delta T G^-1`` and user 2 hits its closed-form capacity."""
    res = CheckResult("single_user_endpoint", tol)
    gram = build_gram_set(PulseShape(BETA), delta, n, 0.0, tau_frac * delta)
    svd = cross_svd(gram)
    s2 = 10.0 ** (-snr_db / 10.0)
    psi = solve_f_alpha(svd.lam, 0.0, n, delta, 1.0, s2)
    g_inv = np.linalg.inv(gram.g_matrix)
    for seed in seeds:
        ch = sample_channel(seed, m, m)
        wf = waterfill_spatial(ch.h2, 1.0, s2)
        sigma, xi = assemble_covariance(gram, svd, wf, psi, 2)
        res.record(_rel(xi, delta * g_inv), (seed, "xi"))
        rate = single_user_rate(ch.h2, gram, sigma, s2)
        want = ftn_single_user_capacity(wf.gains, wf.levels, delta, 1.0, s2)
        res.record(abs(rate - want) / max(1.0, want), (seed, "rate"))
    return res


def check_nyquist_sync(seeds=range(10), m=3, n=8, snr_db=20.0, tol=1e-9) -> CheckResult:
    """``delta = 1, tau = 0``: the pentagon equals the memoryless MIMO-MAC formulas."""
    res = CheckResult("nyquist_sync_reduction", tol)
    gram = build_gram_set(PulseShape(BETA), 1.0, n)
    svd = identity_svd(n)
    s2 = 10.0 ** (-snr_db / 10.0)
    for seed in seeds:
        ch = sample_channel(seed, m, m)
        psi = solve_f_alpha(svd.lam, 0.5, n, 1.0, 1.0, s2)
        z1 = waterfill_spatial(ch.h1, 1.0, s2).z
        z2 = waterfill_spatial(ch.h2, 1.0, s2).z
        _, xi1 = assemble_covariance(gram, svd, z1, psi, 1)
        _, xi2 = assemble_covariance(gram, svd, z2, psi, 2)
        pent = pentagon(ch, gram, CovariancePair.from_factors(z1, xi1, z2, xi2), s2)
        want = classic_mac_rates(ch.h1, ch.h2, z1, z2, s2)
        got = (pent.r1_max, pent.r2_max, pent.r_sum)
        res.record(max(abs(a - b) / max(1.0, abs(b)) for a, b in zip(got, want)), seed)
    return res


def _lams(ns, deltas=(0.8, 0.9, 1.0)):
    pulse = PulseShape(BETA)
    for n, d, tf in itertools.product(ns, deltas, TAU_FRACS):
        yield (n, d, tf), cross_svd(build_gram_set(pulse, d, n, 0.0, tf * d)).lam


def check_solver_vs_grid(ns=(1, 2), alphas=(0.0, 0.25, 0.5, 0.75, 1.0),
                         sigma0_sqs=(1.0, 0.01), step=0.005, tol=1e-4) -> CheckResult:
    """Objective gap between the grid oracle and the solver (bits; solver may exceed grid)."""
    res = CheckResult("falpha_solver_vs_grid", tol)
    for (n, d, tf), lam in _lams(ns):
        for a, s2 in itertools.product(alphas, sigma0_sqs):
            sol = solve_f_alpha(lam, a, n, d, 1.0, s2)
            ref = grid_oracle_f_alpha(lam, a, n, d, 1.0, s2, step=step)
            res.record(max(0.0, ref.objective_value - sol.objective_value), (n, d, tf, a, s2))
    return res


def check_gradient(points=100, ns=(1, 2), alphas=(0.0, 0.25, 0.5, 0.75, 1.0),
                   tol=1e-5, seed=7) -> CheckResult:
    """Analytic gradient against central differences at random feasible points."""
    res = CheckResult("falpha_gradient", tol)
    rng = np.random.default_rng(seed)
    cases = list(_lams(ns))
    for i in range(points):
        (n, d, _), lam = cases[i % len(cases)]
        a = alphas[i % len(alphas)]
        budget = n * d
        p1 = rng.dirichlet(np.ones(n)) * budget * rng.uniform(0.05, 1.0)
        p2 = rng.dirichlet(np.ones(n)) * budget * rng.uniform(0.05, 1.0)
        g1, g2 = falpha_gradient(p1, p2, lam, a)
        num = np.zeros(2 * n)
        h = 1e-6
        for j in range(2 * n):
            e = np.zeros(2 * n)
            e[j] = h
            up = falpha_objective(p1 + e[:n], p2 + e[n:], lam, a)
            dn = falpha_objective(p1 - e[:n], p2 - e[n:], lam, a)
            num[j] = (up - dn) / (2 * h)
        ana = np.concatenate([g1, g2])
        res.record(float(np.linalg.norm(ana - num) / max(np.linalg.norm(num), 1e-12)), (i, n, a))
    return res


def check_singular_value_bound(ns=(1, 2, 4, 8), deltas=(0.8, 0.9, 1.0), margin=1e-12) -> CheckResult:
    """For ``tau != 0``: ``Q`` is PD and every cross singular value is below ``1 - margin``.

    The recorded error is ``max(lam) - (1 - margin)`` together with ``-min eig(Q)``,
    so the check passes when both are negative.
    """
    res = CheckResult("singular_value_bound", 0.0)
    pulse = PulseShape(BETA)
    for n, d, tf in itertools.product(ns, deltas, TAU_FRACS):
        gram = build_gram_set(pulse, d, n, 0.0, tf * d)
        lam = cross_svd(gram).lam
        err = max(float(lam.max()) - (1.0 - margin), -gram.q_min_eig)
        res.cases += 1
        res.worst = err if res.cases == 1 else max(res.worst, err)
        if not (gram.q_min_eig > 0 and lam.max() < 1.0 - margin):
            res.failures.append(((n, d, tf), err))
    return res


def check_pulse_oracle(betas=(0.1, 0.25, 0.5), deltas=(0.8, 0.9, 1.0), tol=1e-6) -> CheckResult:
    """Closed-form autocorrelation against quadrature on the lags ``k delta T / 4, |k| <= 32``."""
    res = CheckResult("pulse_autocorrelation", tol)
    for b, d in itertools.product(betas, deltas):
        pulse = PulseShape(b)
        t = np.arange(-32, 33) * d * pulse.T / 4.0
        res.record(float(np.max(np.abs(autocorr(pulse, t) - autocorr_numeric(pulse, t)))), (b, d))
        res.record(abs(float(autocorr(pulse, 0.0)) - 1.0), (b, "g0"))
    return res


def check_pentagon_containment(config: ScenarioConfig, seeds=None, tol=1e-9) -> CheckResult:
    """Every emitted corner lies inside its own pentagon."""
    res = CheckResult("pentagon_containment", tol)
    for seed in (config.seeds if seeds is None else seeds):
        tr = trace_region(config, sample_channel(seed, config.m, config.l))
        for p in tr.points:
            err = max(p.r1 - p.r1_max, p.r2 - p.r2_max, p.r1 + p.r2 - p.r_sum, -p.r1, -p.r2, 0.0)
            res.record(err, (seed, p.alpha))
    return res


def run_validation(config: ScenarioConfig | None = None, n: int = 4) -> list[CheckResult]:
    """The oracle suite at desk scale, with block lengths capped at ``n``."""
    config = (config or ScenarioConfig()).replace(n=n)
    ns = tuple(k for k in (1, 2, 4, 8) if k <= n)
    seeds = config.seeds[:3]
    return [
        check_pulse_oracle(),
        check_schur_inverse(ns=ns),
        check_kron_blocks(ns=ns),
        check_definitional_sum_rate(n=min(3, n)),
        check_single_user_endpoint(n=n),
        check_nyquist_sync(n=n),
        check_solver_vs_grid(),
        check_gradient(),
        check_singular_value_bound(ns=ns),
        check_pentagon_containment(config, seeds=seeds),
    ]
