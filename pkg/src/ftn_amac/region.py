"""Scenario configurations, rate-region tracing and SNR sweeps."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .alloc import equal_power_spatial, solve_f_alpha, temporal_covariance, waterfill_spatial
from .channel import MimoChannel, sample_channel
from .gram import build_gram_set, cross_svd, identity_svd
from .pulse import PulseShape, stability_bound
from .rates import CovariancePair, RateError, pentagon, power_check

__all__ = [
    "ScenarioConfig",
    "RegionPoint",
    "RegionTrace",
    "TemporalPlan",
    "temporal_plan",
    "trace_region",
    "average_envelope",
    "sumrate_sweep",
    "fig1_scenarios",
    "fig2_scenarios",
    "fig3_scenarios",
    "default_alpha_grid",
]

log = logging.getLogger(__name__)


def default_alpha_grid(points: int = 41) -> tuple[float, ...]:
    return tuple(float(a) for a in np.linspace(0.0, 1.0, points))


@dataclass(frozen=True)
class ScenarioConfig:
    """One curve of an experiment.

    ``ftn=False`` forces ``delta = 1``; ``asynchronous=False`` forces
    ``tau_frac = 0``. The relative delay is ``tau2 - tau1 = tau_frac delta T``.

    ``sigma0_sq=None`` normalizes user 1's power to one, so
    ``sigma0_sq = 10^(-snr_db_1/10)``; in every case ``P_k = sigma0_sq 10^(snr_db_k/10)``.
    """

    name: str = "amac_ftn"
    m: int = 3
    l: int = 3
    n: int = 32
    delta: float = 0.8
    beta: float = 0.25
    t_sym: float = 1.0
    tau_frac: float = 0.5
    snr_db_1: float = 20.0
    snr_db_2: float = 20.0
    sigma0_sq: float | None = None
    seeds: tuple[int, ...] = tuple(range(100))
    alpha_grid: tuple[float, ...] = field(default_factory=default_alpha_grid)
    ftn: bool = True
    asynchronous: bool = True
    spatial_waterfill: bool = True
    temporal_precoding: bool = True

    def __post_init__(self):
        set_ = object.__setattr__
        if not self.ftn:
            set_(self, "delta", 1.0)
        if not self.asynchronous:
            set_(self, "tau_frac", 0.0)
        set_(self, "seeds", tuple(int(s) for s in self.seeds))
        set_(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if min(self.m, self.l, self.n) < 1:
            raise ValueError("m, l and n must be positive")
        PulseShape(self.beta, self.t_sym)
        lo = stability_bound(self.beta)
        if not lo - 1e-12 <= self.delta <= 1.0:
            raise ValueError(
                f"delta={self.delta} violates the stability bound 1/(1+beta)={lo:.6g} "
                f"for beta={self.beta}: below it G_delta has eigenvalues approaching zero")
        if not 0.0 <= self.tau_frac < 1.0:
            raise ValueError(f"tau_frac must lie in [0, 1), got {self.tau_frac}")
        grid = self.alpha_grid
        if list(grid) != sorted(grid) or not all(0.0 <= a <= 1.0 for a in grid):
            raise ValueError("alpha_grid must be sorted within [0, 1]")
        for a in (0.0, 0.5, 1.0):
            if a not in grid:
                raise ValueError(f"alpha_grid must contain {a}")
        if self.sigma0_sq is not None and not self.sigma0_sq > 0:
            raise ValueError("sigma0_sq must be positive")

    @property
    def pulse(self) -> PulseShape:
        return PulseShape(self.beta, self.t_sym)

    @property
    def tau(self) -> float:
        return self.tau_frac * self.delta * self.t_sym

    def noise_and_powers(self) -> tuple[float, float, float]:
        s2 = 10.0 ** (-self.snr_db_1 / 10.0) if self.sigma0_sq is None else self.sigma0_sq
        return s2, s2 * 10.0 ** (self.snr_db_1 / 10.0), s2 * 10.0 ** (self.snr_db_2 / 10.0)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TemporalPlan:
    """Channel-independent part of a scenario: Gram matrices and ``Xi`` per alpha."""

    gram: object
    design_svd: object
    xi1: dict
    xi2: dict
    psi: dict


@lru_cache(maxsize=64)
def _plan(beta, t_sym, delta, n, tau, precoding, sigma0_sq, alphas, active) -> TemporalPlan:
    pulse = PulseShape(beta, t_sym)
    # user 2 lags user 1 by tau, so tau1 - tau2 = -tau
    gram = build_gram_set(pulse, delta, n, 0.0, tau)
    if precoding:
        design_gram = gram
    else:
        design_gram = build_gram_set(pulse, 1.0, n, 0.0, tau)
    svd = identity_svd(n) if design_gram.synchronous else cross_svd(design_gram)
    xi1, xi2, psis = {}, {}, {}
    for a in alphas:
        psi = solve_f_alpha(svd.lam, a, n, delta, t_sym, sigma0_sq, active=active)
        psis[a] = psi
        xi1[a] = temporal_covariance(gram, svd, psi.psi1, 1, whiten=precoding)
        xi2[a] = temporal_covariance(gram, svd, psi.psi2, 2, whiten=precoding)
    return TemporalPlan(gram=gram, design_svd=svd, xi1=xi1, xi2=xi2, psi=psis)


def temporal_plan(config: ScenarioConfig, alphas=None) -> TemporalPlan:
    s2, p1, p2 = config.noise_and_powers()
    alphas = tuple(config.alpha_grid if alphas is None else alphas)
    # a silent user (P_k = 0) is removed from the temporal program
    return _plan(config.beta, config.t_sym, config.delta, config.n, config.tau,
                 config.temporal_precoding, s2, alphas, (p1 > 0, p2 > 0))


@dataclass(frozen=True)
class RegionPoint:
    alpha: float
    r1: float
    r2: float
    r1_max: float
    r2_max: float
    r_sum: float

    def astuple(self):
        return (self.alpha, self.r1, self.r2, self.r1_max, self.r2_max, self.r_sum)


@dataclass(frozen=True)
class RegionTrace:
    points: list
    scenario: ScenarioConfig
    seed: int
    metadata: dict = field(default_factory=dict)

    def at(self, alpha: float) -> RegionPoint:
        for p in self.points:
            if p.alpha == alpha:
                return p
        raise KeyError(alpha)


def trace_region(config: ScenarioConfig, channel: MimoChannel | None = None,
                 alphas=None, seed: int | None = None) -> RegionTrace:
    """Evaluate the rate pentagon and its alpha-targeted corner for each alpha.

    ``alphas`` overrides ``config.alpha_grid`` (e.g. ``[0.5]`` for a sum-rate
    sweep). Without ``channel`` the realization ``seed`` is sampled.
    """
    if channel is None:
        channel = sample_channel(seed if seed is not None else config.seeds[0], config.m, config.l)
    alphas = tuple(config.alpha_grid if alphas is None else alphas)
    plan = temporal_plan(config, alphas)
    s2, p1, p2 = config.noise_and_powers()
    spatial = waterfill_spatial if config.spatial_waterfill else (lambda h, p, _s: equal_power_spatial(h, p))
    z1 = spatial(channel.h1, p1, s2).z
    z2 = spatial(channel.h2, p2, s2).z

    points = []
    for a in alphas:
        try:
            cov = CovariancePair.from_factors(z1, plan.xi1[a], z2, plan.xi2[a])
            report = power_check(cov, plan.gram, (p1, p2))
            if not report.feasible:
                raise RateError(f"power constraint violated: {report.ratios} > {report.budgets}")
            pent = pentagon(channel, plan.gram, cov, s2, alpha=a)
        except (RateError, ValueError, ArithmeticError) as exc:
            raise type(exc)(f"{config.name}: alpha={a}, seed={channel.seed}: {exc}") from exc
        r1, r2 = pent.corner(a)
        points.append(RegionPoint(a, r1, r2, pent.r1_max, pent.r2_max, pent.r_sum))
    meta = {"g_min_eig": plan.gram.g_min_eig, "q_min_eig": plan.gram.q_min_eig}
    return RegionTrace(points=points, scenario=config, seed=channel.seed, metadata=meta)


def average_envelope(traces) -> list[RegionPoint]:
    """Per-alpha mean over realizations, summed in seed order."""
    traces = sorted(traces, key=lambda t: t.seed)
    if not traces:
        raise ValueError("no traces to average")
    grid = [p.alpha for p in traces[0].points]
    name = traces[0].scenario.name
    for t in traces[1:]:
        if [p.alpha for p in t.points] != grid or t.scenario.name != name:
            raise ValueError("traces do not share the same alpha grid and scenario")
    data = np.array([[p.astuple()[1:] for p in t.points] for t in traces])
    mean = data.sum(axis=0) / len(traces)
    pts = [RegionPoint(a, *row) for a, row in zip(grid, mean)]
    return sorted(pts, key=lambda p: p.alpha)


def fig1_scenarios(base: ScenarioConfig, siso: bool = True) -> list[ScenarioConfig]:
    """Asynchronous/synchronous x FTN/Nyquist, optionally with SISO counterparts."""
    out = [
        base.replace(name="amac_ftn", ftn=True, asynchronous=True),
        base.replace(name="amac", ftn=False, asynchronous=True),
        base.replace(name="mac_ftn", ftn=True, asynchronous=False),
        base.replace(name="mac", ftn=False, asynchronous=False),
    ]
    if siso:
        out += [c.replace(name="siso_" + c.name, m=1, l=1) for c in out]
    return out


def fig2_scenarios(base: ScenarioConfig) -> list[ScenarioConfig]:
    return fig1_scenarios(base, siso=False)


def fig3_scenarios(base: ScenarioConfig) -> list[ScenarioConfig]:
    """Full scheme, its ablations and the (delta, beta) = (1, 0) reference."""
    full = base.replace(ftn=True, asynchronous=True, spatial_waterfill=True, temporal_precoding=True)
    return [
        full.replace(name="full"),
        full.replace(name="amac_ftn_equal_power", spatial_waterfill=False),
        full.replace(name="mimo_only", asynchronous=False, temporal_precoding=False),
        full.replace(name="ftn_only", spatial_waterfill=False, asynchronous=False),
        full.replace(name="no_power_opt", spatial_waterfill=False, asynchronous=False,
                     temporal_precoding=False),
        full.replace(name="upper_bound_sinc", delta=1.0, beta=0.0),
    ]


def sumrate_sweep(config: ScenarioConfig, snr_grid_db, scenarios=None,
                  master_seed: int = 0) -> list[tuple[str, float, float]]:
    """Seed-averaged sum rate at ``alpha = 1/2`` for each scenario and SNR."""
    snr_grid_db = list(snr_grid_db)
    if not snr_grid_db:
        raise ValueError("SNR grid is empty")
    scenarios = fig2_scenarios(config) if scenarios is None else scenarios
    rows = []
    for sc in scenarios:
        channels = [sample_channel(s, sc.m, sc.l, master_seed) for s in sc.seeds]
        for snr in snr_grid_db:
            cfg = sc.replace(snr_db_1=snr, snr_db_2=snr)
            vals = [trace_region(cfg, ch, alphas=(0.5,)).points[0].r_sum for ch in channels]
            rows.append((sc.name, float(snr), float(np.sum(vals) / len(vals))))
    return rows
