"""Validation experiments: closed form vs Monte Carlo over parameter sweeps.

The stock two-tier scenario (20 W macro BSs at 1e-6 /m^2, 2 W pico BSs,
mu = 5e-4 users/m^2, theta = 1, alpha = 4, beta = 3/4) is provided by
table1_params(); the pico intensity can be either published endpoint,
0.1*mu (default) or mu.  The default user-intensity sweep covers
[5e-5, 1e-3] with 8 log-spaced points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coverage import (
    NetworkParams,
    TierParams,
    average_coverage,
    coverage_coop,
    coverage_noncoop,
    optimize_beta,
)
from .kernels import KernelEvaluator
from .simulate import ROLES, SCHEMES, estimates_from_totals, run_trials

SWEEP_VARIABLES = ("user_intensity", "beta", "pico_intensity")

TABLE1_USER_INTENSITY = 5e-4
PICO_INTENSITY_LOW = 0.1 * TABLE1_USER_INTENSITY   # sparse-pico endpoint, 5e-5
PICO_INTENSITY_HIGH = TABLE1_USER_INTENSITY        # dense-pico endpoint, 5e-4


def table1_params(pico_intensity=PICO_INTENSITY_LOW, user_intensity=TABLE1_USER_INTENSITY,
                  beta=0.75):
    """Stock two-tier macro/pico simulation scenario."""
    return NetworkParams(
        tiers=(
            TierParams(power_watts=20.0, intensity=1e-6),
            TierParams(power_watts=2.0, intensity=pico_intensity),
        ),
        user_intensity=user_intensity,
        pathloss_exponent=4.0,
        sir_threshold=1.0,
        beta=(beta, beta),
    )


def default_user_intensity_grid(n_points=8, low=5e-5, high=1e-3):
    return tuple(float(v) for v in np.geomspace(low, high, n_points))


def apply_sweep_value(params, variable, value):
    if variable == "user_intensity":
        return params.with_user_intensity(value)
    if variable == "beta":
        return params.with_beta(value)
    if variable == "pico_intensity":
        if params.n_tiers < 2:
            raise ValueError("pico_intensity sweep requires at least two tiers")
        return params.with_tier_intensity(1, value)
    raise ValueError(f"unknown sweep variable {variable!r}")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: base scenario, swept variable, grid, schemes, sim budget."""

    params: NetworkParams
    variable: str = "user_intensity"
    grid: tuple = field(default_factory=default_user_intensity_grid)
    schemes: tuple = SCHEMES
    n_trials: int = 20
    seed: int = 1
    window: object = None
    kernel_mode: str = "appendix"
    max_cells_per_tier: int = None
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.grid:
            raise ValueError("sweep grid must be nonempty")
        if any(lo >= hi for lo, hi in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")


@dataclass(frozen=True)
class ComparisonRow:
    """One (sweep point, tier, role, scheme) analytic vs simulated record."""

    sweep_value: float
    tier: int           # 1-based tier number
    role: str
    scheme: str
    analytic: float
    simulated: float
    ci_halfwidth: float
    n_samples: int
    flags: str = ""

    @property
    def abs_gap(self):
        return abs(self.analytic - self.simulated)


def analytic_pairs(params, schemes=SCHEMES, kernel_mode="appendix"):
    """CoveragePair per (tier, scheme) from the closed forms."""
    ev = KernelEvaluator.from_params(params)
    out = {}
    for tier in range(params.n_tiers):
        for scheme in schemes:
            if scheme == "noncoop":
                out[(tier, scheme)] = coverage_noncoop(params, tier, evaluator=ev)
            else:
                out[(tier, scheme)] = coverage_coop(params, tier, kernel_mode, evaluator=ev)
    return out


def run_sweep(spec):
    """Analytic and simulated coverage at every grid point.

    Rows come out in deterministic order (grid point, tier, role, scheme).
    Each grid point simulates on its own substream family derived from
    (seed, point index), so results do not depend on grid slicing.
    """
    rows = []
    for point, value in enumerate(spec.grid):
        params = apply_sweep_value(spec.params, spec.variable, value)
        pairs = analytic_pairs(params, spec.schemes, spec.kernel_mode)
        totals = run_trials(
            params, spec.window, spec.n_trials, seed=(spec.seed, point),
            max_cells_per_tier=spec.max_cells_per_tier, n_jobs=spec.n_jobs,
        )
        estimates = {
            (e.tier, e.scheme, e.role): e
            for e in estimates_from_totals(totals, spec.schemes)
        }
        for tier in range(params.n_tiers):
            for role in ROLES:
                for scheme in spec.schemes:
                    pair = pairs[(tier, scheme)]
                    est = estimates[(tier, scheme, role)]
                    flags = []
                    if est.low_samples:
                        flags.append("low_samples")
                    if pair.extrapolated:
                        flags.append("extrapolated_beta")
                    rows.append(
                        ComparisonRow(
                            sweep_value=value, tier=tier + 1, role=role, scheme=scheme,
                            analytic=getattr(pair, role), simulated=est.p_hat,
                            ci_halfwidth=est.ci_halfwidth, n_samples=est.n_samples,
                            flags=";".join(flags),
                        )
                    )
    return rows


def max_abs_gap(rows):
    return max(row.abs_gap for row in rows)


@dataclass(frozen=True)
class BetaScan:
    """Average coverage over a beta grid plus the refined optimum."""

    tier: int
    scheme: str
    grid: tuple
    averages: tuple
    optimum: object


def run_beta_scan(params, tier, scheme, grid, kernel_mode="appendix"):
    """Average coverage on a beta grid and the golden-section optimum."""
    ev = KernelEvaluator.from_params(params)
    averages = tuple(
        average_coverage(params.with_beta(b), tier, scheme, kernel_mode, ev)
        for b in grid
    )
    optimum = optimize_beta(params, tier, scheme, kernel_mode)
    return BetaScan(
        tier=tier, scheme=scheme, grid=tuple(float(b) for b in grid),
        averages=averages, optimum=optimum,
    )
