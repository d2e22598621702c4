"""Sweep orchestration: analytic vs simulated rows, beta scans, presets."""

import numpy as np
import pytest

from hetnoma.coverage import NetworkParams, TierParams, cell_load_model
from hetnoma.geometry import Window
from hetnoma.sweeps import (
    PICO_INTENSITY_HIGH,
    PICO_INTENSITY_LOW,
    SweepSpec,
    apply_sweep_value,
    default_user_intensity_grid,
    max_abs_gap,
    run_beta_scan,
    run_sweep,
    table1_params,
)

TOY_WINDOW = Window(half_width=500.0, margin=120.0)


def toy_two_tier(mu=8e-4):
    return NetworkParams(
        tiers=(TierParams(20.0, 2e-5), TierParams(2.0, 1.8e-4)),
        user_intensity=mu,
        pathloss_exponent=4.0,
        sir_threshold=1.0,
        beta=(0.75, 0.75),
    )


def toy_spec(**kw):
    defaults = dict(
        params=toy_two_tier(), variable="user_intensity",
        grid=(4e-4, 8e-4, 4e-3), schemes=("noncoop", "coop"),
        n_trials=4, seed=7, window=TOY_WINDOW,
    )
    defaults.update(kw)
    return SweepSpec(**defaults)


class TestPresets:
    def test_table1_values(self):
        p = table1_params()
        assert p.tiers[0].power_watts == 20.0
        assert p.tiers[0].intensity == 1e-6
        assert p.tiers[1].power_watts == 2.0
        assert p.tiers[1].intensity == PICO_INTENSITY_LOW == 5e-5
        assert p.user_intensity == 5e-4
        assert p.sir_threshold == 1.0
        assert p.pathloss_exponent == 4.0
        assert p.beta == (0.75, 0.75)
        dense = table1_params(pico_intensity=PICO_INTENSITY_HIGH)
        assert dense.tiers[1].intensity == 5e-4

    def test_default_grid(self):
        grid = default_user_intensity_grid()
        assert len(grid) == 8
        assert grid[0] == pytest.approx(5e-5) and grid[-1] == pytest.approx(1e-3)
        assert all(lo < hi for lo, hi in zip(grid, grid[1:]))


class TestApplySweepValue:
    def test_variables(self):
        p = toy_two_tier()
        assert apply_sweep_value(p, "user_intensity", 1e-3).user_intensity == 1e-3
        assert apply_sweep_value(p, "beta", 0.7).beta == (0.7, 0.7)
        assert apply_sweep_value(p, "pico_intensity", 9e-5).tiers[1].intensity == 9e-5
        with pytest.raises(ValueError):
            apply_sweep_value(p, "powers", 1.0)

    def test_pico_sweep_needs_two_tiers(self):
        single = NetworkParams(
            tiers=(TierParams(1.0, 1e-4),), user_intensity=1e-4,
            pathloss_exponent=4.0, sir_threshold=1.0, beta=(0.75,),
        )
        with pytest.raises(ValueError):
            apply_sweep_value(single, "pico_intensity", 1e-5)


class TestSweepSpec:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            toy_spec(grid=())
        with pytest.raises(ValueError):
            toy_spec(grid=(2e-4, 2e-4))
        with pytest.raises(ValueError):
            toy_spec(variable="nope")
        with pytest.raises(ValueError):
            toy_spec(schemes=("noncoop", "other"))


@pytest.fixture(scope="module")
def rows():
    return run_sweep(toy_spec())


class TestRunSweep:
    def test_row_count_and_order(self, rows):
        spec = toy_spec()
        assert len(rows) == len(spec.grid) * 2 * 2 * len(spec.schemes)
        keys = [(r.sweep_value, r.tier, r.role, r.scheme) for r in rows]
        grid = spec.grid
        expected = [
            (v, tier, role, scheme)
            for v in grid
            for tier in (1, 2)
            for role in ("near", "far")
            for scheme in ("noncoop", "coop")
        ]
        assert keys == expected

    def test_deterministic(self, rows):
        again = run_sweep(toy_spec())
        assert rows == again

    def test_analytic_near_exceeds_far(self, rows):
        for r in rows:
            if r.scheme == "noncoop" and r.role == "near":
                far = next(
                    x for x in rows
                    if x.sweep_value == r.sweep_value and x.tier == r.tier
                    and x.scheme == "noncoop" and x.role == "far"
                )
                assert r.analytic > far.analytic

    def test_simulated_nonincreasing_in_mu(self, rows):
        for tier in (1, 2):
            for role in ("near", "far"):
                series = [
                    r for r in rows
                    if r.tier == tier and r.role == role and r.scheme == "noncoop"
                ]
                for hi, lo in zip(series, series[1:]):
                    assert lo.simulated <= hi.simulated + lo.ci_halfwidth + hi.ci_halfwidth

    def test_schemes_agree_when_saturated(self, rows):
        # highest grid point has q ~ 0.997: coop degenerates to noncoop
        top = [r for r in rows if r.sweep_value == toy_spec().grid[-1]]
        for role in ("near", "far"):
            for tier in (1, 2):
                non = next(r for r in top if r.tier == tier and r.role == role
                           and r.scheme == "noncoop")
                coop = next(r for r in top if r.tier == tier and r.role == role
                            and r.scheme == "coop")
                assert abs(coop.simulated - non.simulated) <= 2 * (
                    non.ci_halfwidth + coop.ci_halfwidth
                ) + 1e-12

    def test_gap_fields(self, rows):
        for r in rows:
            assert r.abs_gap == abs(r.analytic - r.simulated)
        assert max_abs_gap(rows) < 0.5

    def test_low_sample_flag_propagates(self):
        spec = toy_spec(n_trials=1, grid=(4e-4,), max_cells_per_tier=5)
        rows = run_sweep(spec)
        assert all("low_samples" in r.flags for r in rows)


class TestRunBetaScan:
    def test_grid_argmax_near_reference(self):
        p = NetworkParams(
            tiers=(TierParams(1.0, 1e-4),), user_intensity=1e8,
            pathloss_exponent=4.0, sir_threshold=1.0, beta=(0.75,),
        )
        grid = np.round(np.arange(0.52, 1.0001, 0.01), 4)
        scan = run_beta_scan(p, 0, "noncoop", grid)
        best = scan.grid[int(np.argmax(scan.averages))]
        assert best == pytest.approx(0.77, abs=0.011)
        assert scan.optimum.beta_star == pytest.approx(0.766, abs=2e-3)

    def test_inadmissible_grid_is_zero(self):
        p = toy_two_tier()
        scan = run_beta_scan(p, 0, "noncoop", (0.1, 0.3, 0.5))
        assert scan.averages == (0.0, 0.0, 0.0)

    def test_coop_optimum_not_above_noncoop(self):
        # logged observation: joint transmission shifts power toward the
        # near user (q < 1)
        p = toy_two_tier(mu=2e-4)
        assert cell_load_model(p).nonvoid_prob < 0.9
        non = run_beta_scan(p, 1, "noncoop", (0.7, 0.8)).optimum
        coop = run_beta_scan(p, 1, "coop", (0.7, 0.8)).optimum
        assert coop.beta_star <= non.beta_star + 1e-3
