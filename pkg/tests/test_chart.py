import numpy as np
import pytest
from scipy.stats import norm

from cusumfdr.chart import (
    ChartConfig,
    ChartState,
    IncrementModel,
    discretize,
    increment,
    run_standalone,
    update,
)


class TestDiscretize:
    def test_interior_value(self):
        cfg = ChartConfig.bounded(h=10, n_states=5)  # cuts 1.25, 3.75, 6.25, 8.75
        assert discretize(3.0, cfg) == 2.5

    def test_below_first_cut(self):
        cfg = ChartConfig.bounded(h=10, n_states=5)
        assert discretize(0.5, cfg) == 0.0

    def test_at_or_above_last_cut(self):
        cfg = ChartConfig.bounded(h=10, n_states=5)
        assert discretize(9.0, cfg) == 10.0
        assert discretize(8.75, cfg) == 10.0  # tie at a cut rounds up

    def test_out_of_range(self):
        cfg = ChartConfig.bounded(h=10, n_states=5)
        with pytest.raises(ValueError):
            discretize(-0.1, cfg)
        with pytest.raises(ValueError):
            discretize(10.1, cfg)

    def test_needs_grid(self):
        cfg = ChartConfig.bounded(h=10)
        with pytest.raises(ValueError):
            discretize(3.0, cfg)

    def test_idempotent_on_grid(self):
        cfg = ChartConfig.bounded(h=10, n_states=101)
        for v in cfg.grid:
            assert discretize(float(v), cfg) == v

    def test_grid_endpoints_exact(self):
        cfg = ChartConfig.bounded(h=10, n_states=100)
        assert cfg.grid[0] == 0.0
        assert cfg.grid[-1] == 10.0
        assert np.all(np.diff(cfg.cuts) > 0)
        assert cfg.cuts[0] > 0 and cfg.cuts[-1] < cfg.h


class TestIncrement:
    def test_mean_shift(self):
        model = IncrementModel.mean_shift(1.0)
        assert increment(0.7, model) == pytest.approx(0.2)

    def test_loglikelihood_gaussian(self):
        model = IncrementModel.loglikelihood(norm(0, 1).pdf, norm(1, 1).pdf)
        assert increment(0.7, model) == pytest.approx(0.2)

    def test_identity(self):
        assert increment(-0.3, IncrementModel.identity()) == -0.3

    def test_loglikelihood_zero_density(self):
        model = IncrementModel.loglikelihood(lambda x: 0.0 * x, lambda x: 0.0 * x + 1.0)
        with pytest.raises(ValueError):
            increment(0.7, model)

    def test_mean_shift_needs_positive_delta(self):
        with pytest.raises(ValueError):
            IncrementModel.mean_shift(0.0)

    def test_vectorized(self):
        model = IncrementModel.mean_shift(1.0)
        z = model.apply(np.array([0.0, 1.0, 2.0]))
        np.testing.assert_allclose(z, [-0.5, 0.5, 1.5])


class TestUpdate:
    def test_floor_at_zero(self):
        cfg = ChartConfig.bounded(h=10, n_states=101)
        s = update(ChartState(), -1.0, cfg)
        assert s.value == 0.0 and s.t == 1 and s.last_zero == 1

    def test_clamp_at_h(self):
        cfg = ChartConfig.bounded(h=10, n_states=101)
        s = update(ChartState(value=9.8, t=4, last_zero=0), 5.0, cfg)
        assert s.value == 10.0 and s.t == 5 and s.last_zero == 0

    def test_restarting_reset(self):
        cfg = ChartConfig.restarting(zeta=5.0)
        s = update(ChartState(value=4.7, t=9), 0.6, cfg)
        assert s.signalling
        assert s.value == 0.0
        assert s.last_zero == s.t == 10

    def test_restarting_below_threshold(self):
        cfg = ChartConfig.restarting(zeta=5.0)
        s = update(ChartState(value=4.7, t=9), -0.5, cfg)
        assert not s.signalling
        assert s.value == pytest.approx(4.2)

    def test_unbounded_no_clamp(self):
        cfg = ChartConfig.unbounded()
        s = update(ChartState(value=11.0, t=1), 2.0, cfg)
        assert s.value == 13.0

    def test_continuous_bounded(self):
        cfg = ChartConfig.bounded(h=10)
        s = update(ChartState(value=3.0, t=0), 0.31, cfg)
        assert s.value == pytest.approx(3.31)


class TestConfigValidation:
    def test_bad_variant(self):
        with pytest.raises(ValueError):
            ChartConfig(h=10, variant="sideways")

    def test_too_few_states(self):
        with pytest.raises(ValueError):
            ChartConfig.bounded(h=10, n_states=1)

    def test_nonpositive_h(self):
        with pytest.raises(ValueError):
            ChartConfig.bounded(h=0.0)

    def test_restarting_needs_zeta(self):
        with pytest.raises(ValueError):
            ChartConfig(h=10, variant="restarting")


class TestRunStandalone:
    def test_all_negative_observations(self):
        cfg = ChartConfig.bounded(h=10, n_states=101)
        run = run_standalone([-10.0] * 50, cfg, zeta=5.0)
        assert np.all(run.values == 0.0)
        assert run.signal_intervals == ()

    def test_saturation_one_interval_to_end(self):
        cfg = ChartConfig.bounded(h=10, n_states=101,
                                  increment=IncrementModel.mean_shift(1.0))
        run = run_standalone([10.0] * 30, cfg, zeta=5.0)
        assert run.values[-1] == 10.0
        assert len(run.signal_intervals) == 1
        assert run.signal_intervals[0][1] == 30

    def test_empty_observations(self):
        with pytest.raises(ValueError):
            run_standalone([], ChartConfig.bounded(h=10), zeta=5.0)

    def test_out_of_control_window_bounded_vs_unbounded(self):
        # One fixed realization: drift up inside the window [20, 60], down outside.
        rng = np.random.default_rng(3)
        t = np.arange(1, 101)
        window = (t >= 20) & (t <= 60)
        z = rng.standard_normal(100) + np.where(window, 0.5, -0.5)
        bounded = run_standalone(z, ChartConfig.bounded(h=10), zeta=5.0)
        unbounded = run_standalone(z, ChartConfig.unbounded(), zeta=5.0)
        assert len(bounded.signal_intervals) == 1
        assert unbounded.signal_intervals[-1][1] >= bounded.signal_intervals[-1][1]

    def test_identical_until_first_threshold_crossing(self):
        rng = np.random.default_rng(3)
        t = np.arange(1, 101)
        window = (t >= 20) & (t <= 60)
        z = rng.standard_normal(100) + np.where(window, 0.5, -0.5)
        bounded = run_standalone(z, ChartConfig.bounded(h=10), zeta=5.0)
        restarting = run_standalone(z, ChartConfig.restarting(zeta=5.0))
        assert restarting.signal_times, "realization should cross the threshold"
        first_reset = restarting.signal_times[0]
        for t_step in range(first_reset):
            assert bounded.states[t_step].value == restarting.states[t_step].value

    def test_restarting_signals_are_point_events(self):
        cfg = ChartConfig.restarting(zeta=1.0)
        run = run_standalone([2.0, 2.0, -1.0], cfg)
        assert run.signal_times == (1, 2)
        assert run.signal_intervals == ()
        assert run.values[1] == 0.0

    def test_states_carry_signalling_flag(self):
        cfg = ChartConfig.bounded(h=10, n_states=101,
                                  increment=IncrementModel.mean_shift(1.0))
        run = run_standalone([10.0] * 10, cfg, zeta=5.0)
        flagged = {s.t for s in run.states if s.signalling}
        (start, end), = run.signal_intervals
        assert flagged == set(range(start, end + 1))


class TestInvariants:
    def test_values_stay_in_bounds(self):
        cfg = ChartConfig.bounded(h=10, n_states=50)
        rng = np.random.default_rng(0)
        state = ChartState()
        for z in rng.normal(0.3, 3.0, size=500):
            state = update(state, float(z), cfg)
            assert 0.0 <= state.value <= cfg.h
            assert state.value in cfg.grid

    def test_unbounded_nonnegative(self):
        cfg = ChartConfig.unbounded()
        rng = np.random.default_rng(1)
        state = ChartState()
        for z in rng.normal(0.0, 3.0, size=500):
            state = update(state, float(z), cfg)
            assert state.value >= 0.0

    def test_update_monotone_in_state(self):
        # Exhaustive over all grid pairs and a grid of increments.
        cfg = ChartConfig.bounded(h=10, n_states=9)
        z_grid = np.arange(-12.0, 12.0, 0.25)
        for z in z_grid:
            values = [update(ChartState(value=float(v)), float(z), cfg).value
                      for v in cfg.grid]
            assert all(a <= b for a, b in zip(values, values[1:]))

    def test_last_zero_tracks_zero_visits(self):
        cfg = ChartConfig.bounded(h=10, n_states=11)
        state = ChartState()
        state = update(state, 3.0, cfg)
        assert state.last_zero == 0
        state = update(state, -8.0, cfg)
        assert state.last_zero == 2
        state = update(state, 2.0, cfg)
        assert state.last_zero == 2
