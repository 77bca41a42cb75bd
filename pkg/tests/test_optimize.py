import pytest

from pmqcc import (
    ChannelParams,
    ParameterError,
    optimize_decoys,
    optimize_signal,
    rate_lower,
    rate_pmqcc,
    rate_pmqcc_star,
    rate_reduced,
)
from tests.conftest import bench_channel_at


class TestOptimizeSignal:
    def test_benchmark_recovery_50km(self):
        result = optimize_signal(bench_channel_at(50.0), 3)
        assert result.best_params.slice_count == 13
        assert result.best_params.signal_intensity == pytest.approx(0.1333, abs=5e-3)
        assert result.best_rate == pytest.approx(2.6989e-7, rel=1e-3)

    def test_reevaluation_is_bitwise(self):
        ch = bench_channel_at(80.0)
        result = optimize_signal(ch, 3, m_values=range(11, 16))
        assert result.best_rate == rate_pmqcc(result.best_params, ch).rate

    def test_reevaluation_star(self):
        ch = ChannelParams(0.2, 60.0, 0.93, 1e-7)
        result = optimize_signal(ch, 3, "pmqcc-star", signal_phase_misalignment=0.015)
        assert result.best_rate == rate_pmqcc_star(result.best_params, ch).rate
        assert result.best_rate > 0.0

    def test_reevaluation_reduced(self):
        ch = bench_channel_at(50.0)
        result = optimize_signal(ch, 3, "reduced", m_values=range(11, 16))
        assert result.best_rate == rate_reduced(result.best_params, ch, (False, True)).rate
        assert result.best_params.signal_intensity == pytest.approx(0.1059, abs=5e-3)

    def test_infeasible_channel_flagged(self):
        result = optimize_signal(bench_channel_at(10_000.0), 3, m_values=range(10, 20))
        assert result.flagged_zero
        assert result.best_rate == 0.0
        assert result.best_params is None

    def test_monotone_in_distance(self):
        rates = [
            optimize_signal(bench_channel_at(l), 3, m_values=range(11, 20)).best_rate
            for l in (50.0, 100.0, 150.0)
        ]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    def test_slice_count_bracket(self):
        for distance in (50.0, 200.0):
            result = optimize_signal(bench_channel_at(distance), 3)
            assert 8 <= result.best_params.slice_count <= 32

    def test_bad_objective(self):
        with pytest.raises(ParameterError):
            optimize_signal(bench_channel_at(50.0), 3, "bogus")


class TestOptimizeDecoys:
    def test_anchor_is_attainable(self):
        ch = bench_channel_at(150.0)
        result = optimize_decoys(ch, 3, 0.104815, 13)
        assert not result.flagged_zero
        assert result.best_rate >= 1.7e-11

    def test_reevaluation_is_bitwise(self):
        ch = bench_channel_at(150.0)
        result = optimize_decoys(ch, 3, 0.104815, 13, restarts=1, sweeps=6)
        assert result.best_rate == rate_lower(result.best_params, ch).rate

    def test_ordering_constraints_hold(self):
        result = optimize_decoys(bench_channel_at(150.0), 3, 0.104815, 13, restarts=1, sweeps=8)
        decs = result.best_params.decoy_intensities
        assert decs[-1] == 0.0
        nonzero = decs[:-1]
        assert all(a > b for a, b in zip(nonzero, nonzero[1:]))
        assert nonzero[0] < 0.104815

    def test_collapsed_search_returns_start(self):
        # no sweeps: the single fixed starting point is returned as-is
        ch = bench_channel_at(150.0)
        result = optimize_decoys(ch, 3, 0.104815, 13, restarts=1, sweeps=0)
        assert not result.flagged_zero
        assert result.best_rate == rate_lower(result.best_params, ch).rate
