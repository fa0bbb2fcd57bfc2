import math
import pytest

from batchride.kernel import (
    fd_check,
    g,
    g_series,
    moments,
    pmf,
    series_cutoff,
    survival,
    truncated_mean_series,
)

MU_GRID = [0.1, 0.5, 1.0, 2.0, 5.0]
SLACK_GRID = [1, 2, 3, 4, 5, 6]


class TestPmf:
    def test_zero_count(self) -> None:
        assert pmf(0, 1.0) == pytest.approx(math.exp(-1), abs=1e-15)

    def test_point_mass_at_zero(self) -> None:
        assert pmf(2, 0.0) == 0.0
        assert pmf(0, 0.0) == 1.0

    def test_matches_recurrence(self) -> None:
        value = math.exp(-2.5)
        for m in range(1, 4):
            value *= 2.5 / m
        assert pmf(3, 2.5) == pytest.approx(value, rel=1e-13)

    @pytest.mark.parametrize('mu', [0.5, 5.0, 29.0, 31.0, 100.0])
    def test_sums_to_one(self, mu: float) -> None:
        total = sum(pmf(m, mu) for m in range(series_cutoff(mu) + 1))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_large_mean_does_not_overflow(self) -> None:
        assert pmf(500, 500.0) == pytest.approx(1 / math.sqrt(2 * math.pi * 500), rel=1e-3)

    def test_negative_mean(self) -> None:
        with pytest.raises(ValueError):
            pmf(1, -0.1)


class TestSurvival:
    @pytest.mark.parametrize(
        'k,mu,expected',
        [[0, 3.7, 1.0], [1, 1.0, 1 - math.exp(-1)], [2, 1.0, 1 - 2 * math.exp(-1)]],
    )
    def test_values(self, k: int, mu: float, expected: float) -> None:
        assert survival(k, mu) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize('mu', MU_GRID)
    @pytest.mark.parametrize('k', SLACK_GRID)
    def test_complement_of_pmf(self, k: int, mu: float) -> None:
        assert survival(k, mu) == pytest.approx(1 - sum(pmf(j, mu) for j in range(k)), abs=1e-12)


class TestTruncatedMean:
    @pytest.mark.parametrize(
        'k,mu,expected', [[0, 2.0, 0.0], [1, 1.0, 0.6321206], [2, 1.0, 0.8963618]]
    )
    def test_values(self, k: int, mu: float, expected: float) -> None:
        assert g(k, mu) == pytest.approx(expected, abs=1e-7)

    @pytest.mark.parametrize('mu', MU_GRID)
    @pytest.mark.parametrize('k', SLACK_GRID)
    def test_forms_agree(self, k: int, mu: float) -> None:
        value = g(k, mu)
        assert value == pytest.approx(g_series(k, mu), abs=1e-12)
        assert value == pytest.approx(sum(survival(i, mu) for i in range(1, k + 1)), abs=1e-12)
        assert value == pytest.approx(truncated_mean_series(k, mu), abs=1e-12)

    @pytest.mark.parametrize('mu', MU_GRID)
    def test_bounded_and_monotone(self, mu: float) -> None:
        values = [g(k, mu) for k in range(0, 8)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        for k, value in enumerate(values):
            assert 0 <= value <= min(k, mu) + 1e-15
        by_mean = [g(3, m) for m in MU_GRID]
        assert all(b > a for a, b in zip(by_mean, by_mean[1:]))

    @pytest.mark.parametrize('mu', [0.5, 1.0, 4.0, 10.0])
    def test_large_capacity_limit(self, mu: float) -> None:
        assert abs(g(40, mu) - mu) < 1e-9

    def test_zero_mean(self) -> None:
        assert g(4, 0.0) == 0.0


class TestMoments:
    def test_single_seat(self) -> None:
        stats = moments(1, 1.0)
        assert stats['g'] == pytest.approx(0.6321, abs=1e-4)
        assert stats['delta_g'] == pytest.approx(0.6321, abs=1e-4)
        assert stats['g_prime'] == pytest.approx(0.3679, abs=1e-4)
        assert stats['delta_g_prime'] == pytest.approx(0.3679, abs=1e-4)

    def test_two_seats(self) -> None:
        stats = moments(2, 4.0)
        assert stats['delta_g'] == pytest.approx(0.9084, abs=1e-4)
        assert stats['delta_g_prime'] == pytest.approx(0.0733, abs=1e-4)
        assert stats['g_prime'] == pytest.approx(0.0916, abs=1e-4)

    @pytest.mark.parametrize('k', SLACK_GRID)
    def test_zero_mean(self, k: int) -> None:
        stats = moments(k, 0.0)
        assert stats['g'] == 0
        assert stats['delta_g'] == 0
        assert stats['g_prime'] == 1
        assert stats['delta_g_prime'] == (1 if k == 1 else 0)

    def test_difference_is_survival(self) -> None:
        for mu in MU_GRID:
            for k in SLACK_GRID:
                assert moments(k, mu)['delta_g'] == pytest.approx(
                    g(k, mu) - g(k - 1, mu), abs=1e-12
                )

    def test_no_slack_seat(self) -> None:
        with pytest.raises(ValueError):
            moments(0, 1.0)


class TestFiniteDifferences:
    @pytest.mark.parametrize('mu', MU_GRID)
    @pytest.mark.parametrize('k', SLACK_GRID)
    def test_matches_closed_forms(self, k: int, mu: float) -> None:
        stats = moments(k, mu)
        fd_g, fd_delta = fd_check(k, mu, 1e-5)
        assert fd_g == pytest.approx(stats['g_prime'], abs=1e-6)
        assert fd_delta == pytest.approx(stats['delta_g_prime'], abs=1e-6)

    def test_positive_sign_of_difference_derivative(self) -> None:
        _, fd_delta = fd_check(3, 2.0)
        assert fd_delta > 0
        assert fd_delta == pytest.approx(pmf(2, 2.0), abs=1e-6)

    @pytest.mark.parametrize(
        'k,mu,h', [[1, 1e-8, 1e-5], [1, 1.0, 0.0], [1, 1.0, -1e-5], [0, 1.0, 1e-5]]
    )
    def test_rejected(self, k: int, mu: float, h: float) -> None:
        with pytest.raises(ValueError):
            fd_check(k, mu, h)
