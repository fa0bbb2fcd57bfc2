import math
import pytest

from batchride.conditions import (
    EQUIVALENCE_FORMS,
    cell_key,
    condition_b1,
    condition_b1_margin,
    condition_m_direct,
    condition_m_factorial,
    condition_m_factorial_margin,
    condition_m_factorial_verdict,
    condition_m_margin,
    condition_m_probabilistic,
    condition_m_verdict,
    equivalence_grid,
    exp_bound,
    exp_bound_margin,
    exp_bound_verdict,
    lemma_b1_region,
    mu_dagger,
    mu_star,
    single_seat_identities,
    table_b,
    verdict,
)
from batchride.constants import TABLE_B_AXIS, TABLE_C_MU_GRID
from batchride.util import NoRootError

MU_GRID = [0.1, 0.33, 0.66, 1.0, 2.0, 3.5, 5.0]


class TestConditionM:
    def test_direct_single_seat(self) -> None:
        assert condition_m_direct(5, 1.0, 1.0, 'positive')

    def test_direct_two_seats(self) -> None:
        assert not condition_m_direct(4, 1.0, 1.0, 'positive')
        assert condition_m_direct(4, 1.0, 1.0, 'paper_C_negative')

    @pytest.mark.parametrize(
        'arrival_rate,travel_time', [[0.5, 2.0], [2.0, 0.5], [1.0, 1.0], [4.0, 0.25]]
    )
    def test_direct_depends_on_product(self, arrival_rate: float, travel_time: float) -> None:
        for n in range(1, 6):
            for convention in ['positive', 'paper_C_negative']:
                assert condition_m_direct(n, arrival_rate, travel_time, convention) == (
                    condition_m_probabilistic(n, 1.0, convention)
                )

    @pytest.mark.parametrize('n', [1, 2, 3, 4, 5])
    def test_zero_mean_is_boundary(self, n: int) -> None:
        assert condition_m_margin(n, 0.0) == 0
        assert not condition_m_probabilistic(n, 0.0)

    def test_single_threshold_fails_at_low_demand(self) -> None:
        assert not condition_m_probabilistic(1, 0.5)

    @pytest.mark.parametrize('mu', MU_GRID)
    def test_negative_convention_is_weaker(self, mu: float) -> None:
        for n in range(1, 6):
            if condition_m_probabilistic(n, mu, 'positive'):
                assert condition_m_probabilistic(n, mu, 'paper_C_negative')

    @pytest.mark.parametrize('mu', MU_GRID)
    def test_single_seat_matches_exp_bound(self, mu: float) -> None:
        assert condition_m_probabilistic(5, mu) == exp_bound(5, mu)
        assert condition_m_probabilistic(5, mu)

    def test_rejected(self) -> None:
        with pytest.raises(ValueError):
            condition_m_direct(3, 0.0, 1.0)
        with pytest.raises(ValueError):
            condition_m_probabilistic(6, 1.0)
        with pytest.raises(ValueError):
            condition_m_probabilistic(3, 1.0, 'negative')


class TestFactorialForm:
    def test_values(self) -> None:
        assert condition_m_factorial(5, 1.0)
        assert condition_m_factorial_margin(4, 1.0) == pytest.approx(6 * math.e - 19)
        assert not condition_m_factorial(4, 1.0)

    def test_zero_mean(self) -> None:
        assert condition_m_factorial_margin(5, 0.0) == 0
        assert not condition_m_factorial(5, 0.0)

    @pytest.mark.parametrize('mu', MU_GRID)
    def test_scaled_probabilistic_margin(self, mu: float) -> None:
        for n in range(1, 6):
            assert condition_m_factorial_margin(n, mu) == pytest.approx(
                math.exp(mu) * condition_m_margin(n, mu, 'positive'), abs=1e-9
            )


class TestExpBound:
    @pytest.mark.parametrize('n', [3, 4, 5])
    @pytest.mark.parametrize('mu', [0.01, 0.5, 1.0, 5.0, 20.0])
    def test_holds_from_three(self, n: int, mu: float) -> None:
        assert exp_bound(n, mu)

    @pytest.mark.parametrize('n', [3, 4, 5])
    @pytest.mark.parametrize('mu', [1e-8, 1e-5, 1e-4, 2e-4, 1e-3])
    def test_holds_near_zero(self, n: int, mu: float) -> None:
        assert exp_bound_verdict(n, mu) == 'holds'
        assert exp_bound(n, mu)
        assert exp_bound_margin(n, mu) > 0

    def test_margin_keeps_precision(self) -> None:
        # n = 3 cancels the quadratic term, leaving the cubic remainder
        assert exp_bound_margin(3, 1e-5) == pytest.approx(1e-15 / 6, rel=1e-4)

    @pytest.mark.parametrize('n', [1, 2, 3])
    def test_zero_mean_is_boundary(self, n: int) -> None:
        assert exp_bound_verdict(n, 0.0) == 'boundary'
        assert not exp_bound(n, 0.0)

    def test_two_and_one(self) -> None:
        assert not exp_bound(2, 0.80)
        assert exp_bound(2, 0.815)
        assert not exp_bound(1, 1.78)
        assert exp_bound(1, 1.81)

    def test_roots(self) -> None:
        assert mu_dagger(2)['value'] == pytest.approx(0.8073, abs=1e-4)
        assert mu_dagger(1)['value'] == pytest.approx(1.7933, abs=1e-4)

    def test_no_root(self) -> None:
        with pytest.raises(NoRootError):
            mu_dagger(3)
        with pytest.raises(ValueError):
            mu_dagger(0)


class TestConditionB1:
    @pytest.mark.parametrize('n,mu,expected', [[5, 1.0, False], [5, 2.0, True], [3, 4.0, True]])
    def test_values(self, n: int, mu: float, expected: bool) -> None:
        assert condition_b1(n, mu) is expected

    def test_mu_star(self) -> None:
        root = mu_star()
        assert root['value'] == pytest.approx(1.1462, abs=1e-4)
        assert abs(root['residual']) < 1e-10
        assert not condition_b1(5, root['value'] - 1e-3)
        assert condition_b1(5, root['value'] + 1e-3)

    def test_low_demand_region(self) -> None:
        assert lemma_b1_region() == []

    @pytest.mark.parametrize('mu', list(TABLE_C_MU_GRID))
    def test_single_seat_identities(self, mu: float) -> None:
        for name, (general, reduced) in single_seat_identities(mu).items():
            assert general == reduced, name

    def test_margin_at_single_seat(self) -> None:
        assert condition_b1_margin(5, 1.0) == pytest.approx(
            2 - (1 - math.exp(-1)) - 3.5 * math.exp(-1) - 0.5 * math.exp(-1)
        )


class TestVerdict:
    def test_fields(self) -> None:
        result = verdict(5, 1.0, 1.0)
        assert result['mu'] == 1.0
        assert result['direct_M']
        assert result['prob_M']
        assert result['factorial_M']
        assert result['exp_bound']
        assert not result['b1']
        assert result['sign_convention'] == 'positive'
        assert result['verdicts'] == {
            'direct_M': 'holds',
            'prob_M': 'holds',
            'factorial_M': 'holds',
            'exp_bound': 'holds',
            'b1': 'fails',
        }

    def test_boundary_is_not_folded(self) -> None:
        result = verdict(5, 0.5, 1.0)
        for name in ['direct_M', 'prob_M', 'factorial_M', 'exp_bound', 'b1']:
            assert result[name] is (result['verdicts'][name] == 'holds')

    @pytest.mark.parametrize('n', [1, 2, 3, 4, 5])
    def test_zero_mean_verdicts(self, n: int) -> None:
        assert condition_m_verdict(n, 0.0) == 'boundary'
        assert condition_m_factorial_verdict(n, 0.0) == 'boundary'


class TestTableB:
    def test_cell_key(self) -> None:
        assert cell_key(arrival_rate=1.0, travel_time=2.0) == 'arrival_rate=1,travel_time=2'

    @pytest.mark.parametrize('n', [3, 4])
    def test_all_hold(self, n: int) -> None:
        report = table_b(n)
        assert len(report['cells']) == 25
        assert all(cell['holds'] for cell in report['cells'].values())
        assert report['agreement_counts'] == {'condition_b1': {'Yes': 25, 'No': 0}}

    def test_single_seat(self) -> None:
        report = table_b(5)
        holding = sorted(
            (cell['arrival_rate'], cell['travel_time'])
            for cell in report['cells'].values()
            if cell['holds']
        )
        assert holding == [(1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]
        assert report['axes']['arrival_rate'] == list(TABLE_B_AXIS)
        cell = report['cells'][cell_key(arrival_rate=2.0, travel_time=2.0)]
        assert cell['mu'] == 4.0
        assert cell['verdict'] == 'holds'


class TestEquivalenceGrid:
    def test_empty_grid(self) -> None:
        report = equivalence_grid([1, 2], [])
        assert report['cells'] == {}
        assert report['divergences'] == []
        counts = report['agreement_counts']
        assert all(count == 0 for row in counts.values() for count in row.values())

    def test_positive_convention(self) -> None:
        report = equivalence_grid()
        counts = report['agreement_counts']
        assert len(report['cells']) == 250
        assert counts['direct']['probabilistic'] == 250
        assert counts['finite_sum']['probabilistic'] == 250
        for form in EQUIVALENCE_FORMS:
            assert counts[form][form] == 250
        single_seat = [cell for cell in report['cells'].values() if cell['n'] == 5]
        assert len(single_seat) == 50
        assert all(cell['probabilistic'] == cell['exp_bound'] for cell in single_seat)
        assert all(d['form'] == 'exp_bound' for d in report['divergences'])

    def test_negative_convention_divergences(self) -> None:
        report = equivalence_grid(sign_convention='paper_C_negative')
        counts = report['agreement_counts']
        expected = sum(250 - counts[form]['probabilistic'] for form in EQUIVALENCE_FORMS)
        assert len(report['divergences']) == expected
        assert counts['direct']['probabilistic'] == 250
        for divergence in report['divergences']:
            assert divergence['convention'] == 'paper_C_negative'
            cell = report['cells'][cell_key(n=divergence['n'], mu=divergence['mu'])]
            assert cell['verdicts'][divergence['form']] == divergence['value']
            assert divergence['value'] != divergence['probabilistic']

    def test_cells_carry_verdicts(self) -> None:
        report = equivalence_grid([3], [1e-5, 1.0])
        for cell in report['cells'].values():
            assert set(cell['verdicts']) == set(EQUIVALENCE_FORMS)
            for form in EQUIVALENCE_FORMS:
                assert cell[form] is (cell['verdicts'][form] == 'holds')
        small = report['cells'][cell_key(n=3, mu=1e-5)]
        assert small['verdicts']['exp_bound'] == 'holds'
