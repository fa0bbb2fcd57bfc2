"""
Monotonicity conditions of the threshold model, their critical roots and the validity grids
"""

import math
from progressbar import progressbar
from typing import Dict, List, Sequence, Tuple

from .constants import (
    DEFAULT_CAPACITY,
    MU_DAGGER_BRACKET,
    MU_STAR_BRACKET,
    SIGN_CONVENTIONS,
    TABLE_B_AXIS,
    TABLE_C_MU_GRID,
    TABLE_C_THRESHOLDS,
)
from .kernel import moments, survival
from .types import ConditionVerdict, GridReport, RootResult, SignConvention, Verdict
from .util import NoRootError, bisect_root, classify, logger

# the forms compared in the equivalence grid, 'probabilistic' is the reference column
EQUIVALENCE_FORMS = ('direct', 'probabilistic', 'finite_sum', 'exp_bound')
# the factorial finite-sum form is written for a six-seat vehicle
FINITE_SUM_CAPACITY = 6


def _slack(n: int, capacity: int) -> int:
    if not 1 <= n <= capacity - 1:
        raise ValueError(
            f'threshold {n} outside 1..{capacity - 1}: the conditions need a free seat'
        )
    return capacity - n


def _sign(convention: SignConvention) -> float:
    if convention not in SIGN_CONVENTIONS:
        raise ValueError(f'unknown sign convention {repr(convention)}')
    return -1.0 if convention == 'paper_C_negative' else 1.0


def _compare(lhs: float, rhs: float) -> Verdict:
    return classify(lhs - rhs, max(1.0, abs(lhs), abs(rhs)))


def _condition_m_sides(
    n: int, mu: float, sign_convention: SignConvention, capacity: int
) -> Tuple[float, float]:
    stats = moments(_slack(n, capacity), mu)
    lhs = n * stats['delta_g'] + stats['g']
    rhs = (
        _sign(sign_convention) * (2 * mu**2 + n * mu) * stats['delta_g_prime']
        + mu * stats['g_prime']
    )
    return lhs, rhs


def condition_m_margin(
    n: int,
    mu: float,
    sign_convention: SignConvention = 'positive',
    capacity: int = DEFAULT_CAPACITY,
) -> float:
    """
    lhs - rhs of Condition M in its probabilistic form

    n P(M >= k) + E[min(M, k)] > +/-(2 mu^2 + n mu) P(M = k - 1) + mu P(M < k)
    """
    lhs, rhs = _condition_m_sides(n, mu, sign_convention, capacity)
    return lhs - rhs


def condition_m_verdict(
    n: int,
    mu: float,
    sign_convention: SignConvention = 'positive',
    capacity: int = DEFAULT_CAPACITY,
) -> Verdict:
    return _compare(*_condition_m_sides(n, mu, sign_convention, capacity))


def condition_m_probabilistic(
    n: int,
    mu: float,
    sign_convention: SignConvention = 'positive',
    capacity: int = DEFAULT_CAPACITY,
) -> bool:
    return condition_m_verdict(n, mu, sign_convention, capacity) == 'holds'


def condition_m_direct_verdict(
    n: int,
    arrival_rate: float,
    travel_time: float,
    sign_convention: SignConvention = 'positive',
    capacity: int = DEFAULT_CAPACITY,
) -> Verdict:
    """
    Condition M written in lambda and T

    n dg + g > 2 lambda^2 T (T + n / 2 lambda) dg' + lambda T g'
    """
    if arrival_rate <= 0 or travel_time <= 0:
        raise ValueError(
            f'arrival rate and travel time must be positive ({arrival_rate}, {travel_time})'
        )
    stats = moments(_slack(n, capacity), arrival_rate * travel_time)
    lhs = n * stats['delta_g'] + stats['g']
    rhs = (
        2
        * arrival_rate**2
        * travel_time
        * (travel_time + n / (2 * arrival_rate))
        * _sign(sign_convention)
        * stats['delta_g_prime']
        + arrival_rate * travel_time * stats['g_prime']
    )
    return _compare(lhs, rhs)


def condition_m_direct(
    n: int,
    arrival_rate: float,
    travel_time: float,
    sign_convention: SignConvention = 'positive',
    capacity: int = DEFAULT_CAPACITY,
) -> bool:
    result = condition_m_direct_verdict(n, arrival_rate, travel_time, sign_convention, capacity)
    return result == 'holds'


def _factorial_sides(n: int, mu: float) -> Tuple[float, float]:
    k = _slack(n, FINITE_SUM_CAPACITY)
    if mu < 0:
        raise ValueError(f'Poisson mean must be non-negative ({mu})')
    lhs = FINITE_SUM_CAPACITY * math.exp(mu)
    rhs = sum(
        (FINITE_SUM_CAPACITY - j + mu) * mu**j / math.factorial(j) for j in range(k - 1)
    ) + ((n + 1) + (n + 1) * mu + 2 * mu**2) * mu ** (k - 1) / math.factorial(k - 1)
    return lhs, rhs


def condition_m_factorial_margin(n: int, mu: float) -> float:
    lhs, rhs = _factorial_sides(n, mu)
    return lhs - rhs


def condition_m_factorial_verdict(n: int, mu: float) -> Verdict:
    """
    Finite-sum form of Condition M for a six-seat vehicle

    6 e^mu > sum_{j=0}^{k-2} (6 - j + mu) mu^j / j! + [(n + 1) + (n + 1) mu + 2 mu^2] mu^(k-1) / (k-1)!

    Multiplying the probabilistic form by e^mu gives exactly this inequality under the
    positive sign convention, so it carries no convention flag of its own.
    """
    return _compare(*_factorial_sides(n, mu))


def condition_m_factorial(n: int, mu: float) -> bool:
    return condition_m_factorial_verdict(n, mu) == 'holds'


def _exp_bound_terms(n: int, mu: float) -> Tuple[float, float]:
    if not 1 <= n <= FINITE_SUM_CAPACITY - 1:
        raise ValueError(f'threshold {n} outside 1..{FINITE_SUM_CAPACITY - 1}')
    if mu < 0:
        raise ValueError(f'Poisson mean must be non-negative ({mu})')
    # e^mu - 1 - mu - mu^2 / 2 = e^mu P(M >= 3), exact down to small mu
    remainder = math.exp(mu) * survival(3, mu) if mu > 0 else 0.0
    return remainder, (0.5 - 2 / (n + 1)) * mu**2


def exp_bound_margin(n: int, mu: float) -> float:
    remainder, quadratic = _exp_bound_terms(n, mu)
    return remainder + quadratic


def exp_bound_verdict(n: int, mu: float) -> Verdict:
    """e^mu > 1 + mu + (2 / (n + 1)) mu^2, judged against the terms left once 1 + mu cancels"""
    remainder, quadratic = _exp_bound_terms(n, mu)
    return classify(remainder + quadratic, remainder + abs(quadratic))


def exp_bound(n: int, mu: float) -> bool:
    return exp_bound_verdict(n, mu) == 'holds'


def _b1_sides(n: int, mu: float, capacity: int) -> Tuple[float, float]:
    stats = moments(_slack(n, capacity), mu)
    lhs = 2 * (1 - 0.5 * stats['delta_g'])
    rhs = (mu + n / 2) * stats['delta_g_prime'] + 0.5 * stats['g_prime']
    return lhs, rhs


def condition_b1_margin(n: int, mu: float, capacity: int = DEFAULT_CAPACITY) -> float:
    lhs, rhs = _b1_sides(n, mu, capacity)
    return lhs - rhs


def condition_b1_verdict(n: int, mu: float, capacity: int = DEFAULT_CAPACITY) -> Verdict:
    """
    Inequality (B.1), the sign of dN(n)/dT

    2 (1 - dg / 2) > mu dg' + (n / 2) dg' + g' / 2

    With a single free seat this reduces to e^mu > mu + 2.
    """
    return _compare(*_b1_sides(n, mu, capacity))


def condition_b1(n: int, mu: float, capacity: int = DEFAULT_CAPACITY) -> bool:
    return condition_b1_verdict(n, mu, capacity) == 'holds'


def mu_star() -> RootResult:
    """Root of e^mu = mu + 2, where (B.1) turns on for a single free seat."""
    return bisect_root(lambda mu: math.expm1(mu) - mu - 1, *MU_STAR_BRACKET)


def mu_dagger(n: int) -> RootResult:
    """
    Positive root of e^mu = 1 + mu + (2 / (n + 1)) mu^2

    Raises:
        NoRootError: n >= 3, the bound holds for every positive mu
    """
    if n < 1:
        raise ValueError(f'threshold must be at least 1 ({n})')
    if n >= 3:
        raise NoRootError(f'e^mu > 1 + mu + (2/{n + 1}) mu^2 holds for all mu > 0')
    return bisect_root(lambda mu: exp_bound_margin(n, mu), *MU_DAGGER_BRACKET)


def verdict(
    n: int,
    arrival_rate: float,
    travel_time: float,
    sign_convention: SignConvention = 'positive',
) -> ConditionVerdict:
    """Every condition at one (n, lambda, T) cell."""
    mu = arrival_rate * travel_time
    verdicts: Dict[str, Verdict] = {
        'direct_M': condition_m_direct_verdict(n, arrival_rate, travel_time, sign_convention),
        'prob_M': condition_m_verdict(n, mu, sign_convention),
        'factorial_M': condition_m_factorial_verdict(n, mu),
        'exp_bound': exp_bound_verdict(n, mu),
        'b1': condition_b1_verdict(n, mu),
    }
    return ConditionVerdict(
        n=n,
        mu=mu,
        direct_M=verdicts['direct_M'] == 'holds',
        prob_M=verdicts['prob_M'] == 'holds',
        factorial_M=verdicts['factorial_M'] == 'holds',
        exp_bound=verdicts['exp_bound'] == 'holds',
        b1=verdicts['b1'] == 'holds',
        verdicts=verdicts,
        sign_convention=sign_convention,
    )


def cell_key(**coordinates: float) -> str:
    return ','.join(f'{name}={value:g}' for name, value in coordinates.items())


def table_b(
    n: int,
    arrival_rates: Sequence[float] = TABLE_B_AXIS,
    travel_times: Sequence[float] = TABLE_B_AXIS,
) -> GridReport:
    """Validity of (B.1) at threshold n over a lambda x T grid."""
    cells: Dict[str, Dict] = {}
    for rate in arrival_rates:
        for time in travel_times:
            mu = rate * time
            result = condition_b1_verdict(n, mu)
            cells[cell_key(arrival_rate=rate, travel_time=time)] = {
                'n': n,
                'arrival_rate': rate,
                'travel_time': time,
                'mu': mu,
                'margin': condition_b1_margin(n, mu),
                'verdict': result,
                'holds': result == 'holds',
            }
    holding = sum(cell['holds'] for cell in cells.values())
    return GridReport(
        axes={'arrival_rate': list(arrival_rates), 'travel_time': list(travel_times)},
        cells=cells,
        agreement_counts={'condition_b1': {'Yes': holding, 'No': len(cells) - holding}},
        divergences=[],
    )


def _forms_at(n: int, mu: float, sign_convention: SignConvention) -> Dict[str, Verdict]:
    return {
        # lambda = mu, T = 1 factorisation of the same cell
        'direct': condition_m_direct_verdict(n, mu, 1.0, sign_convention),
        'probabilistic': condition_m_verdict(n, mu, sign_convention),
        'finite_sum': condition_m_factorial_verdict(n, mu),
        'exp_bound': exp_bound_verdict(n, mu),
    }


def equivalence_grid(
    thresholds: Sequence[int] = TABLE_C_THRESHOLDS,
    mu_grid: Sequence[float] = TABLE_C_MU_GRID,
    sign_convention: SignConvention = 'positive',
    show_progress: bool = False,
) -> GridReport:
    """
    Compare the forms of Condition M and the exponential bound at every (n, mu) cell.

    Each cell carries a boolean per form plus the holds/fails/boundary verdicts behind them.
    Agreement counts are pairwise over EQUIVALENCE_FORMS and compare verdicts. Every cell where
    a form's verdict differs from the probabilistic one is listed in divergences.
    """
    points: List[Tuple[int, float]] = [(n, mu) for n in thresholds for mu in mu_grid]
    iterfunc = progressbar if show_progress else iter
    cells: Dict[str, Dict] = {}
    counts = {a: {b: 0 for b in EQUIVALENCE_FORMS} for a in EQUIVALENCE_FORMS}
    divergences = []

    for n, mu in iterfunc(points):
        forms = _forms_at(n, mu, sign_convention)
        cells[cell_key(n=n, mu=mu)] = {
            'n': n,
            'mu': mu,
            **{form: result == 'holds' for form, result in forms.items()},
            'verdicts': forms,
        }
        for a in EQUIVALENCE_FORMS:
            for b in EQUIVALENCE_FORMS:
                counts[a][b] += forms[a] == forms[b]
        for form in EQUIVALENCE_FORMS:
            if forms[form] != forms['probabilistic']:
                divergences.append(
                    {
                        'n': n,
                        'mu': mu,
                        'form': form,
                        'convention': sign_convention,
                        'value': forms[form],
                        'probabilistic': forms['probabilistic'],
                    }
                )
    boundary = sum(
        result == 'boundary' for cell in cells.values() for result in cell['verdicts'].values()
    )
    if boundary:
        logger.info(f'{boundary} boundary verdicts over {len(cells)} cells ({sign_convention})')
    if divergences:
        logger.warning(
            f'{len(divergences)} form disagreements over {len(cells)} cells ({sign_convention})'
        )
    return GridReport(
        axes={'n': list(thresholds), 'mu': list(mu_grid)},
        cells=cells,
        agreement_counts=counts,
        divergences=divergences,
    )


def lemma_b1_region(
    thresholds: Sequence[int] = (1, 2, 3, 4),
    mu_grid: Sequence[float] = tuple(round(0.01 * i, 2) for i in range(1, 51)),
) -> List[Dict]:
    """Cells of the low-demand region (n <= 4, mu <= 0.5) where (B.1) does not hold."""
    return [
        {'n': n, 'mu': mu, 'margin': condition_b1_margin(n, mu), 'verdict': result}
        for n in thresholds
        for mu in mu_grid
        for result in [condition_b1_verdict(n, mu)]
        if result != 'holds'
    ]


def single_seat_identities(mu: float) -> Dict[str, Tuple[bool, bool]]:
    """Closed-form reductions at n = 5, each pairing the general evaluation with its reduction."""
    return {
        'condition_b1': (condition_b1(5, mu), _compare(math.exp(mu), mu + 2) == 'holds'),
        'condition_m': (condition_m_probabilistic(5, mu), exp_bound(5, mu)),
    }
