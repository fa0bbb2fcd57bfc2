"""
Cycle profit of the incumbent shuttle, threshold increments and the optimal departure threshold
"""

import math
import numpy as np
import pandas as pd
from progressbar import progressbar
from typing import Iterable, List, Optional, Sequence, Tuple

from .constants import (
    BINDING_ORDER,
    CEILING_SLACK,
    DEFAULT_CAPACITY,
    FEASIBILITY_SLACK,
    LAMBDA_ROOT_CEILING,
    LAMBDA_ROOT_FLOOR,
    LAMBDA_SCAN_POINTS,
)
from .inputs import replace_params
from .kernel import g, moments
from .types import (
    CycleEvaluation,
    EntrantPricing,
    MarketParams,
    PricingComparison,
    RootResult,
    ThresholdSolution,
)
from .util import NoRootError, UnsupportedConfigurationError, bisect_root, logger, sign_changes

SWEEP_COLUMNS = [
    'arrival_rate',
    'travel_time',
    'mu',
    'n_unconstrained',
    'demand_ceiling',
    'n_constrained',
    'binding',
    'divergence_flag',
    'profit_rate',
]


def _check_threshold(n: int, capacity: int, upper: Optional[int] = None) -> None:
    upper = capacity if upper is None else upper
    if not 1 <= n <= upper:
        raise ValueError(f'threshold {n} outside 1..{upper} (capacity={capacity})')


def expected_wait(n: int, arrival_rate: float) -> float:
    """Mean queue wait of a terminal passenger when the vehicle leaves with the n-th arrival."""
    if arrival_rate <= 0:
        raise ValueError(f'arrival rate must be positive ({arrival_rate})')
    if n < 1:
        raise ValueError(f'threshold must be at least 1 ({n})')
    return (n - 1) / (2 * arrival_rate)


def midroute_mean(params: MarketParams, n: int) -> float:
    """Expected accepted mid-route riders with capacity - n free seats.

    The linear form scales the full-acceptance mean by theta, the thinned form
    admits from a Poisson stream of mean theta * lambda * T.
    """
    _check_threshold(n, params['capacity'])
    slack = params['capacity'] - n
    mu = params['arrival_rate'] * params['travel_time']
    if params['midroute_form'] == 'thinned':
        return g(slack, params['theta'] * mu)
    return params['theta'] * g(slack, mu)


def cycle_terms(params: MarketParams, n: int) -> Tuple[float, float]:
    """Expected cycle revenue A(n) and expected cycle length B(n).

    Mid-route riders travel half the route on average and pay half the fare.
    """
    revenue = params['p_incumbent'] * (n + 0.5 * midroute_mean(params, n))
    length = n / params['arrival_rate'] + 2 * params['travel_time']
    return revenue, length


def profit_rate(params: MarketParams, n: int) -> float:
    """Long-run profit per hour, A(n) / B(n) - C."""
    revenue, length = cycle_terms(params, n)
    return revenue / length - params['op_cost']


def increment(params: MarketParams, n: int) -> float:
    """Change in the profit rate from waiting for one more passenger, pi(n + 1) - pi(n)."""
    _check_threshold(n, params['capacity'], params['capacity'] - 1)
    return profit_rate(params, n + 1) - profit_rate(params, n)


def _numerator_at(
    n: int, arrival_rate: float, travel_time: float, capacity: int, fare: float = 1.0
) -> float:
    stats = moments(capacity - n, arrival_rate * travel_time)
    return fare * (
        2 * travel_time
        - (travel_time + n / (2 * arrival_rate)) * stats['delta_g']
        - stats['g'] / (2 * arrival_rate)
    )


def _require_full_acceptance(params: MarketParams, operation: str) -> None:
    if params['theta'] != 1:
        raise UnsupportedConfigurationError(
            f'{operation} is only defined for full mid-route acceptance (theta={params["theta"]})'
        )


def numerator(params: MarketParams, n: int) -> float:
    """
    Numerator N(n) of the increment, Delta pi(n) = N(n) / (B(n) B(n + 1)).

    Raises:
        UnsupportedConfigurationError: theta != 1, use increment instead
    """
    _check_threshold(n, params['capacity'], params['capacity'] - 1)
    _require_full_acceptance(params, 'numerator')
    return _numerator_at(
        n, params['arrival_rate'], params['travel_time'], params['capacity'], params['p_incumbent']
    )


def numerator_derivatives(params: MarketParams, n: int) -> Tuple[float, float]:
    """
    Partial derivatives of N(n) with respect to lambda and to T.

    2 lambda^2 / p_I times the first is the Condition M margin, and the second
    divided by p_I is the margin of inequality (B.1).
    """
    _check_threshold(n, params['capacity'], params['capacity'] - 1)
    _require_full_acceptance(params, 'numerator_derivatives')
    rate = params['arrival_rate']
    travel_time = params['travel_time']
    fare = params['p_incumbent']
    stats = moments(params['capacity'] - n, rate * travel_time)

    d_rate = fare * (
        n / (2 * rate**2) * stats['delta_g']
        - (travel_time + n / (2 * rate)) * travel_time * stats['delta_g_prime']
        + stats['g'] / (2 * rate**2)
        - travel_time * stats['g_prime'] / (2 * rate)
    )
    d_time = fare * (
        2
        - stats['delta_g']
        - (travel_time + n / (2 * rate)) * rate * stats['delta_g_prime']
        - stats['g_prime'] / 2
    )
    return d_rate, d_time


def evaluate(params: MarketParams) -> List[CycleEvaluation]:
    """Every per-threshold quantity for n = 1..capacity."""
    capacity = params['capacity']
    feasible = set(feasible_set(params))
    rows = []
    for n in range(1, capacity + 1):
        revenue, length = cycle_terms(params, n)
        has_next = n < capacity
        rows.append(
            CycleEvaluation(
                n=n,
                A=revenue,
                B=length,
                midroute=midroute_mean(params, n),
                profit_rate=revenue / length - params['op_cost'],
                increment=increment(params, n) if has_next else None,
                numerator=numerator(params, n) if has_next and params['theta'] == 1 else None,
                expected_wait=expected_wait(n, params['arrival_rate']),
                feasible=n in feasible,
            )
        )
    return rows


def lambda_dagger(
    n: int, travel_time: float, capacity: int = DEFAULT_CAPACITY
) -> RootResult:
    """
    Arrival rate at which the increment at threshold n changes sign.

    g and its difference depend on mu = lambda * T so the rate is found as the root of
    N(n; lambda, T) rather than from the rearranged fixed-point expression. The upper end
    of the bracket doubles from 1 until N is positive, then a geometric scan locates every
    sign change and the first is refined by bisection.

    Raises:
        NoRootError: N(n; ., T) does not change sign (the increment is single-signed)

    Returns:
        the smallest root, flagged as non-unique when the scan saw more than one sign change
    """
    _check_threshold(n, capacity, capacity - 1)
    if travel_time <= 0:
        raise ValueError(f'travel time must be positive ({travel_time})')

    def func(rate: float) -> float:
        return _numerator_at(n, rate, travel_time, capacity)

    upper = 1.0
    while func(upper) <= 0:
        upper *= 2
        if upper > LAMBDA_ROOT_CEILING:
            raise NoRootError(f'N({n}) stays non-positive up to lambda={LAMBDA_ROOT_CEILING}')

    grid = np.geomspace(LAMBDA_ROOT_FLOOR, upper, LAMBDA_SCAN_POINTS)
    values = [func(float(rate)) for rate in grid]
    crossings = list(sign_changes(values))
    if not crossings:
        raise NoRootError(
            f'N({n}) is positive on [{LAMBDA_ROOT_FLOOR}, {upper}] at T={travel_time}'
        )
    if len(crossings) > 1:
        logger.warning(
            f'N({n}) changes sign {len(crossings)} times at T={travel_time}, '
            'using the smallest root'
        )
    first = crossings[0]
    return bisect_root(func, float(grid[first]), float(grid[first + 1]), len(crossings) == 1)


def _tolerated(n: int, arrival_rate: float, w_bar: float) -> bool:
    return expected_wait(n, arrival_rate) <= w_bar + FEASIBILITY_SLACK


def _ceiling(arrival_rate: float, w_bar: float) -> int:
    # floor(2 lambda w_bar + 1), settled against the same wait test feasible_set applies
    ceiling = max(1, int(math.floor(2 * arrival_rate * w_bar + 1 + CEILING_SLACK)))
    while _tolerated(ceiling + 1, arrival_rate, w_bar):
        ceiling += 1
    while ceiling > 1 and not _tolerated(ceiling, arrival_rate, w_bar):
        ceiling -= 1
    return ceiling


def demand_ceiling(params: MarketParams) -> int:
    """Largest threshold passengers tolerate, floor(2 lambda w_bar + 1)."""
    return _ceiling(params['arrival_rate'], params['w_bar'])


def feasible_set(params: MarketParams) -> List[int]:
    """Thresholds whose expected wait does not exceed the tolerance. Always contains 1."""
    return list(range(1, min(demand_ceiling(params), params['capacity']) + 1))


def profit_argmax(params: MarketParams, candidates: Optional[Iterable[int]] = None) -> int:
    """Brute-force argmax of the profit rate, ties going to the smaller threshold."""
    if candidates is None:
        candidates = range(1, params['capacity'] + 1)
    best_n, best_value = 0, -math.inf
    for n in candidates:
        value = profit_rate(params, n)
        if value > best_value:
            best_n, best_value = n, value
    if not best_n:
        raise ValueError('no candidate thresholds')
    return best_n


def feasible_argmax(params: MarketParams) -> int:
    return profit_argmax(params, feasible_set(params))


def n_star_unconstrained(params: MarketParams) -> int:
    """First threshold whose increment is not positive, or capacity if every increment is."""
    for n in range(1, params['capacity']):
        if increment(params, n) <= 0:
            return n
    return params['capacity']


def n_star_constrained(params: MarketParams) -> ThresholdSolution:
    """
    Optimal threshold under the passenger participation constraint.

    n* = min(n_unconstrained, demand ceiling, capacity). The divergence flag is raised when
    the first-crossing rule disagrees with the brute-force argmax, over all thresholds or
    over the feasible set.
    """
    n_tilde = n_star_unconstrained(params)
    ceiling = demand_ceiling(params)
    n_constrained = min(n_tilde, ceiling, params['capacity'])
    binding = next(
        name
        for name, value in zip(BINDING_ORDER, (n_tilde, ceiling, params['capacity']))
        if value == n_constrained
    )
    divergent = n_tilde != profit_argmax(params) or n_constrained != feasible_argmax(params)
    if divergent:
        logger.warning(
            f'first-crossing threshold {n_tilde} disagrees with the brute-force argmax at '
            f'lambda={params["arrival_rate"]}, T={params["travel_time"]}'
        )
    return ThresholdSolution(
        n_unconstrained=n_tilde,
        demand_ceiling=ceiling,
        n_constrained=n_constrained,
        binding=binding,  # type: ignore
        divergence_flag=divergent,
    )


def endogenous_price(params: MarketParams, n: int) -> EntrantPricing:
    """Entrant fare that leaves passengers exactly indifferent at the incumbent's threshold n."""
    wait = expected_wait(n, params['arrival_rate'])
    return EntrantPricing(
        p_star=params['p_incumbent'] + params['wait_cost'] * wait, implied_w_bar=wait
    )


def compare_pricing_regimes(params: MarketParams, undercut: float = 0.0) -> PricingComparison:
    """
    Optimal threshold with the given tolerance against the one under entrant best-response pricing.

    The entrant prices against the incumbent's prevailing threshold, which sets the tolerance
    to that threshold's expected wait (scaled by 1 - undercut). The incumbent re-optimises
    under the new tolerance and the entrant re-prices until the threshold is stable.
    """
    if not 0 <= undercut < 1:
        raise ValueError(f'undercut must be in [0, 1) ({undercut})')
    n_tilde = n_star_unconstrained(params)
    n_exo = min(n_tilde, demand_ceiling(params), params['capacity'])

    current, rounds = n_exo, 0
    while True:
        pricing = endogenous_price(params, current)
        tolerance = pricing['implied_w_bar'] * (1 - undercut)
        following = min(n_tilde, _ceiling(params['arrival_rate'], tolerance), params['capacity'])
        if following == current:
            break
        current, rounds = following, rounds + 1

    assert current <= n_exo, f'endogenous threshold {current} exceeds exogenous {n_exo}'
    logger.debug(f'pricing regimes: exo={n_exo} endo={current} after {rounds} re-pricing rounds')
    return PricingComparison(n_exo=n_exo, n_endo=current, reference_pricing=pricing, rounds=rounds)


def acceptance_profile(params: MarketParams, n: int, thetas: Sequence[float]) -> List[float]:
    """Profit rate at threshold n for each mid-route acceptance probability."""
    return [profit_rate(replace_params(params, theta=theta), n) for theta in thetas]


def sweep(
    params: MarketParams,
    arrival_rates: Sequence[float],
    travel_times: Sequence[float],
    show_progress: bool = False,
) -> pd.DataFrame:
    """Threshold solution for every (lambda, T) pair, other parameters held fixed."""
    cells = [(rate, time) for rate in arrival_rates for time in travel_times]
    iterfunc = progressbar if show_progress else iter
    rows = []
    for rate, time in iterfunc(cells):
        cell_params = replace_params(params, arrival_rate=rate, travel_time=time)
        solution = n_star_constrained(cell_params)
        rows.append(
            {
                'arrival_rate': rate,
                'travel_time': time,
                'mu': rate * time,
                **solution,
                'profit_rate': profit_rate(cell_params, solution['n_constrained']),
            }
        )
    return pd.DataFrame.from_records(rows, columns=SWEEP_COLUMNS)
