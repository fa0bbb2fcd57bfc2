"""
Numerical verification suite for the threshold model

PASS items must hold for the run to succeed. REPORT items record findings about published
claims (and never fail the run).
"""

import math
import numpy as np
from progressbar import progressbar
from typing import Callable, Dict, List, Optional

from .conditions import (
    condition_b1,
    condition_m_direct,
    condition_m_probabilistic,
    equivalence_grid,
    lemma_b1_region,
    mu_dagger,
    mu_star,
    single_seat_identities,
    table_b,
)
from .constants import (
    CALIBRATION_WINDOW,
    DEFAULT_SEED,
    FIGURE2_DEFAULTS,
    SIGN_CONVENTIONS,
    TABLE_B_AXIS,
    TABLE_C_MU_GRID,
)
from .inputs import market_params, replace_params
from .kernel import fd_check, g, g_series, moments, survival
from .model import (
    acceptance_profile,
    compare_pricing_regimes,
    cycle_terms,
    increment,
    lambda_dagger,
    n_star_constrained,
    n_star_unconstrained,
    numerator,
    numerator_derivatives,
)
from .simulate import analytic_targets, seeded_stream, sim_config, simulate, z_scores
from .types import CheckResult, MarketParams
from .util import NoRootError, logger

THETA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
KERNEL_MU_GRID = (0.1, 0.5, 1.0, 2.0, 5.0)
Z_LIMIT = 3.0


def _result(name: str, passed: bool, detail: str, kind: str = 'PASS') -> CheckResult:
    return CheckResult(name=name, kind=kind, passed=bool(passed), detail=detail)  # type: ignore


def _off_target(score: Optional[float]) -> bool:
    return score is None or abs(score) >= Z_LIMIT


def _params(arrival_rate: float, travel_time: float, **kwargs) -> MarketParams:
    kwargs.setdefault('w_bar', 1.0)
    return market_params(arrival_rate=arrival_rate, travel_time=travel_time, **kwargs)


def check_kernel() -> List[CheckResult]:
    derivative_errors = []
    identity_errors = []
    for mu in KERNEL_MU_GRID:
        for k in range(1, 7):
            stats = moments(k, mu)
            fd_g, fd_delta = fd_check(k, mu)
            derivative_errors.append(
                max(abs(fd_g - stats['g_prime']), abs(fd_delta - stats['delta_g_prime']))
            )
            identity_errors.append(
                max(
                    abs(stats['g'] - g_series(k, mu)),
                    abs(stats['g'] - sum(survival(i, mu) for i in range(1, k + 1))),
                    abs(stats['delta_g'] - (g(k, mu) - g(k - 1, mu))),
                )
            )
    large_k = max(abs(g(40, mu) - mu) for mu in np.linspace(0.5, 10, 20))
    return [
        _result(
            'kernel derivatives match finite differences',
            max(derivative_errors) < 1e-6,
            f'max error {max(derivative_errors):.2e}',
        ),
        _result(
            'kernel summation identities',
            max(identity_errors) < 1e-12,
            f'max error {max(identity_errors):.2e}',
        ),
        _result('g(40; mu) approaches mu', large_k < 1e-9, f'max |g - mu| {large_k:.2e}'),
    ]


def check_roots() -> List[CheckResult]:
    star = mu_star()
    results = [
        _result(
            'mu* solves e^mu = mu + 2',
            abs(star['value'] - 1.146) < 1e-3 and abs(star['residual']) < 1e-10,
            f"mu*={star['value']:.4f} residual={star['residual']:.1e}",
        )
    ]
    for n, expected in ((2, 0.807), (1, 1.793)):
        root = mu_dagger(n)
        results.append(
            _result(
                f'mu_dagger({n}) solves the exponential bound',
                abs(root['value'] - expected) < 1e-3 and abs(root['residual']) < 1e-10,
                f"mu={root['value']:.4f} residual={root['residual']:.1e}",
            )
        )
    try:
        mu_dagger(3)
        results.append(_result('exponential bound has no root for n >= 3', False, 'root found'))
    except NoRootError:
        results.append(_result('exponential bound has no root for n >= 3', True, 'no root'))
    return results


def check_table_b() -> List[CheckResult]:
    expected_yes = {(1.0, 2.0), (2.0, 1.0), (2.0, 2.0)}
    results = []
    for n in (3, 4, 5):
        report = table_b(n)
        holding = {
            (cell['arrival_rate'], cell['travel_time'])
            for cell in report['cells'].values()
            if cell['holds']
        }
        target = expected_yes if n == 5 else {(a, b) for a in TABLE_B_AXIS for b in TABLE_B_AXIS}
        results.append(
            _result(
                f'(B.1) validity grid for n={n}',
                holding == target,
                f'{len(holding)}/{len(report["cells"])} cells hold',
            )
        )
    return results


def check_figure2() -> CheckResult:
    solution = n_star_constrained(market_params(**FIGURE2_DEFAULTS))
    return _result(
        'demand-constrained threshold at the figure parameters',
        solution['demand_ceiling'] == 2
        and solution['n_constrained'] == 2
        and solution['binding'] == 'demand',
        f"ceiling={solution['demand_ceiling']} n*={solution['n_constrained']} "
        f"binding={solution['binding']} n_unconstrained={solution['n_unconstrained']}",
    )


def check_sign_equivalence(draws: int, seed: int, show_progress: bool = False) -> CheckResult:
    rng = seeded_stream(seed, 1)
    iterfunc = progressbar if show_progress else iter
    violations = 0
    for _ in iterfunc(range(draws)):
        params = _params(rng.uniform(0.05, 5), rng.uniform(0.05, 3))
        n = int(rng.integers(1, 6))
        delta = increment(params, n)
        _, length = cycle_terms(params, n)
        _, next_length = cycle_terms(params, n + 1)
        ratio = numerator(params, n) / (length * next_length)
        if not math.isclose(delta, ratio, rel_tol=1e-10, abs_tol=1e-13):
            violations += 1
        elif abs(delta) > 1e-12 and np.sign(delta) != np.sign(ratio):
            violations += 1
    return _result(
        'increment and numerator agree', violations == 0, f'{violations}/{draws} violations'
    )


def check_critical_rates(draws: int, seed: int, show_progress: bool = False) -> List[CheckResult]:
    rng = seeded_stream(seed, 2)
    iterfunc = progressbar if show_progress else iter
    rooted = sign_violations = threshold_violations = 0
    for _ in iterfunc(range(draws)):
        travel_time = rng.uniform(0.05, 3)
        n = int(rng.integers(1, 6))
        try:
            root = lambda_dagger(n, travel_time)
        except NoRootError:
            continue
        if not root['unique']:
            continue
        rooted += 1
        rate = root['value']
        below = increment(_params(0.99 * rate, travel_time), n)
        above = increment(_params(1.01 * rate, travel_time), n)
        if not (below < 0 < above):
            sign_violations += 1
        if n == 5:
            slower = _params(rng.uniform(0.01, 0.99) * rate, travel_time)
            if n_star_unconstrained(slower) > 5:
                threshold_violations += 1
    return [
        _result(
            'increment changes sign at the critical arrival rate',
            sign_violations == 0,
            f'{sign_violations} violations over {rooted} draws with a root',
        ),
        _result(
            'below the critical rate the vehicle leaves with a free seat',
            threshold_violations == 0,
            f'{threshold_violations} violations',
        ),
    ]


def check_acceptance(draws: int, seed: int, show_progress: bool = False) -> CheckResult:
    rng = seeded_stream(seed, 3)
    iterfunc = progressbar if show_progress else iter
    checked = violations = 0
    for _ in iterfunc(range(draws)):
        params = _params(rng.uniform(0.05, 5), rng.uniform(0.05, 3))
        n = int(rng.integers(1, 6))
        if g(params['capacity'] - n, params['arrival_rate'] * params['travel_time']) <= 1e-9:
            continue
        checked += 1
        profile = acceptance_profile(params, n, THETA_GRID)
        if any(b <= a for a, b in zip(profile, profile[1:])):
            violations += 1
    return _result(
        'profit rate increases with mid-route acceptance',
        violations == 0,
        f'{violations} violations over {checked} draws',
    )


def check_pricing(draws: int, seed: int, show_progress: bool = False) -> CheckResult:
    rng = seeded_stream(seed, 4)
    iterfunc = progressbar if show_progress else iter
    violations = tightened = 0
    for _ in iterfunc(range(draws)):
        params = _params(
            rng.uniform(0.05, 5),
            rng.uniform(0.05, 3),
            w_bar=rng.uniform(0.01, 3),
            wait_cost=rng.uniform(0.5, 2),
        )
        comparison = compare_pricing_regimes(params, undercut=rng.uniform(0, 0.5))
        violations += comparison['n_endo'] > comparison['n_exo']
        tightened += comparison['n_endo'] < comparison['n_exo']
    return _result(
        'entrant best-response pricing never raises the threshold',
        violations == 0,
        f'{violations} violations, strictly lower in {tightened}/{draws} draws',
    )


def check_conditions() -> List[CheckResult]:
    mismatches = 0
    for convention in SIGN_CONVENTIONS:
        for n in range(1, 6):
            for mu in TABLE_C_MU_GRID:
                probabilistic = condition_m_probabilistic(n, mu, convention)
                for rate, time in ((mu, 1.0), (2 * mu, 0.5), (0.5 * mu, 2.0)):
                    mismatches += condition_m_direct(n, rate, time, convention) != probabilistic
    single_seat = sum(
        left != right
        for mu in TABLE_C_MU_GRID
        for left, right in single_seat_identities(mu).values()
    )
    region = lemma_b1_region()
    return [
        _result(
            'direct and probabilistic Condition M agree',
            mismatches == 0,
            f'{mismatches} mismatches (both conventions, three factorisations)',
        ),
        _result(
            'single free seat reductions',
            single_seat == 0,
            f'{single_seat} mismatches over {len(TABLE_C_MU_GRID)} points',
        ),
        _result('(B.1) holds for n <= 4 and mu <= 0.5', not region, f'{len(region)} violations'),
    ]


def check_derivatives() -> CheckResult:
    violations = 0
    for n in range(1, 6):
        for rate in (0.25, 0.5, 1.0, 2.0):
            for time in (0.25, 0.5, 1.0, 2.0):
                params = _params(rate, time)
                d_rate, d_time = numerator_derivatives(params, n)
                h_rate, h_time = 1e-6 * rate, 1e-6 * time
                fd_rate = (
                    numerator(replace_params(params, arrival_rate=rate + h_rate), n)
                    - numerator(replace_params(params, arrival_rate=rate - h_rate), n)
                ) / (2 * h_rate)
                fd_time = (
                    numerator(replace_params(params, travel_time=time + h_time), n)
                    - numerator(replace_params(params, travel_time=time - h_time), n)
                ) / (2 * h_time)
                if not math.isclose(d_rate, fd_rate, rel_tol=1e-5, abs_tol=1e-7):
                    violations += 1
                if not math.isclose(d_time, fd_time, rel_tol=1e-5, abs_tol=1e-7):
                    violations += 1
                if (d_rate > 0) != condition_m_direct(n, rate, time):
                    violations += 1
                if (d_time > 0) != condition_b1(n, rate * time):
                    violations += 1
    return _result(
        'numerator derivatives match finite differences and the conditions',
        violations == 0,
        f'{violations} violations',
    )


def _weakly_increasing_where(
    values: List[int], regular: List[bool]
) -> int:
    return sum(
        1
        for i in range(len(values) - 1)
        if regular[i] and regular[i + 1] and values[i + 1] < values[i]
    )


def check_monotonicity() -> List[CheckResult]:
    rates = [round(0.05 * i, 2) for i in range(1, 101)]
    times = [0.1, 0.25, 0.33, 0.5, 1.0, 2.0]
    rate_violations = time_violations = constrained_violations = 0

    for time in times:
        thresholds = [n_star_unconstrained(_params(rate, time)) for rate in rates]
        regular = [all(condition_m_direct(n, rate, time) for n in range(1, 6)) for rate in rates]
        rate_violations += _weakly_increasing_where(thresholds, regular)
    for rate in (0.25, 0.5, 1.0, 2.0):
        time_grid = [round(0.05 * i, 2) for i in range(1, 61)]
        thresholds = [n_star_unconstrained(_params(rate, time)) for time in time_grid]
        regular = [all(condition_b1(n, rate * time) for n in range(1, 6)) for time in time_grid]
        time_violations += _weakly_increasing_where(thresholds, regular)
    for w_bar in (0.1, 0.5, 1.0):
        constrained = [
            n_star_constrained(_params(rate, 0.33, w_bar=w_bar))['n_constrained'] for rate in rates
        ]
        constrained_violations += _weakly_increasing_where(constrained, [True] * len(rates))
    for rate in (0.5, 1.0, 2.0):
        constrained = [
            n_star_constrained(_params(rate, 0.33, w_bar=w_bar))['n_constrained']
            for w_bar in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0)
        ]
        constrained_violations += _weakly_increasing_where(constrained, [True] * 6)
    return [
        _result(
            'threshold weakly increasing in lambda where Condition M holds',
            rate_violations == 0,
            f'{rate_violations} violations',
        ),
        _result(
            'threshold weakly increasing in T where (B.1) holds',
            time_violations == 0,
            f'{time_violations} violations',
        ),
        _result(
            'constrained threshold weakly increasing in lambda and w_bar',
            constrained_violations == 0,
            f'{constrained_violations} violations',
        ),
    ]


def check_simulation(cycles: int, seed: int, workers: int = 1) -> List[CheckResult]:
    excursions = 0
    cells = 0
    for n in range(2, 7):
        for rate in (0.5, 1.0, 2.0):
            config = sim_config(_params(rate, 0.5), n, cycles, seed)
            scores = z_scores(simulate(config, workers), analytic_targets(config))
            cells += 1
            excursions += _off_target(scores['mean_wait'])
    results = [
        _result(
            'simulated wait matches (n - 1) / (2 lambda)',
            excursions <= 1,
            f'{excursions}/{cells} cells beyond {Z_LIMIT} standard errors',
        )
    ]

    excursions = cells = 0
    for n in range(1, 7):
        for mu in (0.33, 0.66, 1.0, 2.0):
            config = sim_config(_params(1.0, mu), n, cycles, seed + n)
            scores = z_scores(simulate(config, workers), analytic_targets(config))
            for name in ('mean_midroute', 'profit_rate'):
                cells += 1
                excursions += _off_target(scores[name])
    results.append(
        _result(
            'simulated mid-route load and profit rate match the closed forms',
            excursions <= max(1, cells // 20),
            f'{excursions}/{cells} estimates beyond {Z_LIMIT} standard errors',
        )
    )

    config = sim_config(_params(1.0, 0.5, theta=0.5), 5, cycles, seed)
    serial = simulate(config, workers=1)
    results.append(
        _result(
            'simulation independent of worker count',
            serial == simulate(config, workers=max(2, workers)),
            f"profit_rate={serial['profit_rate']['mean']:.6f}",
        )
    )
    return results


def report_lemma_c1() -> CheckResult:
    findings = []
    failing = 0
    for convention in SIGN_CONVENTIONS:
        failures = [
            (n, mu)
            for n in (3, 4, 5)
            for mu in TABLE_C_MU_GRID
            if not condition_m_probabilistic(n, mu, convention)
        ]
        failing += len(failures)
        first = f', first at n={failures[0][0]} mu={failures[0][1]}' if failures else ''
        findings.append(f'{convention}: fails in {len(failures)} cells{first}')
    return _result(
        'Condition M holds for every mu when n >= 3',
        failing == 0,
        '; '.join(findings),
        kind='REPORT',
    )


def report_table_c(show_progress: bool = False) -> List[CheckResult]:
    results = []
    for convention in SIGN_CONVENTIONS:
        report = equivalence_grid(sign_convention=convention, show_progress=show_progress)
        counts = report['agreement_counts']
        total = len(report['cells'])
        pairs = [
            ('probabilistic', 'finite_sum'),
            ('probabilistic', 'exp_bound'),
            ('finite_sum', 'exp_bound'),
        ]
        detail = ', '.join(f'{a}~{b} {counts[a][b]}/{total}' for a, b in pairs)
        results.append(
            _result(
                f'equivalence grid agreement ({convention})',
                all(counts[a][b] == total for a, b in pairs),
                detail,
                kind='REPORT',
            )
        )
    single_seat = equivalence_grid(thresholds=(5,))
    agree = single_seat['agreement_counts']['probabilistic']['exp_bound']
    results.append(
        _result(
            'single free seat: Condition M equals the exponential bound',
            agree == len(single_seat['cells']),
            f"{agree}/{len(single_seat['cells'])}",
        )
    )
    return results


def report_calibration_window() -> CheckResult:
    unconstrained = set()
    constrained = set()
    for rate in (0.5, 1.0, 1.5, 2.0):
        for mu in np.linspace(*CALIBRATION_WINDOW, 12):
            params = _params(rate, float(mu) / rate, w_bar=FIGURE2_DEFAULTS['w_bar'])
            solution = n_star_constrained(params)
            unconstrained.add(solution['n_unconstrained'])
            constrained.add(solution['n_constrained'])
    return _result(
        'optimal threshold never exceeds 4 in the calibration window',
        max(unconstrained) <= 4,
        f'unconstrained thresholds {sorted(unconstrained)}, '
        f"constrained at w_bar={FIGURE2_DEFAULTS['w_bar']} {sorted(constrained)}",
        kind='REPORT',
    )


def report_critical_rates(travel_time: float = 1.0) -> CheckResult:
    roots: Dict[int, str] = {}
    for n in range(1, 6):
        try:
            roots[n] = f"{lambda_dagger(n, travel_time)['value']:.4f}"
        except NoRootError:
            roots[n] = 'none'
    values = [float(v) for v in roots.values() if v != 'none']
    return _result(
        f'critical arrival rates increase with n (T={travel_time})',
        all(b >= a for a, b in zip(values, values[1:])),
        ', '.join(f'n={n}: {value}' for n, value in roots.items()),
        kind='REPORT',
    )


def run_verification(
    draws: int = 1000,
    sign_draws: int = 10000,
    cycles: int = 20000,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    show_progress: bool = False,
) -> List[CheckResult]:
    steps: List[Callable[[], object]] = [
        check_kernel,
        check_roots,
        check_table_b,
        check_figure2,
        lambda: check_sign_equivalence(sign_draws, seed, show_progress),
        lambda: check_critical_rates(draws, seed, show_progress),
        lambda: check_acceptance(draws, seed, show_progress),
        lambda: check_pricing(draws, seed, show_progress),
        check_conditions,
        check_derivatives,
        check_monotonicity,
        lambda: check_simulation(cycles, seed, workers),
        report_lemma_c1,
        lambda: report_table_c(show_progress),
        report_calibration_window,
        report_critical_rates,
    ]
    results: List[CheckResult] = []
    for step in steps:
        outcome = step()
        for result in outcome if isinstance(outcome, list) else [outcome]:
            level = logger.info if result['passed'] or result['kind'] == 'REPORT' else logger.error
            level(f"{result['kind']} {result['name']}: {result['detail']}")
            results.append(result)  # type: ignore
    return results


def all_passed(results: List[CheckResult]) -> bool:
    return all(result['passed'] for result in results if result['kind'] == 'PASS')
