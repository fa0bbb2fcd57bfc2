"""
Poisson probabilities and the capacity-truncated mean g(k; mu) = E[min(M, k)], M ~ Poisson(mu)
"""

import math
from scipy.special import gammainc, gammaincc, gammaln
from typing import Tuple

from .constants import LOG_SPACE_MU
from .types import PoissonMoments

# mu ** m / m! overflows a float beyond this
DIRECT_PMF_MAX_M = 150


def _check_domain(k: int, mu: float) -> None:
    if mu < 0 or math.isnan(mu):
        raise ValueError(f'Poisson mean must be non-negative ({mu})')
    if k < 0:
        raise ValueError(f'count must be non-negative ({k})')


def series_cutoff(mu: float) -> int:
    """Truncation index for infinite Poisson sums; the tail beyond it is negligible."""
    return int(math.ceil(mu + 20 * math.sqrt(mu) + 20))


def pmf(m: int, mu: float) -> float:
    """P(M = m), computed in log-space for large means."""
    _check_domain(m, mu)
    if mu == 0:
        return 1.0 if m == 0 else 0.0
    if mu > LOG_SPACE_MU or m > DIRECT_PMF_MAX_M:
        return math.exp(m * math.log(mu) - mu - float(gammaln(m + 1)))
    return math.exp(-mu) * mu**m / math.factorial(m)


def survival(k: int, mu: float) -> float:
    """P(M >= k) via the regularized lower incomplete gamma function."""
    _check_domain(k, mu)
    if k == 0:
        return 1.0
    return float(gammainc(k, mu))


def g(k: int, mu: float) -> float:
    """Expected number of accepted mid-route riders with k free seats.

    sum_{m<k} m P(M = m) + k P(M >= k)
    """
    _check_domain(k, mu)
    if k == 0 or mu == 0:
        return 0.0
    return sum(m * pmf(m, mu) for m in range(1, k)) + k * survival(k, mu)


def g_series(k: int, mu: float) -> float:
    """The same expectation written with the upper index k in both sums.

    sum_{m=0..k} m P(M = m) + k (1 - sum_{m=0..k} P(M = m))
    """
    _check_domain(k, mu)
    probabilities = [pmf(m, mu) for m in range(k + 1)]
    return sum(m * p for m, p in enumerate(probabilities)) + k * (1 - sum(probabilities))


def truncated_mean_series(k: int, mu: float) -> float:
    """Brute-force sum_m min(m, k) P(M = m) up to series_cutoff(mu)."""
    _check_domain(k, mu)
    return sum(min(m, k) * pmf(m, mu) for m in range(series_cutoff(mu) + 1))


def moments(k: int, mu: float) -> PoissonMoments:
    """g, its first difference in k and both mu-derivatives at (k, mu).

    The derivative of the difference uses the positive sign, d/dmu P(M >= k) = P(M = k - 1).
    """
    _check_domain(k, mu)
    if k == 0:
        raise ValueError('delta_g is undefined at k=0 (no slack seat to remove)')
    return PoissonMoments(
        g=g(k, mu),
        delta_g=survival(k, mu),
        g_prime=float(gammaincc(k, mu)),
        delta_g_prime=pmf(k - 1, mu),
    )


def fd_check(k: int, mu: float, h: float = 1e-5) -> Tuple[float, float]:
    """Central finite differences of g and of g(k) - g(k - 1) with respect to mu."""
    if k < 1:
        raise ValueError(f'fd_check needs at least one slack seat ({k})')
    if h <= 0 or h >= mu:
        raise ValueError(f'step must satisfy 0 < h < mu (h={h}, mu={mu})')

    def delta(mu_: float) -> float:
        return g(k, mu_) - g(k - 1, mu_)

    return (
        (g(k, mu + h) - g(k, mu - h)) / (2 * h),
        (delta(mu + h) - delta(mu - h)) / (2 * h),
    )
