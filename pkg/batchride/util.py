import logging
from importlib import metadata
from scipy import optimize
from typing import Callable, Iterable, Sequence

from .constants import BOUNDARY_TOLERANCE, ROOT_MAXITER, ROOT_XTOL
from .types import RootResult, Verdict

# name the logger after the package to make it simple to disable for packages using this one as a dependency
logger = logging.getLogger('batchride')
LOG_LEVELS = {
    'info': logging.INFO,
    'debug': logging.DEBUG,
    'warn': logging.WARN,
    'error': logging.ERROR,
}


class NoRootError(ValueError):
    """The function does not change sign on the searched interval."""


class UnsupportedConfigurationError(ValueError):
    """A closed form was requested outside the assumptions it was derived under."""


def tool_version() -> str:
    try:
        return metadata.version('batchride')
    except metadata.PackageNotFoundError:
        return 'unknown'


def classify(margin: float, scale: float = 1.0, tolerance: float = BOUNDARY_TOLERANCE) -> Verdict:
    """
    Classify lhs - rhs of a strict inequality.

    scale is the magnitude of the compared terms, margins within tolerance * scale are 'boundary'.
    """
    if abs(margin) <= tolerance * scale:
        return 'boundary'
    return 'holds' if margin > 0 else 'fails'


def bisect_root(
    func: Callable[[float], float], lower: float, upper: float, unique: bool = True
) -> RootResult:
    """Bisection root of func on [lower, upper].

    Raises:
        NoRootError: func(lower) and func(upper) do not have opposite signs
    """
    f_lower = func(lower)
    f_upper = func(upper)
    if f_lower == 0:
        return RootResult(
            value=lower, residual=0.0, iterations=0, bracket=(lower, upper), unique=unique
        )
    if f_upper == 0:
        return RootResult(
            value=upper, residual=0.0, iterations=0, bracket=(lower, upper), unique=unique
        )
    if f_lower * f_upper > 0:
        raise NoRootError(
            f'no sign change on [{lower}, {upper}]: f(lower)={f_lower}, f(upper)={f_upper}'
        )
    value, result = optimize.bisect(
        func,
        lower,
        upper,
        xtol=ROOT_XTOL,
        maxiter=ROOT_MAXITER,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        logger.warning(f'bisection on [{lower}, {upper}] stopped: {result.flag}')
    return RootResult(
        value=float(value),
        residual=float(func(value)),
        iterations=int(result.iterations),
        bracket=(lower, upper),
        unique=unique,
    )


def sign_changes(values: Sequence[float]) -> Iterable[int]:
    """Indices i where values[i] and values[i + 1] have strictly opposite signs (or hit zero)."""
    for i in range(len(values) - 1):
        if values[i] == 0 or values[i] * values[i + 1] < 0:
            yield i
