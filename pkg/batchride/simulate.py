"""
Monte Carlo dispatch cycles: terminal boarding, departure, mid-route admission and renewal-reward profit
"""

import numpy as np
from concurrent.futures import ThreadPoolExecutor
from progressbar import progressbar
from typing import Dict, List, Optional, Tuple

from .constants import SIM_BLOCK_SIZE, SIM_VARIANTS
from .model import expected_wait, midroute_mean, profit_rate
from .types import Estimate, MarketParams, SimConfig, SimResult
from .util import logger

# per-cycle columns produced by a block: mean wait, paid mid-route riders, revenue, length
CycleBlock = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def seeded_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for one block of cycles, fixed by (seed, stream_id)."""
    if seed < 0 or stream_id < 0:
        raise ValueError(f'seed and stream id must be non-negative ({seed}, {stream_id})')
    sequence = np.random.SeedSequence(seed, spawn_key=(stream_id,))
    return np.random.Generator(np.random.PCG64(sequence))


def sim_config(
    params: MarketParams,
    n: int,
    cycles: int,
    seed: int,
    midroute_variant: str = 'aggregate_min',
) -> SimConfig:
    if cycles < 1:
        raise ValueError(f'cycles must be at least 1 ({cycles})')
    if not 1 <= n <= params['capacity']:
        raise ValueError(f'threshold {n} outside 1..{params["capacity"]}')
    if midroute_variant not in SIM_VARIANTS:
        raise ValueError(f'unknown mid-route variant {repr(midroute_variant)}')
    if seed < 0:
        raise ValueError(f'seed must be non-negative ({seed})')
    return SimConfig(
        params=params,
        n=n,
        cycles=cycles,
        seed=seed,
        midroute_variant=midroute_variant,  # type: ignore
    )


def _simulate_block(config: SimConfig, block: int) -> CycleBlock:
    params = config['params']
    n = config['n']
    slack = params['capacity'] - n
    start = block * SIM_BLOCK_SIZE
    size = min(SIM_BLOCK_SIZE, config['cycles'] - start)
    rng = seeded_stream(config['seed'], block)

    epochs = np.cumsum(rng.exponential(1 / params['arrival_rate'], size=(size, n)), axis=1)
    departure = epochs[:, -1]
    waits = (departure[:, None] - epochs).mean(axis=1)

    requests = rng.poisson(params['arrival_rate'] * params['travel_time'], size=size)
    if config['midroute_variant'] == 'sequential_thinned':
        riders = np.minimum(rng.binomial(requests, params['theta']), slack).astype(float)
    else:
        riders = params['theta'] * np.minimum(requests, slack)

    revenue = params['p_incumbent'] * (n + 0.5 * riders)
    length = departure + 2 * params['travel_time']
    return waits, riders, revenue, length


def _estimate(values: np.ndarray) -> Estimate:
    std_error = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return Estimate(mean=float(values.mean()), std_error=std_error)


def _ratio_estimate(revenue: np.ndarray, length: np.ndarray, op_cost: float) -> Estimate:
    """Renewal-reward rate sum(revenue) / sum(length) - C, delta-method standard error."""
    ratio = revenue.sum() / length.sum()
    std_error = 0.0
    if revenue.size > 1:
        residual = revenue - ratio * length
        std_error = float(residual.std(ddof=1) / np.sqrt(revenue.size) / length.mean())
    return Estimate(mean=float(ratio - op_cost), std_error=std_error)


def simulate(config: SimConfig, workers: int = 1, show_progress: bool = False) -> SimResult:
    """
    Simulate config['cycles'] independent dispatch cycles.

    Cycles are grouped in blocks of SIM_BLOCK_SIZE, each drawing from its own stream, and
    the blocks are concatenated in order, so the result depends only on (seed, cycles) and
    not on the number of workers.
    """
    if config['cycles'] < 1:
        raise ValueError(f'cycles must be at least 1 ({config["cycles"]})')
    if workers < 1:
        raise ValueError(f'workers must be at least 1 ({workers})')
    blocks = range(-(-config['cycles'] // SIM_BLOCK_SIZE))
    iterfunc = progressbar if show_progress else iter
    logger.info(
        f'simulating {config["cycles"]} cycles at n={config["n"]} '
        f'({config["midroute_variant"]}, {len(blocks)} blocks, {workers} workers)'
    )

    results: List[CycleBlock] = []
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for result in iterfunc(executor.map(lambda b: _simulate_block(config, b), blocks)):
            results.append(result)

    waits, riders, revenue, length = (np.concatenate(column) for column in zip(*results))
    return SimResult(
        mean_wait=_estimate(waits),
        mean_midroute=_estimate(riders),
        profit_rate=_ratio_estimate(revenue, length, config['params']['op_cost']),
        cycles_run=int(waits.size),
    )


def analytic_targets(config: SimConfig) -> Dict[str, float]:
    """Closed-form values each simulated estimate converges to."""
    params = dict(config['params'])
    params['midroute_form'] = (
        'thinned' if config['midroute_variant'] == 'sequential_thinned' else 'linear'
    )
    return {
        'mean_wait': expected_wait(config['n'], params['arrival_rate']),
        'mean_midroute': midroute_mean(params, config['n']),  # type: ignore
        'profit_rate': profit_rate(params, config['n']),  # type: ignore
    }


def z_scores(result: SimResult, targets: Dict[str, float]) -> Dict[str, Optional[float]]:
    """
    (estimate - target) / standard error

    A spreadless estimate scores 0 on its target and None (null in JSON) anywhere else.
    """
    scores: Dict[str, Optional[float]] = {}
    for name, target in targets.items():
        estimate: Estimate = result[name]  # type: ignore
        gap = estimate['mean'] - target
        if estimate['std_error'] > 0:
            scores[name] = gap / estimate['std_error']
        else:
            scores[name] = 0.0 if abs(gap) < 1e-12 else None
    return scores
