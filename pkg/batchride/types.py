from typing import Dict, List, Optional, Tuple

try:
    from typing import Literal, TypedDict  # type: ignore
except ImportError:
    from typing_extensions import Literal, TypedDict

SignConvention = Literal['positive', 'paper_C_negative']
MidrouteForm = Literal['linear', 'thinned']
SimVariant = Literal['aggregate_min', 'sequential_thinned']
Binding = Literal['profit', 'demand', 'capacity']
Verdict = Literal['holds', 'fails', 'boundary']


class MarketParams(TypedDict):
    """Market primitives. Units are hours and abstract money."""

    arrival_rate: float  # lambda, also the mid-route request rate
    travel_time: float  # T, one way
    p_incumbent: float
    p_entrant: float
    wait_cost: float  # c, per hour in the queue
    op_cost: float  # C, per hour of calendar time
    w_bar: float  # passenger tolerance before defecting
    capacity: int
    entrant_capacity: int  # informational only
    theta: float  # mid-route acceptance probability
    v: Optional[float]  # gross willingness to pay, no computational role
    midroute_form: MidrouteForm


class PoissonMoments(TypedDict):
    g: float
    delta_g: float
    g_prime: float
    delta_g_prime: float


class CycleEvaluation(TypedDict):
    n: int
    A: float
    B: float
    profit_rate: float
    midroute: float  # expected paid mid-route riders
    increment: Optional[float]
    numerator: Optional[float]
    expected_wait: float
    feasible: bool


class ThresholdSolution(TypedDict):
    n_unconstrained: int
    demand_ceiling: int
    n_constrained: int
    binding: Binding
    divergence_flag: bool


class EntrantPricing(TypedDict):
    p_star: float
    implied_w_bar: float


class PricingComparison(TypedDict):
    n_exo: int
    n_endo: int
    reference_pricing: EntrantPricing
    rounds: int


class RootResult(TypedDict):
    value: float
    residual: float
    iterations: int
    bracket: Tuple[float, float]
    unique: bool


class ConditionVerdict(TypedDict):
    n: int
    mu: float
    direct_M: bool
    prob_M: bool
    factorial_M: bool
    exp_bound: bool
    b1: bool
    verdicts: Dict[str, Verdict]  # holds / fails / boundary behind each boolean
    sign_convention: SignConvention


class GridReport(TypedDict):
    """Cells are keyed by their coordinates so assembly order never matters."""

    axes: Dict[str, List[float]]
    cells: Dict[str, Dict]
    agreement_counts: Dict[str, Dict[str, int]]
    divergences: List[Dict]


class Estimate(TypedDict):
    mean: float
    std_error: float


class SimConfig(TypedDict):
    params: MarketParams
    n: int
    cycles: int
    seed: int
    midroute_variant: SimVariant


class SimResult(TypedDict):
    mean_wait: Estimate
    mean_midroute: Estimate
    profit_rate: Estimate
    cycles_run: int


class CheckResult(TypedDict):
    name: str
    kind: Literal['PASS', 'REPORT']
    passed: bool
    detail: str


class RunManifest(TypedDict):
    command: str
    params: Optional[MarketParams]
    axes: Dict[str, List]
    seed: Optional[int]
    outputs: List[str]
    version: str
