import argparse
import jsonschema.exceptions
import logging
import os
import sys
from argparse import ArgumentDefaultsHelpFormatter, ArgumentParser
from typing import Dict, List, Optional

from .conditions import equivalence_grid, table_b
from .constants import (
    DEFAULT_SEED,
    EXIT_IO,
    FIGURE2_DEFAULTS,
    MIDROUTE_FORMS,
    OUTPUT_DIR_ENV,
    SIGN_CONVENTIONS,
    SIM_VARIANTS,
    TABLE_B_AXIS,
    TABLE_B_THRESHOLDS,
    TABLE_C_MU_GRID,
    TABLE_C_THRESHOLDS,
)
from .inputs import (
    check_thresholds,
    load_params_file,
    parse_float_list,
    parse_int_list,
    prepare_market_params,
    resolve_output_dir,
)
from .model import evaluate, n_star_constrained, sweep
from .report import (
    build_manifest,
    csv_text,
    dump_json,
    evaluation_frame,
    write_csv,
    write_figure2,
    write_json,
    write_manifest,
    write_tables,
)
from .simulate import analytic_targets, sim_config, simulate, z_scores
from .types import MarketParams
from .util import LOG_LEVELS, logger
from .verify import all_passed, run_verification

# flag dest -> market parameter key
MARKET_FLAGS = {
    'arrival_rate': ('--lambda', float, 'passenger arrival rate per hour'),
    'travel_time': ('--travel-time', float, 'one-way travel time in hours'),
    'p_incumbent': ('--fare', float, 'incumbent fare'),
    'op_cost': ('--cost', float, 'operating cost per hour'),
    'w_bar': ('--wbar', float, 'passenger wait tolerance in hours'),
    'p_entrant': ('--p-entrant', float, 'entrant fare, derives the tolerance with --wait-cost'),
    'wait_cost': ('--wait-cost', float, 'passenger cost per hour of waiting'),
    'theta': ('--theta', float, 'mid-route acceptance probability'),
    'capacity': ('--capacity', int, 'incumbent seats'),
}


def file_path(path: str) -> str:
    if not os.path.exists(path):
        raise argparse.ArgumentTypeError(f'{repr(path)} is not a valid filename. does not exist')
    return path


def _common_arguments() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument('--log_level', default='info', choices=LOG_LEVELS.keys())
    parser.add_argument(
        '--progress', default=False, action='store_true', help='show progress bars on long loops'
    )
    parser.add_argument(
        '--output-dir',
        dest='output_dir',
        default=None,
        help=f'directory for written artifacts (default: ${OUTPUT_DIR_ENV} or the cwd)',
    )
    return parser


def _market_arguments() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    group = parser.add_argument_group('market parameters')
    for dest, (flag, kind, help_text) in MARKET_FLAGS.items():
        group.add_argument(flag, dest=dest, type=kind, default=None, help=help_text)
    group.add_argument(
        '--midroute-form', dest='midroute_form', choices=MIDROUTE_FORMS, default=None
    )
    group.add_argument(
        '--params', type=file_path, default=None, help='JSON file of market parameters'
    )
    return parser


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='batchride', formatter_class=ArgumentDefaultsHelpFormatter)
    common = _common_arguments()
    market = _market_arguments()
    commands = parser.add_subparsers(dest='command', required=True)

    def add(name: str, help_text: str, with_market: bool = True) -> ArgumentParser:
        return commands.add_parser(
            name,
            help=help_text,
            parents=[common, market] if with_market else [common],
            formatter_class=ArgumentDefaultsHelpFormatter,
        )

    add('eval', 'per-threshold profit, increment, numerator, wait and feasibility')
    add('solve', 'constrained and unconstrained optimal thresholds')

    sweep_parser = add('sweep', 'optimal thresholds over a lambda x T grid')
    sweep_parser.add_argument('--lambdas', type=parse_float_list, required=True)
    sweep_parser.add_argument(
        '--travel-times', dest='travel_times', type=parse_float_list, required=True
    )

    sim_parser = add('simulate', 'Monte Carlo estimates against the closed forms')
    sim_parser.add_argument('--n', type=int, required=True, help='departure threshold')
    sim_parser.add_argument('--cycles', type=int, default=100000)
    sim_parser.add_argument('--seed', type=int, default=DEFAULT_SEED)
    sim_parser.add_argument('--variant', choices=SIM_VARIANTS, default='aggregate_min')
    sim_parser.add_argument('--workers', type=int, default=1)

    tables_parser = add(
        'tables', '(B.1) validity grids and the Condition M equivalence grid', with_market=False
    )
    tables_parser.add_argument('--lambdas', type=parse_float_list, default=list(TABLE_B_AXIS))
    tables_parser.add_argument(
        '--travel-times', dest='travel_times', type=parse_float_list, default=list(TABLE_B_AXIS)
    )
    tables_parser.add_argument(
        '--thresholds', type=parse_int_list, default=list(TABLE_B_THRESHOLDS)
    )
    tables_parser.add_argument('--mu-grid', dest='mu_grid', type=parse_float_list, default=None)

    add('figure2', 'profit curve with the wait tolerance and the constrained optimum')

    verify_parser = add('verify', 'run the verification suite', with_market=False)
    verify_parser.add_argument('--draws', type=int, default=1000)
    verify_parser.add_argument('--sign-draws', dest='sign_draws', type=int, default=10000)
    verify_parser.add_argument('--cycles', type=int, default=20000)
    verify_parser.add_argument('--seed', type=int, default=DEFAULT_SEED)
    verify_parser.add_argument('--workers', type=int, default=1)
    return parser


def market_from_args(args: argparse.Namespace, base: Optional[Dict] = None) -> MarketParams:
    """Parameters from an optional base, then the --params file, then explicit flags."""
    content: Dict = dict(base or {})
    if args.params:
        content.update(load_params_file(args.params))
    for dest in list(MARKET_FLAGS) + ['midroute_form']:
        value = getattr(args, dest)
        if value is not None:
            content[dest] = value
    if args.p_entrant is not None and args.w_bar is None:
        # an explicit entrant fare wins over a tolerance from the base or the file
        content.pop('w_bar', None)
    return prepare_market_params(content)


def _emit(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def _write_artifacts(output_dir: str, manifest_args: Dict, writer) -> List[str]:
    os.makedirs(output_dir, exist_ok=True)
    outputs = writer(output_dir)
    manifest = build_manifest(outputs=outputs, **manifest_args)
    write_manifest(manifest, output_dir)
    return outputs


def cmd_eval(args: argparse.Namespace) -> int:
    params = market_from_args(args)
    frame = evaluation_frame(evaluate(params))
    _emit(csv_text(frame))
    if args.output_dir:
        _write_artifacts(
            args.output_dir,
            {'command': 'eval', 'params': params},
            lambda path: [write_csv(frame, os.path.join(path, 'eval.csv'))],
        )
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    params = market_from_args(args)
    solution = n_star_constrained(params)
    _emit(dump_json({**solution, 'manifest': build_manifest('solve', params)}))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    params = market_from_args(args)
    frame = sweep(params, args.lambdas, args.travel_times, show_progress=args.progress)
    _emit(csv_text(frame))
    if args.output_dir:
        _write_artifacts(
            args.output_dir,
            {
                'command': 'sweep',
                'params': params,
                'axes': {'arrival_rate': args.lambdas, 'travel_time': args.travel_times},
            },
            lambda path: [write_csv(frame, os.path.join(path, 'sweep.csv'))],
        )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    params = market_from_args(args)
    config = sim_config(params, args.n, args.cycles, args.seed, args.variant)
    result = simulate(config, workers=args.workers, show_progress=args.progress)
    targets = analytic_targets(config)
    document = {
        'n': args.n,
        'cycles': args.cycles,
        'variant': args.variant,
        'estimates': result,
        'targets': targets,
        'z_scores': z_scores(result, targets),
        'manifest': build_manifest('simulate', params, seed=args.seed),
    }
    _emit(dump_json(document))
    if args.output_dir:
        _write_artifacts(
            args.output_dir,
            {'command': 'simulate', 'params': params, 'seed': args.seed},
            lambda path: [write_json(document, os.path.join(path, 'simulate.json'))],
        )
    return 0


def cmd_tables(args: argparse.Namespace) -> int:
    check_thresholds(args.thresholds, 5)
    mu_grid = args.mu_grid if args.mu_grid is not None else list(TABLE_C_MU_GRID)
    if any(mu <= 0 for mu in mu_grid):
        raise ValueError('the equivalence grid needs positive mu values')
    b_reports = {n: table_b(n, args.lambdas, args.travel_times) for n in args.thresholds}
    c_reports = {
        convention: equivalence_grid(
            TABLE_C_THRESHOLDS, mu_grid, convention, show_progress=args.progress
        )
        for convention in SIGN_CONVENTIONS
    }
    outputs = _write_artifacts(
        resolve_output_dir(args.output_dir, OUTPUT_DIR_ENV),
        {
            'command': 'tables',
            'axes': {
                'arrival_rate': args.lambdas,
                'travel_time': args.travel_times,
                'n': args.thresholds,
                'mu': mu_grid,
            },
        },
        lambda path: write_tables(path, b_reports, c_reports),
    )
    logger.info(f'wrote {len(outputs)} tables')
    return 0


def cmd_figure2(args: argparse.Namespace) -> int:
    params = market_from_args(args, base=FIGURE2_DEFAULTS)
    outputs = _write_artifacts(
        resolve_output_dir(args.output_dir, OUTPUT_DIR_ENV),
        {'command': 'figure2', 'params': params},
        lambda path: write_figure2(params, path),
    )
    logger.info(f'wrote {", ".join(outputs)}')
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_verification(
        draws=args.draws,
        sign_draws=args.sign_draws,
        cycles=args.cycles,
        seed=args.seed,
        workers=args.workers,
        show_progress=args.progress,
    )
    lines = []
    for result in results:
        status = 'PASS' if result['passed'] else 'FAIL'
        if result['kind'] == 'REPORT':
            status = 'REPORT'
        lines.append(f"{status}\t{result['name']}\t{result['detail']}\n")
    _emit(''.join(lines))
    if args.output_dir:
        _write_artifacts(
            args.output_dir,
            {'command': 'verify', 'seed': args.seed},
            lambda path: [write_json(results, os.path.join(path, 'verify.json'))],
        )
    return 0 if all_passed(results) else 1


COMMANDS = {
    'eval': cmd_eval,
    'solve': cmd_solve,
    'sweep': cmd_sweep,
    'simulate': cmd_simulate,
    'tables': cmd_tables,
    'figure2': cmd_figure2,
    'verify': cmd_verify,
}


def command_interface() -> None:
    parser = build_parser()
    args = parser.parse_args()

    # set the default logging configuration
    logging.basicConfig(
        level=LOG_LEVELS[args.log_level],
        format='%(asctime)s %(name)s %(levelname)s %(message)s',
        datefmt='%m-%d-%y %H:%M:%S',
    )
    try:
        code = COMMANDS[args.command](args)
    except jsonschema.exceptions.ValidationError as err:
        parser.error(f'invalid market parameters: {err.message}')
    except OSError as err:
        logger.error(f'could not write output: {err}')
        sys.exit(EXIT_IO)
    except ValueError as err:
        parser.error(str(err))
    sys.exit(code)
