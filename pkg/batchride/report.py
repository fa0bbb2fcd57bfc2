"""
Writers for the reproduction artifacts: CSV tables, JSON documents, run manifests and the threshold figure
"""

import json
import matplotlib
import numpy as np
import os
import pandas as pd
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .conditions import EQUIVALENCE_FORMS
from .constants import CSV_FLOAT_FORMAT, SIGN_CONVENTIONS
from .model import expected_wait, n_star_constrained, profit_rate
from .types import CycleEvaluation, GridReport, MarketParams, RunManifest
from .util import logger, tool_version

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

EVALUATION_COLUMNS = [
    'n',
    'profit_rate',
    'increment',
    'numerator',
    'expected_wait',
    'feasible',
    'midroute',
    'A',
    'B',
]
TABLE_B_FILES = {3: 'table_b1.csv', 4: 'table_b2.csv', 5: 'table_b3.csv'}
TABLE_C_FILE = 'table_c.csv'
TABLE_C_DIVERGENCE_FILE = 'table_c_divergences.csv'
DIVERGENCE_COLUMNS = ['convention', 'n', 'mu', 'form', 'value', 'probabilistic']
FIGURE_SVG = 'figure2.svg'
FIGURE_CSV = 'figure2.csv'
MANIFEST_FILE = 'manifest.json'


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def dump_json(content: Any) -> str:
    return json.dumps(content, sort_keys=True, indent=2, default=_json_default) + '\n'


def write_json(content: Any, path: str) -> str:
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dump_json(content))
    return path


def write_csv(frame: pd.DataFrame, path: str) -> str:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, encoding='utf-8')
    logger.info(f'wrote {path}')
    return path


def csv_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT)


def build_manifest(
    command: str,
    params: Optional[MarketParams] = None,
    axes: Optional[Dict[str, List]] = None,
    seed: Optional[int] = None,
    outputs: Iterable[str] = (),
) -> RunManifest:
    """Record of everything that determines a command's output. Paths are stored by basename."""
    return RunManifest(
        command=command,
        params=params,
        axes={name: list(values) for name, values in (axes or {}).items()},
        seed=seed,
        outputs=sorted(os.path.basename(path) for path in outputs),
        version=tool_version(),
    )


def write_manifest(manifest: RunManifest, output_dir: str) -> str:
    return write_json(manifest, os.path.join(output_dir, MANIFEST_FILE))


def evaluation_frame(rows: List[CycleEvaluation]) -> pd.DataFrame:
    return pd.DataFrame.from_records(rows, columns=EVALUATION_COLUMNS)


def table_b_frame(report: GridReport) -> pd.DataFrame:
    """Yes/No validity grid with arrival rates down the rows and travel times across."""
    rates = report['axes']['arrival_rate']
    times = report['axes']['travel_time']
    by_coordinates = {
        (cell['arrival_rate'], cell['travel_time']): cell for cell in report['cells'].values()
    }
    rows = []
    for rate in rates:
        row: Dict[str, Any] = {'lambda\\T': f'{rate:.2f}'}
        for time in times:
            row[f'{time:.2f}'] = 'Yes' if by_coordinates[(rate, time)]['holds'] else 'No'
        rows.append(row)
    return pd.DataFrame.from_records(rows, columns=['lambda\\T'] + [f'{t:.2f}' for t in times])


def table_c_frames(reports: Dict[str, GridReport]) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Pairwise agreement counts per sign convention, and every disagreeing cell."""
    agreement = []
    divergences = []
    for convention in SIGN_CONVENTIONS:
        if convention not in reports:
            continue
        report = reports[convention]
        for form in EQUIVALENCE_FORMS:
            agreement.append(
                {
                    'convention': convention,
                    'form': form,
                    **report['agreement_counts'][form],
                    'cells': len(report['cells']),
                }
            )
        divergences.extend(report['divergences'])
    return (
        pd.DataFrame.from_records(
            agreement, columns=['convention', 'form', *EQUIVALENCE_FORMS, 'cells']
        ),
        pd.DataFrame.from_records(divergences, columns=DIVERGENCE_COLUMNS),
    )


def write_tables(
    output_dir: str, b_reports: Dict[int, GridReport], c_reports: Dict[str, GridReport]
) -> List[str]:
    outputs = []
    for n, report in sorted(b_reports.items()):
        name = TABLE_B_FILES.get(n, f'table_b_n{n}.csv')
        outputs.append(write_csv(table_b_frame(report), os.path.join(output_dir, name)))
    agreement, divergences = table_c_frames(c_reports)
    outputs.append(write_csv(agreement, os.path.join(output_dir, TABLE_C_FILE)))
    outputs.append(write_csv(divergences, os.path.join(output_dir, TABLE_C_DIVERGENCE_FILE)))
    return outputs


def figure2_frame(params: MarketParams) -> pd.DataFrame:
    capacity = params['capacity']
    ceiling = n_star_constrained(params)['demand_ceiling']
    return pd.DataFrame.from_records(
        [
            {
                'n': n,
                'profit_rate': profit_rate(params, n),
                'expected_wait': expected_wait(n, params['arrival_rate']),
                'w_bar': params['w_bar'],
                'feasible': n <= ceiling,
            }
            for n in range(1, capacity + 1)
        ],
        columns=['n', 'profit_rate', 'expected_wait', 'w_bar', 'feasible'],
    )


def plot_figure2(params: MarketParams, path: str) -> str:
    """
    Profit rate and expected wait against the departure threshold

    Thresholds past the demand ceiling are shaded and the constrained optimum is marked.
    The SVG carries no date and a fixed hash salt so reruns are byte-identical.
    """
    series = figure2_frame(params)
    solution = n_star_constrained(params)
    n_star = solution['n_constrained']
    capacity = params['capacity']

    with plt.rc_context({'svg.hashsalt': 'batchride', 'svg.fonttype': 'none'}):
        fig, ax = plt.subplots(figsize=(8, 5))
        ax.plot(series['n'], series['profit_rate'], 'o-', color='steelblue', label='profit rate')
        ax.set_xlabel('departure threshold n')
        ax.set_ylabel('profit per hour')
        ax.set_xticks(list(series['n']))

        wait_ax = ax.twinx()
        wait_ax.plot(
            series['n'], series['expected_wait'], '--', color='grey', label='expected wait'
        )
        wait_ax.axhline(params['w_bar'], color='red', linestyle=':', label='tolerance')
        wait_ax.set_ylabel('hours')

        if solution['demand_ceiling'] < capacity:
            ax.axvspan(
                solution['demand_ceiling'] + 0.5,
                capacity + 0.5,
                color='grey',
                alpha=0.15,
                label='infeasible',
            )
        ax.axvline(n_star, color='black', linestyle='--', label=f'n* = {n_star}')
        ax.plot([n_star], [profit_rate(params, n_star)], 's', color='black', markersize=9)
        ax.set_xlim(0.5, capacity + 0.5)

        handles, labels = ax.get_legend_handles_labels()
        wait_handles, wait_labels = wait_ax.get_legend_handles_labels()
        ax.legend(handles + wait_handles, labels + wait_labels, loc='lower right')
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)
    logger.info(f'wrote {path}')
    return path


def write_figure2(params: MarketParams, output_dir: str) -> List[str]:
    return [
        plot_figure2(params, os.path.join(output_dir, FIGURE_SVG)),
        write_csv(figure2_frame(params), os.path.join(output_dir, FIGURE_CSV)),
    ]
