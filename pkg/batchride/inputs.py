"""
Read/Validate the market parameter inputs
"""

import json
import jsonschema
import math
import os
import pandas as pd
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence

from .types import MarketParams
from .util import logger

SPECIFICATION = os.path.join(os.path.dirname(__file__), 'market.spec.json')


def extend_with_default(validator_class):
    # https://python-jsonschema.readthedocs.io/en/latest/faq/#why-doesn-t-my-schema-s-default-property-set-the-default-on-my-instance
    validate_properties = validator_class.VALIDATORS["properties"]

    def set_defaults(validator, properties, instance, schema):
        for property, subschema in properties.items():
            if "default" in subschema:
                instance.setdefault(property, subschema["default"])

        for error in validate_properties(validator, properties, instance, schema):
            yield error

    def check_null(checker, instance):
        return validator_class.TYPE_CHECKER.is_type(instance, "null") or (
            isinstance(instance, float) and pd.isnull(instance)
        )

    type_checker = validator_class.TYPE_CHECKER.redefine("null", check_null)

    return jsonschema.validators.extend(
        validator_class, validators={"properties": set_defaults}, type_checker=type_checker
    )


# Customize the default jsonschema behaviour to add default values and treat float nan as null
DefaultValidatingDraft7Validator = extend_with_default(jsonschema.Draft7Validator)


@lru_cache(maxsize=None)
def _load_schema(schema_file: str) -> Dict:
    with open(schema_file, 'r') as fh:
        return json.load(fh)


def validate_market_params(content: Dict, schema_file: str = SPECIFICATION) -> None:
    """
    Validate a market parameter object against the schema specification, filling defaults in place
    """
    return DefaultValidatingDraft7Validator(_load_schema(schema_file)).validate(content)


def _present(value: Any) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))


def prepare_market_params(content: Dict) -> MarketParams:
    """
    Validate the raw parameters and resolve the passenger tolerance.

    The tolerance w_bar is either given or derived as (p_entrant - p_incumbent) / wait_cost.
    When only w_bar is given, p_entrant is back-filled as p_incumbent + wait_cost * w_bar.

    Raises:
        jsonschema.exceptions.ValidationError: types or ranges are invalid
        ValueError: neither w_bar nor p_entrant given, or the fares are not ordered

    Returns:
        a new, validated parameter dictionary
    """
    params = {key: value for key, value in content.items() if _present(value)}
    validate_market_params(params)

    if not _present(params.get('w_bar')):
        if not _present(params.get('p_entrant')):
            raise ValueError('either w_bar or p_entrant must be given')
        params['w_bar'] = (params['p_entrant'] - params['p_incumbent']) / params['wait_cost']
        logger.debug(f"derived w_bar={params['w_bar']} from the fare gap")
    elif not _present(params.get('p_entrant')):
        params['p_entrant'] = params['p_incumbent'] + params['wait_cost'] * params['w_bar']

    if params['p_entrant'] <= params['p_incumbent']:
        raise ValueError(
            f"entrant fare ({params['p_entrant']}) must exceed the incumbent fare ({params['p_incumbent']})"
        )
    if params['w_bar'] <= 0:
        raise ValueError(f"w_bar must be positive ({params['w_bar']})")
    params['capacity'] = int(params['capacity'])
    params['entrant_capacity'] = int(params['entrant_capacity'])
    params.setdefault('v', None)
    return MarketParams(**params)  # type: ignore


def market_params(**kwargs) -> MarketParams:
    """Keyword shortcut for prepare_market_params."""
    return prepare_market_params(kwargs)


def replace_params(params: MarketParams, **changes) -> MarketParams:
    """Re-validated copy of params with some fields changed."""
    content: Dict[str, Any] = dict(params)
    content.update(changes)
    if 'w_bar' in changes and 'p_entrant' not in changes:
        content.pop('p_entrant', None)
    elif 'p_entrant' in changes and 'w_bar' not in changes:
        content.pop('w_bar', None)
    return prepare_market_params(content)


def load_params_file(path: str) -> Dict:
    with open(path, 'r') as fh:
        content = json.load(fh)
    if not isinstance(content, dict):
        raise ValueError(f'{repr(path)} must hold a JSON object of market parameters')
    return content


def parse_float_list(text: str) -> List[float]:
    """'0.1,0.25,0.5' -> [0.1, 0.25, 0.5]; 'start:stop:step' expands inclusively."""
    text = text.strip()
    if not text:
        return []
    if ':' in text:
        start, stop, step = (float(part) for part in text.split(':'))
        if step <= 0:
            raise ValueError(f'grid step must be positive ({text})')
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    return [float(part) for part in text.split(',')]


def parse_int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(',') if part.strip()]


def check_thresholds(thresholds: Sequence[int], upper: int, label: str = 'threshold') -> None:
    for n in thresholds:
        if not 1 <= n <= upper:
            raise ValueError(f'{label} {n} outside 1..{upper}')


def resolve_output_dir(output_dir: Optional[str], env_var: str) -> str:
    return output_dir or os.environ.get(env_var) or os.getcwd()
