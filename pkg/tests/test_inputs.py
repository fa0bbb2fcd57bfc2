import json
import jsonschema.exceptions
import numpy as np
import os
import pytest

from batchride.inputs import (
    check_thresholds,
    load_params_file,
    market_params,
    parse_float_list,
    parse_int_list,
    prepare_market_params,
    replace_params,
    resolve_output_dir,
    validate_market_params,
)

NULLS = [None, np.nan]


class TestValidateMarketParams:
    def test_fills_defaults(self) -> None:
        content = {'arrival_rate': 1.0, 'travel_time': 0.5}
        validate_market_params(content)
        assert content['capacity'] == 6
        assert content['entrant_capacity'] == 3
        assert content['theta'] == 1.0
        assert content['p_incumbent'] == 1.0
        assert content['wait_cost'] == 1.0
        assert content['op_cost'] == 0.0
        assert content['midroute_form'] == 'linear'

    @pytest.mark.parametrize(
        'field,value',
        [
            ['arrival_rate', 0.0],
            ['travel_time', -1.0],
            ['theta', 1.5],
            ['capacity', 0],
            ['midroute_form', 'quadratic'],
            ['unknown_field', 1],
        ],
    )
    def test_rejects(self, field: str, value) -> None:
        content = {'arrival_rate': 1.0, 'travel_time': 0.5, 'w_bar': 0.5, field: value}
        with pytest.raises(jsonschema.exceptions.ValidationError):
            validate_market_params(content)

    def test_missing_required(self) -> None:
        with pytest.raises(jsonschema.exceptions.ValidationError):
            validate_market_params({'arrival_rate': 1.0})


class TestPrepareMarketParams:
    def test_derives_tolerance(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, p_entrant=2.0, wait_cost=4.0)
        assert params['w_bar'] == pytest.approx(0.25)
        assert params['p_entrant'] == 2.0

    def test_back_fills_entrant_fare(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, w_bar=0.5, wait_cost=2.0)
        assert params['p_entrant'] == pytest.approx(2.0)
        assert params['v'] is None

    @pytest.mark.parametrize('null', NULLS)
    def test_null_tolerance_uses_fare(self, null) -> None:
        params = prepare_market_params(
            {'arrival_rate': 1.0, 'travel_time': 0.5, 'w_bar': null, 'p_entrant': 1.5}
        )
        assert params['w_bar'] == pytest.approx(0.5)

    @pytest.mark.parametrize('null', NULLS)
    def test_neither_given(self, null) -> None:
        with pytest.raises(ValueError):
            prepare_market_params(
                {'arrival_rate': 1.0, 'travel_time': 0.5, 'w_bar': null, 'p_entrant': null}
            )

    def test_fares_out_of_order(self) -> None:
        with pytest.raises(ValueError):
            market_params(arrival_rate=1.0, travel_time=0.5, p_entrant=0.9)
        with pytest.raises(ValueError):
            market_params(arrival_rate=1.0, travel_time=0.5, p_entrant=1.0)

    def test_does_not_modify_input(self) -> None:
        content = {'arrival_rate': 1.0, 'travel_time': 0.5, 'w_bar': 0.5}
        prepare_market_params(content)
        assert content == {'arrival_rate': 1.0, 'travel_time': 0.5, 'w_bar': 0.5}

    def test_capacity_is_integer(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, w_bar=0.5, capacity=8)
        assert isinstance(params['capacity'], int)


class TestReplaceParams:
    def test_new_tolerance_rederives_fare(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, w_bar=0.5)
        changed = replace_params(params, w_bar=1.0)
        assert changed['p_entrant'] == pytest.approx(2.0)
        assert params['w_bar'] == 0.5

    def test_new_fare_rederives_tolerance(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, w_bar=0.5)
        changed = replace_params(params, p_entrant=3.0)
        assert changed['w_bar'] == pytest.approx(2.0)

    def test_other_fields_keep_tolerance(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, w_bar=0.5)
        changed = replace_params(params, arrival_rate=3.0)
        assert changed['w_bar'] == 0.5
        assert changed['arrival_rate'] == 3.0

    def test_revalidates(self) -> None:
        params = market_params(arrival_rate=1.0, travel_time=0.5, w_bar=0.5)
        with pytest.raises(jsonschema.exceptions.ValidationError):
            replace_params(params, theta=2.0)


class TestLoadParamsFile:
    def test_object(self, tmp_path) -> None:
        path = tmp_path / 'params.json'
        path.write_text(json.dumps({'arrival_rate': 2.0, 'travel_time': 0.25}))
        assert load_params_file(str(path)) == {'arrival_rate': 2.0, 'travel_time': 0.25}

    def test_not_an_object(self, tmp_path) -> None:
        path = tmp_path / 'params.json'
        path.write_text(json.dumps([1, 2]))
        with pytest.raises(ValueError):
            load_params_file(str(path))


class TestParsing:
    @pytest.mark.parametrize(
        'text,expected',
        [
            ['0.1,0.25,0.5', [0.1, 0.25, 0.5]],
            ['0.1:0.5:0.1', [0.1, 0.2, 0.3, 0.4, 0.5]],
            ['1:2:0.5', [1.0, 1.5, 2.0]],
            ['2', [2.0]],
            ['', []],
        ],
    )
    def test_float_list(self, text: str, expected) -> None:
        assert parse_float_list(text) == expected

    def test_float_list_bad_step(self) -> None:
        with pytest.raises(ValueError):
            parse_float_list('0:1:0')

    def test_int_list(self) -> None:
        assert parse_int_list('3,4,5') == [3, 4, 5]

    def test_check_thresholds(self) -> None:
        check_thresholds([1, 5], 5)
        with pytest.raises(ValueError):
            check_thresholds([0, 3], 5)
        with pytest.raises(ValueError):
            check_thresholds([6], 5)


class TestResolveOutputDir:
    def test_explicit(self, monkeypatch) -> None:
        monkeypatch.setenv('BATCHRIDE_OUTPUT_DIR', '/from/env')
        assert resolve_output_dir('/explicit', 'BATCHRIDE_OUTPUT_DIR') == '/explicit'

    def test_environment(self, monkeypatch) -> None:
        monkeypatch.setenv('BATCHRIDE_OUTPUT_DIR', '/from/env')
        assert resolve_output_dir(None, 'BATCHRIDE_OUTPUT_DIR') == '/from/env'

    def test_working_directory(self, monkeypatch, tmp_path) -> None:
        monkeypatch.delenv('BATCHRIDE_OUTPUT_DIR', raising=False)
        monkeypatch.chdir(tmp_path)
        resolved = resolve_output_dir(None, 'BATCHRIDE_OUTPUT_DIR')
        assert os.path.realpath(resolved) == os.path.realpath(tmp_path)
