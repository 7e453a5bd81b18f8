"""JSON/CSV emission and the Excel verification workbook."""
import sys, os
import json
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from openpyxl import load_workbook

from src.errors import DomainError, OutputError
from src.numerics import agreement
from src.reports import ReportGenerator, emit, to_csv, to_json


def test_to_json_numbers():
    assert to_json(1.0) == "1.0"
    assert to_json(0.1) == "0.10000000000000001"
    assert to_json(float('nan')) == "null"
    assert to_json(np.float64(2.5)) == "2.5"
    assert to_json(np.int64(3)) == "3"
    assert to_json(True) == "true"


def test_to_json_keeps_key_order():
    text = to_json({'b': 1, 'a': [1.0, None], 'c': {'x': 'y'}})
    assert text == '{"b":1,"a":[1.0,null],"c":{"x":"y"}}'
    assert list(json.loads(text)) == ['b', 'a', 'c']
    with pytest.raises(DomainError):
        to_json(object())


def test_to_csv_flattens_nested_records():
    text = to_csv([{'name': 'x', 'check': {'lhs': 1.5, 'pass': True}}])
    assert text.splitlines() == ['name,check.lhs,check.pass', 'x,1.5,True']


def test_to_csv_empty_is_header_only():
    assert to_csv([], columns=['lambda', 'F', 'error_bound']) == "lambda,F,error_bound\n"


def test_emit_to_stdout_and_file(capsys, tmp_path):
    emit({'value': 2.0}, 'json')
    assert capsys.readouterr().out == '{"value":2.0}\n'
    path = tmp_path / "deep" / "out.csv"
    emit([{'mu': 0.0, 'multiplicity': 1}], 'csv', str(path))
    assert path.read_text() == "mu,multiplicity\n0,1\n"
    with pytest.raises(DomainError):
        emit({}, 'xml')


def test_emit_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError):
        emit({'value': 1.0}, 'json', str(blocker / "out.json"))


def test_verification_workbook(tmp_path):
    checks = [agreement('good', 1.0, 1.0, 1e-6), agreement('bad', 1.0, 2.0, 1e-6, detail='off by one')]
    path = ReportGenerator(str(tmp_path)).generate_verification_report(checks, str(tmp_path / "r.xlsx"))
    ws = load_workbook(path).active
    assert [c.value for c in ws[1]][:3] == ['Check', 'LHS', 'RHS']
    assert ws.cell(row=3, column=7).value == 'FAIL'
    assert ws.freeze_panes == 'A2'


def test_summary_counts():
    checks = [agreement('good', 1.0, 1.0, 1e-6), agreement('bad', 1.0, 2.0, 1e-6)]
    summary = ReportGenerator().generate_summary(checks, 'sphere3')
    assert 'Passed:      1' in summary
    assert 'Failed:      1' in summary
