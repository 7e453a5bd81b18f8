"""
Reports: machine-readable emission (CSV / JSON) and the formatted Excel
verification workbook.
"""
import io
import os
import sys
import json
import math
import logging
from datetime import datetime

import numpy as np
import pandas as pd
from openpyxl import load_workbook
from openpyxl.styles import Font, PatternFill, Alignment, Border, Side

from config import Config
from .errors import DomainError, OutputError

logger = logging.getLogger('pseudolap')

FLOAT_FORMAT = '.17g'


def _format_float(x):
    if not math.isfinite(x):
        return 'null'
    text = format(x, FLOAT_FORMAT)
    if not any(ch in text for ch in '.en'):
        text += '.0'
    return text


def to_json(value):
    """Compact JSON with 17 significant digits and keys in insertion order."""
    if value is None:
        return 'null'
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        return '{' + ','.join(f'{json.dumps(str(k), ensure_ascii=False)}:{to_json(v)}' for k, v in value.items()) + '}'
    if isinstance(value, (list, tuple, np.ndarray)):
        return '[' + ','.join(to_json(v) for v in value) + ']'
    if hasattr(value, 'to_dict'):
        return to_json(value.to_dict())
    raise DomainError(f"cannot serialise {type(value).__name__}")


def to_csv(records, columns=None):
    """Header row plus one row per record; nested dicts flatten to dotted columns."""
    if isinstance(records, dict):
        records = [records]
    if records:
        df = pd.json_normalize(list(records))
        if columns:
            df = df.reindex(columns=list(columns))
    else:
        df = pd.DataFrame(columns=list(columns or []))
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, lineterminator='\n', float_format='%.17g', na_rep='')
    return buffer.getvalue()


def emit(records, fmt='json', out=None, columns=None):
    """Write records to out (a path, or stdout when None / '-')."""
    if fmt == 'json':
        text = to_json(records) + '\n'
    elif fmt == 'csv':
        text = to_csv(records, columns)
    else:
        raise DomainError(f"unknown format '{fmt}', expected json or csv")

    if out in (None, '-'):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        folder = os.path.dirname(out)
        if folder and not os.path.exists(folder):
            os.makedirs(folder)
        with open(out, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {out}: {e}") from e
    logger.debug(f"wrote {len(text)} bytes to {out}")


class ReportGenerator:
    def __init__(self, output_dir=None):
        self.output_dir = output_dir or Config.OUTPUT_FOLDER

    def generate_verification_report(self, results, path=None, title=None):
        """Excel workbook with one row per check."""
        rows = []
        for check in results:
            rows.append({
                'Check': check.name,
                'LHS': check.lhs,
                'RHS': check.rhs,
                '|LHS - RHS|': check.abs_diff,
                'Tolerance': check.tol,
                'Error Bound': check.bound,
                'Result': 'PASS' if check.passed else 'FAIL',
                'Detail': check.detail,
            })
        df = pd.DataFrame(rows, columns=['Check', 'LHS', 'RHS', '|LHS - RHS|', 'Tolerance',
                                         'Error Bound', 'Result', 'Detail'])

        if path is None:
            timestamp = datetime.now().strftime('%Y-%m-%d_%H%M')
            path = os.path.join(self.output_dir, f"verification_{timestamp}.xlsx")
        try:
            folder = os.path.dirname(path)
            if folder and not os.path.exists(folder):
                os.makedirs(folder)
            df.to_excel(path, index=False, sheet_name=(title or 'Verification')[:31])
        except OSError as e:
            raise OutputError(f"cannot write {path}: {e}") from e

        self._format_excel(path, df)
        logger.info(f"Report generated: {path}")
        return path

    def _format_excel(self, filepath, df):
        """Header styling, pass/fail colouring and column widths."""
        try:
            wb = load_workbook(filepath)
            ws = wb.active

            header_font = Font(name='Calibri', bold=True, color='FFFFFF', size=11)
            header_fill = PatternFill(start_color='1B2838', end_color='1B2838', fill_type='solid')
            thin_border = Border(
                left=Side(style='thin'),
                right=Side(style='thin'),
                top=Side(style='thin'),
                bottom=Side(style='thin')
            )

            for col_num in range(1, len(df.columns) + 1):
                cell = ws.cell(row=1, column=col_num)
                cell.font = header_font
                cell.fill = header_fill
                cell.alignment = Alignment(horizontal='center', vertical='center', wrap_text=True)
                cell.border = thin_border

            pass_fill = PatternFill(start_color='D8F0DC', end_color='D8F0DC', fill_type='solid')
            fail_fill = PatternFill(start_color='F8D7DA', end_color='F8D7DA', fill_type='solid')
            data_font = Font(name='Calibri', size=10)
            result_col = df.columns.get_loc('Result') + 1

            for row_num in range(2, ws.max_row + 1):
                failed = ws.cell(row=row_num, column=result_col).value == 'FAIL'
                for col_num in range(1, ws.max_column + 1):
                    cell = ws.cell(row=row_num, column=col_num)
                    cell.font = data_font
                    cell.border = thin_border
                    cell.alignment = Alignment(vertical='top', wrap_text=True)
                    cell.fill = fail_fill if failed else pass_fill
                    if isinstance(cell.value, float):
                        cell.number_format = '0.000000000E+00'

            column_widths = {
                'A': 34,   # Check
                'B': 22,   # LHS
                'C': 22,   # RHS
                'D': 16,
                'E': 12,
                'F': 16,
                'G': 10,   # Result
                'H': 60,   # Detail
            }
            for col_letter, width in column_widths.items():
                ws.column_dimensions[col_letter].width = width

            ws.freeze_panes = 'A2'

            wb.save(filepath)
        except Exception as e:
            logger.error(f"Error formatting Excel: {e}")

    def generate_summary(self, results, model_name=''):
        """Text summary of a verification run."""
        passed = sum(1 for c in results if c.passed)
        failed = len(results) - passed
        summary = f"""
╔══════════════════════════════════════╗
║     VERIFICATION SUMMARY             ║
╠══════════════════════════════════════╣
║ Model:   {model_name[:28]:<28}║
║ Checks:  {len(results):>5}                       ║
║ Passed:  {passed:>5}                       ║
║ Failed:  {failed:>5}                       ║
╚══════════════════════════════════════╝
"""
        return summary
