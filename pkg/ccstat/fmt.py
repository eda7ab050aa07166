# -*- coding: utf-8 -*-

from typing import Literal, Optional, Sequence, cast

import humanize
from rich import print as rich_print
from rich.style import Style
from rich.table import Table

from .config import config
from .experiment import BoundTable, SummaryRow
from .verify import CertificationReport, ValidationCell


console_styles = config.console.styles
console_table = config.console.table


def indent_text(title: str, indent: int = 1):
    indent_s = ' ' * indent
    return f'{indent_s}{title}'


def styled_text(text: str, style_def: str, rendered: bool = False):
    if rendered:
        style = Style.parse(style_def)
        return style.render(text)
    else:
        return f'[{style_def}]{text}'


def format_number(value: Optional[float], digits: int = 6, style: str = console_styles.value) -> str:
    text = '-' if value is None else f'{value:.{digits}g}'
    return styled_text(indent_text(text), style)


def format_count(value: Optional[int], style: str = console_styles.value) -> str:
    text = '-' if value is None else humanize.intcomma(value)
    return styled_text(indent_text(text), style)


def format_seconds(value: float) -> str:
    text = f'{value * 1000:.1f} ms' if value < 1.0 else humanize.precisedelta(value, minimum_unit='milliseconds')
    return styled_text(indent_text(text), console_styles.value)


def _grid(titles: Sequence[str]) -> Table:
    table = Table.grid()

    table.show_header = True
    table.header_style = console_styles.table

    indent_border = indent_text(console_table.border)
    justify = cast(Literal, 'right')

    for i, title in enumerate(titles):
        if i:
            table.add_column(header=indent_border, justify=justify)
        table.add_column(header=indent_text(title), justify=justify)

    return table


def _row(table: Table, cells: Sequence[str]):
    border = styled_text(indent_text(console_table.border), console_styles.table)
    row = []
    for i, cell in enumerate(cells):
        if i:
            row.append(border)
        row.append(cell)
    table.add_row(*row)


def print_summary(rows: Sequence[SummaryRow]):
    """Print method, N_s, status, cost, solve time and satisfaction per method
    """

    table = _grid(['Method', 'N_s', 'Status', 'Cost', 'Solve time', 'Satisfaction', 'Stderr'])

    for row in rows:
        status_style = console_styles['pass'] if row.status == 'optimal' else console_styles.fail
        _row(table, [
            styled_text(indent_text(row.method), console_styles.name),
            format_count(row.n_samples),
            styled_text(indent_text(row.status), status_style),
            format_number(row.cost),
            format_seconds(row.solve_seconds),
            format_number(row.satisfaction, digits=5),
            format_number(row.stderr, digits=2),
        ])

    rich_print(table)


def print_certification(report: CertificationReport, top: int = 5):
    """Print joint satisfaction and the rows violated most often
    """

    rich_print(
        f"Joint satisfaction: {styled_text(f'{report.joint_satisfaction:.5f}', console_styles.value)} "
        f"(stderr {report.stderr:.2g}, {humanize.intcomma(report.trials)} trials, seed {report.seed})"
    )

    worst = sorted(report.per_row_violation, key=lambda r: r.violation, reverse=True)[:top]
    worst = [r for r in worst if r.violation > 0.0]
    if not worst:
        return

    table = _grid(['Step', 'Row', 'Violation'])
    for row in worst:
        _row(table, [format_count(row.step), format_count(row.index), format_number(row.violation, digits=4)])

    rich_print(table)


def print_thresholds(table: BoundTable):
    """Print lambda_min, the inflection point and the asymptote per N_s
    """

    grid = _grid(['N_s', 'lambda_min', 'Theta', 'Asymptote'])
    for n_samples, floor, theta, limit in table.thresholds:
        _row(grid, [format_count(n_samples), format_number(floor), format_number(theta), format_number(limit)])

    rich_print(grid)


def print_validation(cells: Sequence[ValidationCell]):
    grid = _grid(['N_s', 'lambda', 'Empirical', 'Bound', 'Stderr', ''])

    for cell in cells:
        verdict = styled_text(indent_text('pass' if cell.passed else 'FAIL'),
                              console_styles['pass'] if cell.passed else console_styles.fail)
        _row(grid, [
            format_count(cell.n_samples),
            format_number(cell.lambda_, digits=4),
            format_number(cell.empirical, digits=4),
            format_number(cell.bound, digits=4),
            format_number(cell.stderr, digits=2),
            verdict,
        ])

    rich_print(grid)
