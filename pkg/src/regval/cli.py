"""Command-line surface: scenario files in, delimited results out.

Exit codes separate the three ways a run can go wrong: 1 for unreadable or
malformed input, 2 for inputs that parse but break a domain contract, and 3
for numerical failures (no sign change, no convergence, no solution).
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .bbm import (
    OneYearScenario,
    combined_cost_of_capital,
    component_allowance,
    revenue_allowance,
    solve_standard_allowance,
)
from .coc import cost_of_capital
from .debt import parse_portfolio_document, portfolio_cost_of_capital, portfolio_value
from .errors import (
    NonConvergenceError,
    NoSignChangeError,
    NoSolutionError,
    ValuationError,
)
from .multiyear import (
    CashflowCsvError,
    MultiYearScenario,
    internal_rate_of_return,
    read_cashflow_csv,
)
from .reports import (
    FIGURE_TARGETS,
    TARGETS,
    ReportTable,
    build_report,
    multiyear_table,
    render_figure,
)
from .tree import DocumentError, parse_document

EXIT_PARSE = 1
EXIT_CONTRACT = 2
EXIT_NUMERIC = 3


def _load_json(path: str) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc


def _read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc


def _require_fields(doc: object, fields: tuple[str, ...]) -> dict:
    if not isinstance(doc, dict):
        raise DocumentError("scenario must be a JSON object")
    missing = [f for f in fields if f not in doc]
    if missing:
        raise DocumentError(f"scenario is missing fields: {', '.join(missing)}")
    return doc


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        click.echo(text, nl=False)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _render(table: ReportTable, fmt: str) -> str:
    return table.to_csv() if fmt == "csv" else table.to_json()


def _guarded(fn):
    """Map domain exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DocumentError, CashflowCsvError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_PARSE)
        except (NoSignChangeError, NonConvergenceError, NoSolutionError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        except (ValuationError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONTRACT)

    return wrapper


_input_option = click.option(
    "--input", "-i", "input_path", required=True, help="Path to the input document."
)
_output_option = click.option(
    "--output", "-o", "output_path", default=None, help="Output path ('-' or omitted: stdout)."
)
_format_option = click.option(
    "--format", "-f", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True
)


@click.group()
def main() -> None:
    """Finite-state valuation engine for regulated asset bases."""


@main.command()
@_input_option
@_output_option
@_format_option
@_guarded
def value(input_path: str, output_path: str | None, fmt: str) -> None:
    """Present value and expectation of each flow in a tree document."""
    tree, stream = parse_document(_load_json(input_path))
    if len(stream) == 0:
        raise DocumentError("document contains no flows")
    rows = []
    total_value = total_expectation = 0.0
    for t, flow in stream.items():
        v = tree.value(flow)
        e = tree.expect(flow)
        rows.append((str(t), f"{v:.6f}", f"{e:.6f}"))
        total_value += v
        total_expectation += e
    rows.append(("total", f"{total_value:.6f}", f"{total_expectation:.6f}"))
    table = ReportTable("value", ("time", "value", "expectation"), tuple(rows))
    _emit(_render(table, fmt), output_path)


@main.command()
@_input_option
@_output_option
@_format_option
@_guarded
def coc(input_path: str, output_path: str | None, fmt: str) -> None:
    """Cost of capital of each flow in a tree document, seen from the root."""
    tree, stream = parse_document(_load_json(input_path))
    if len(stream) == 0:
        raise DocumentError("document contains no flows")
    rows = []
    for t, flow in stream.items():
        rate = cost_of_capital(tree, flow)
        rows.append((str(t), f"{rate.gross:.6f}", f"{rate.percent:.4f}"))
    table = ReportTable("coc", ("time", "gross", "percent"), tuple(rows))
    _emit(_render(table, fmt), output_path)


@main.command()
@_input_option
@_output_option
@_format_option
@click.option("--tol", type=float, default=1e-10, show_default=True, help="Fixed-point tolerance.")
@_guarded
def bbm(input_path: str, output_path: str | None, fmt: str, tol: float) -> None:
    """One-year allowances for a rab0/rab1/r_x/r_rab scenario file."""
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    doc = _require_fields(_load_json(input_path), ("rab0", "rab1", "r_x", "r_rab"))
    scenario = OneYearScenario.from_dict(doc)
    allowance = component_allowance(scenario)
    combined = combined_cost_of_capital(scenario)
    standard, iterations = solve_standard_allowance(scenario, tol=tol)
    rows = [
        ("allowance_component", f"{allowance:.6f}"),
        ("combined_coc_pct", f"{combined.percent:.4f}"),
        ("allowance_standard", f"{standard:.6f}"),
        ("fixed_point_iterations", str(iterations)),
    ]
    if "opex" in doc or "capex" in doc:
        blocks = revenue_allowance(
            scenario, opex=float(doc.get("opex", 0.0)), capex=float(doc.get("capex", 0.0))
        )
        rows.extend(
            [
                ("revenue", f"{blocks.revenue:.6f}"),
                ("return_on_capital", f"{blocks.return_on_capital:.6f}"),
                ("depreciation", f"{blocks.depreciation:.6f}"),
            ]
        )
    table = ReportTable("bbm", ("quantity", "value"), tuple(rows))
    _emit(_render(table, fmt), output_path)


@main.command()
@_input_option
@_output_option
@_format_option
@_guarded
def multiyear(input_path: str, output_path: str | None, fmt: str) -> None:
    """Allowance schedule for a T/rab/r_x/r_rab scenario file."""
    doc = _require_fields(_load_json(input_path), ("T", "rab", "r_x", "r_rab"))
    scenario = MultiYearScenario.from_dict(doc)
    _emit(_render(multiyear_table(scenario), fmt), output_path)


@main.command()
@_input_option
@_output_option
@_format_option
@click.option(
    "--observable-only",
    is_flag=True,
    help="Quote only rates computable from current market prices.",
)
@_guarded
def debt(input_path: str, output_path: str | None, fmt: str, observable_only: bool) -> None:
    """Value and cost of capital of a debt portfolio document."""
    doc = _load_json(input_path)
    tree, _ = parse_document(doc)
    instruments, portfolio = parse_portfolio_document(tree, doc)
    v0 = portfolio_value(tree, instruments, portfolio)
    combined, shares = portfolio_cost_of_capital(
        tree, instruments, portfolio, observable_only=observable_only
    )
    rows = [
        ("portfolio_value", f"{v0:.6f}"),
        ("combined_coc_pct", f"{combined.percent:.4f}" if combined is not None else "unobservable"),
    ]
    for share in shares:
        rows.append((f"instrument_{share.maturity}_weight", f"{share.weight:.6f}"))
        rows.append(
            (
                f"instrument_{share.maturity}_rate_pct",
                f"{share.rate.percent:.4f}" if share.rate is not None else "unobservable",
            )
        )
    table = ReportTable("debt", ("quantity", "value"), tuple(rows))
    _emit(_render(table, fmt), output_path)


@main.command()
@click.option("--target", type=click.Choice(list(TARGETS)), required=True)
@_output_option
@_format_option
@_guarded
def reproduce(target: str, output_path: str | None, fmt: str) -> None:
    """Recompute a published table or figure; flag cells that differ in print.

    Figure targets written to a file also get a PNG rendering next to the
    delimited output.
    """
    table = build_report(target)
    _emit(_render(table, fmt), output_path)
    if target in FIGURE_TARGETS and output_path not in (None, "-"):
        render_figure(target, Path(output_path).with_suffix(".png"))


@main.command()
@_input_option
@_output_option
@click.option("--outlay", type=float, required=True, help="Time-zero outlay (opening asset base).")
@click.option(
    "--terminal",
    type=float,
    default=0.0,
    show_default=True,
    help="Closing value folded into the final year's flow.",
)
@click.option("--tol", type=float, default=1e-12, show_default=True, help="Root tolerance.")
@_guarded
def irr(
    input_path: str, output_path: str | None, outlay: float, terminal: float, tol: float
) -> None:
    """Internal rate of return of a year,flow CSV against an outlay."""
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    flows = read_cashflow_csv(_read_lines(input_path))
    flows[-1] += terminal
    rate = internal_rate_of_return(outlay, flows, tol=tol)
    _emit(f"{rate.percent:.3f}%\n", output_path)


if __name__ == "__main__":
    main()
