"""Desk-scale reproduction of the published illustration tables and figures.

Each target recomputes a published table or figure from the engine and lines
it up against the printed reference values.  Cells that disagree with the
print by more than 0.005 are listed in a trailing ``discrepancies`` column, so
known misprints surface in the output instead of silently matching.  Figure
targets can additionally be rendered to PNG files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .bbm import (
    OneYearScenario,
    combined_coc_series,
    combined_cost_of_capital,
    component_allowance,
    constant_allowance_schedule,
)
from .debt import ONE_PERIOD_CONTROL, TWO_PERIOD_GAP_WITNESS, weighted_average_rate_gap
from .multiyear import MultiYearScenario, allowance_path, forward_parameters, implied_combined_coc

PRINT_TOLERANCE = 0.005

TARGETS = ("table1", "table2", "figure2-left", "figure2-right", "counterexample")
FIGURE_TARGETS = ("figure2-left", "figure2-right")

# Published one-year scenarios: opening base, expected closing base, and the
# printed allowance / combined cost of capital.  Two allowance cells are
# misprints; the recomputation flags them.
_TABLE1_ROWS = (
    (1000.0, 900.0, 171.83, 7.14),
    (500.0, 400.0, 142.86, 8.57),
    (1000.0, 800.0, 285.71, 8.57),
    (400.0, 200.0, 251.73, 12.86),
)
_TABLE1_RX = 1.20
_TABLE1_RRAB = 1.05

# Published five-year schedule: asset-base path and component rates, with the
# printed cumulative rates, allowances and implied rates for comparison.
_TABLE2_SCENARIO = MultiYearScenario(
    T=5,
    rab=(1000.0, 900.0, 800.0, 700.0, 600.0, 500.0),
    r_x=tuple(1.05 ** (t - 1) * 1.20 for t in range(1, 6)),
    r_rab=tuple(1.05**t for t in range(1, 6)),
)
_TABLE2_PRINTED = {
    "cash_flow_coc": (1.200, 1.260, 1.323, 1.389, 1.459),
    "asset_base_coc": (1.05, 1.103, 1.158, 1.216, 1.276),
    "return_parameter": (1.20, 1.20, 1.20, 1.20, 1.20),
    "scaling_parameter": (1.05, 1.05, 1.05, 1.05, 1.05),
    "allowance": (171.43, 165.71, 160.00, 154.29, 148.57),
    "implied_coc_pct": (7.14, 7.30, 7.50, 7.76, 8.10),
}

# Published figure coordinates: allowance level vs combined rate (left) and
# year vs combined rate under a constant allowance (right).
_FIGURE2_LEFT_PRINTED = (
    (0, 5.00), (50, 5.63), (100, 6.21), (150, 6.74), (200, 7.23),
    (250, 7.69), (300, 8.12), (350, 8.52), (400, 8.89), (450, 9.24),
    (500, 9.57), (550, 9.87), (600, 10.16),
)
_FIGURE2_RIGHT_PRINTED = ((0, 8.3), (1, 9.03), (2, 10.25), (3, 12.68), (4, 20.0))
_FIGURE2_LEFT_CLOSING_BASE = 1000.0
_FIGURE2_RIGHT_OPENING_BASE = 1000.0
_FIGURE2_RIGHT_LIFE = 5


@dataclass(frozen=True)
class ReportTable:
    """A finished report: a header plus fully formatted rows."""

    name: str
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        lines.extend(",".join(row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {"name": self.name, "header": list(self.header), "rows": [list(r) for r in self.rows]}
        return json.dumps(doc, indent=2) + "\n"

    def discrepancy_count(self) -> int:
        return sum(1 for row in self.rows if row[-1] != "")


def _flag(label: str, printed: float, computed: float) -> str:
    if abs(printed - computed) <= PRINT_TOLERANCE:
        return ""
    return f"{label} printed {printed:.2f} recomputed {computed:.2f}"


def _join_flags(flags: list[str]) -> str:
    return "; ".join(f for f in flags if f)


def table_one() -> ReportTable:
    """One-year allowances and combined rates for four published scenarios."""
    rows = []
    for rab0, rab1, printed_allowance, printed_pct in _TABLE1_ROWS:
        s = OneYearScenario(rab0, rab1, _TABLE1_RX, _TABLE1_RRAB)
        allowance = component_allowance(s)
        combined = combined_cost_of_capital(s).percent
        flags = _join_flags(
            [
                _flag("allowance", printed_allowance, allowance),
                _flag("combined_coc_pct", printed_pct, combined),
            ]
        )
        rows.append(
            (
                f"{rab0:.2f}",
                f"{rab1:.2f}",
                f"{(_TABLE1_RX - 1) * 100:.2f}",
                f"{(_TABLE1_RRAB - 1) * 100:.2f}",
                f"{allowance:.2f}",
                f"{combined:.2f}",
                flags,
            )
        )
    return ReportTable(
        "table1",
        (
            "opening_base",
            "expected_closing_base",
            "cash_flow_coc_pct",
            "closing_base_coc_pct",
            "allowance",
            "combined_coc_pct",
            "discrepancies",
        ),
        tuple(rows),
    )


def multiyear_table(
    sc: MultiYearScenario,
    printed: dict[str, tuple[float, ...]] | None = None,
    name: str = "multiyear",
) -> ReportTable:
    """Allowance schedule for a multi-year scenario, one quantity per row.

    When printed reference values are supplied, disagreeing cells are listed
    in the trailing ``discrepancies`` column.
    """
    params = forward_parameters(sc)
    allowances = allowance_path(sc)
    implied = implied_combined_coc(sc, allowances)
    reference = printed or {}

    def year_row(
        label: str, values: tuple[float, ...], fmt: str, t0: str = ""
    ) -> tuple[str, ...]:
        ref = reference.get(label)
        flags = ""
        if ref is not None:
            flags = _join_flags(
                [_flag(f"t{t}", p, v) for t, (p, v) in enumerate(zip(ref, values), start=1)]
            )
        return (label, t0, *(format(v, fmt) for v in values), flags)

    rows = (
        year_row("asset_base", sc.rab[1:], ".2f", t0=f"{sc.rab[0]:.2f}"),
        year_row("cash_flow_coc", sc.r_x, ".3f", t0="1.000"),
        year_row("asset_base_coc", sc.r_rab, ".3f", t0="1.000"),
        year_row("return_parameter", params.r, ".2f"),
        year_row("scaling_parameter", params.s, ".2f"),
        year_row("allowance", allowances, ".2f"),
        year_row("implied_coc_pct", implied, ".2f"),
    )
    return ReportTable(
        name,
        ("row", "t0", *(f"t{t}" for t in range(1, sc.T + 1)), "discrepancies"),
        rows,
    )


def table_two() -> ReportTable:
    """Five-year allowance schedule: rates, allowances, and implied rates."""
    return multiyear_table(_TABLE2_SCENARIO, _TABLE2_PRINTED, name="table2")


def figure_two_left() -> ReportTable:
    """Combined one-year rate as the allowance level moves over a grid."""
    grid = [float(e) for e, _ in _FIGURE2_LEFT_PRINTED]
    series = combined_coc_series(_FIGURE2_LEFT_CLOSING_BASE, _TABLE1_RX, _TABLE1_RRAB, grid)
    rows = []
    for (allowance, pct), (_, printed) in zip(series, _FIGURE2_LEFT_PRINTED):
        rows.append(
            (
                f"{allowance:.0f}",
                f"{pct:.2f}",
                f"{printed:.2f}",
                _flag("combined_coc_pct", printed, pct),
            )
        )
    return ReportTable(
        "figure2-left",
        ("allowance", "combined_coc_pct", "published_pct", "discrepancies"),
        tuple(rows),
    )


def figure_two_right() -> ReportTable:
    """Per-year combined rate when a constant allowance runs the base to zero."""
    constant, pcts = constant_allowance_schedule(
        _FIGURE2_RIGHT_OPENING_BASE, _FIGURE2_RIGHT_LIFE, _TABLE1_RX, _TABLE1_RRAB
    )
    rows = []
    for (year, printed), pct in zip(_FIGURE2_RIGHT_PRINTED, pcts):
        rows.append(
            (
                f"{year}",
                f"{constant:.2f}",
                f"{pct:.2f}",
                f"{printed:.2f}",
                _flag("combined_coc_pct", printed, pct),
            )
        )
    return ReportTable(
        "figure2-right",
        ("year", "allowance", "combined_coc_pct", "published_pct", "discrepancies"),
        tuple(rows),
    )


def counterexample_report() -> ReportTable:
    """Two-period witness that no weighted-average rate reprices a split firm.

    The published claim is qualitative, so there are no printed cells to flag;
    the table reports the three single rates, the best mixing weight, and the
    per-period pricing residual it leaves, next to the acceptance threshold.
    A one-period control shows the residual collapsing to zero when a single
    year is involved.
    """
    witness = weighted_average_rate_gap(TWO_PERIOD_GAP_WITNESS)
    control = weighted_average_rate_gap(ONE_PERIOD_CONTROL)
    rows = (
        ("opening_base", f"{TWO_PERIOD_GAP_WITNESS.rab0:.4f}", ""),
        ("combined_rate_pct", f"{witness.combined_rate.percent:.4f}", ""),
        ("equity_rate_pct", f"{witness.equity_rate.percent:.4f}", ""),
        ("debt_rate_pct", f"{witness.debt_rate.percent:.4f}", ""),
        ("best_alpha", f"{witness.best_alpha:.4f}", ""),
        ("min_residual", f"{witness.best_residual:.4f}", ""),
        ("residual_threshold", f"{1e-4 * TWO_PERIOD_GAP_WITNESS.rab0:.4f}", ""),
        ("control_best_alpha", f"{control.best_alpha:.4f}", ""),
        ("control_min_residual", f"{control.best_residual:.10f}", ""),
    )
    return ReportTable("counterexample", ("quantity", "value", "discrepancies"), rows)


_BUILDERS = {
    "table1": table_one,
    "table2": table_two,
    "figure2-left": figure_two_left,
    "figure2-right": figure_two_right,
    "counterexample": counterexample_report,
}


def build_report(target: str) -> ReportTable:
    """Build the named report table.

    Raises:
        ValueError: unknown target name.
    """
    try:
        builder = _BUILDERS[target]
    except KeyError:
        raise ValueError(f"unknown target {target!r}; expected one of {', '.join(TARGETS)}") from None
    return builder()


def render_figure(target: str, path: str | Path) -> Path:
    """Render a figure target to a PNG file and return the path written."""
    if target not in FIGURE_TARGETS:
        raise ValueError(f"target {target!r} is not a figure; expected one of {', '.join(FIGURE_TARGETS)}")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if target == "figure2-left":
        grid = [float(e) for e, _ in _FIGURE2_LEFT_PRINTED]
        series = combined_coc_series(_FIGURE2_LEFT_CLOSING_BASE, _TABLE1_RX, _TABLE1_RRAB, grid)
        ax.plot([e for e, _ in series], [pct for _, pct in series], marker="s", color="tab:blue")
        ax.set_xlabel("Allowed cash flow")
    else:
        _, pcts = constant_allowance_schedule(
            _FIGURE2_RIGHT_OPENING_BASE, _FIGURE2_RIGHT_LIFE, _TABLE1_RX, _TABLE1_RRAB
        )
        ax.plot(range(len(pcts)), pcts, marker="s", color="tab:red")
        ax.set_xlabel("Year of the regulatory period")
        ax.set_xticks(range(len(pcts)))
    ax.set_ylabel("Cost of capital (%)")
    ax.grid(True, linestyle="--", alpha=0.6)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
