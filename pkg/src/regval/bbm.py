"""One-year regulated asset base arithmetic.

A one-year scenario fixes the opening asset base, the expected closing base,
and the two gross costs of capital that matter: the rate on the year's net
cash flow and the rate on the closing base.  The allowance (the expected net
cash flow the regulator should permit) follows either from the component
formula directly or from the fixed point of the circular formulation that
prices the combined flow at a single weighted rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import NoSolutionError, NonConvergenceError, ZeroExpectationError
from .rates import GrossRate, as_gross
from .tree import EventTree, RandomCashFlow

from . import coc as _coc


@dataclass(frozen=True)
class OneYearScenario:
    """Inputs for a single regulatory year, all rates in gross form."""

    rab0: float
    rab1_expected: float
    r_x: float
    r_rab: float

    def __post_init__(self) -> None:
        for name in ("rab0", "rab1_expected", "r_x", "r_rab"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.r_x <= 0.0 or self.r_rab <= 0.0:
            raise ValueError("gross rates must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "OneYearScenario":
        try:
            return cls(
                rab0=float(data["rab0"]),
                rab1_expected=float(data["rab1"]),
                r_x=float(data["r_x"]),
                r_rab=float(data["r_rab"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad one-year scenario: {exc}") from exc

    def to_dict(self) -> dict[str, float]:
        return {
            "rab0": self.rab0,
            "rab1": self.rab1_expected,
            "r_x": self.r_x,
            "r_rab": self.r_rab,
        }

    @classmethod
    def from_tree(
        cls, tree: EventTree, x1: RandomCashFlow, rab1: RandomCashFlow
    ) -> "OneYearScenario":
        """Derive a scenario from payoffs priced on a tree.

        Here the closing-base rate is computed, not assumed: both rates come
        out of the valuation functional, and the opening base is the combined
        value of flow plus closing base.
        """
        if x1.time != 1 or rab1.time != 1:
            raise ValueError("one-year payoffs must be dated at time 1")
        return cls(
            rab0=tree.value(x1 + rab1),
            rab1_expected=tree.expect(rab1),
            r_x=_coc.cost_of_capital(tree, x1).gross,
            r_rab=_coc.cost_of_capital(tree, rab1).gross,
        )


@dataclass(frozen=True)
class BuildingBlockDecomposition:
    """Revenue allowance split into its building blocks."""

    revenue: float
    opex: float
    capex: float
    depreciation: float
    return_on_capital: float

    @property
    def net_cash_flow(self) -> float:
        return self.revenue - self.opex - self.capex


def component_allowance(s: OneYearScenario) -> float:
    """Expected net cash flow with each component priced at its own rate.

    E(X_1) = r_x * RAB_0 - E(RAB_1) * (r_x / r_rab).
    """
    return s.r_x * s.rab0 - s.rab1_expected * (s.r_x / s.r_rab)


def combined_cost_of_capital(
    s: OneYearScenario, expected_x1: float | None = None
) -> GrossRate:
    """Rate on the combined flow X_1 + RAB_1, as a harmonic weighted average.

    The weights are expectation shares: alpha = E(X_1) / (E(X_1) + E(RAB_1)).
    When ``expected_x1`` is omitted the component allowance is used, which is
    the self-consistent choice.
    """
    e_x = component_allowance(s) if expected_x1 is None else expected_x1
    total = e_x + s.rab1_expected
    if total == 0.0:
        raise ZeroExpectationError("combined expectation is zero; no rate exists")
    alpha = e_x / total
    inverse = alpha / s.r_x + (1.0 - alpha) / s.r_rab
    return GrossRate(1.0 / inverse)


def standard_allowance(rab0: float, rab1_expected: float, r_combined: GrossRate | float) -> float:
    """Expected net cash flow from the single-rate formulation.

    E(X_1) = R * RAB_0 - E(RAB_1), with R the rate on the combined flow.  The
    formulation is circular because R itself depends on E(X_1).
    """
    return as_gross(r_combined) * rab0 - rab1_expected


def solve_standard_allowance(
    s: OneYearScenario, tol: float = 1e-10, max_iter: int = 10000
) -> tuple[float, int]:
    """Fixed point of the single-rate formulation by damped iteration.

    Starts at zero and applies half-step damping; converges to the component
    allowance.  Returns ``(allowance, iterations)``.

    Raises:
        NonConvergenceError: iteration budget exhausted before two successive
            iterates agreed to ``tol``.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    e = 0.0
    for it in range(1, max_iter + 1):
        target = standard_allowance(s.rab0, s.rab1_expected, combined_cost_of_capital(s, e))
        nxt = e + 0.5 * (target - e)
        if abs(nxt - e) < tol:
            return nxt, it
        e = nxt
    raise NonConvergenceError(
        f"single-rate allowance did not settle within {max_iter} iterations"
    )


def revenue_allowance(
    s: OneYearScenario,
    opex: float = 0.0,
    capex: float = 0.0,
    rab1: float | None = None,
) -> BuildingBlockDecomposition:
    """Revenue allowance in building-block form.

    Depreciation is the opening base plus capex less the closing base, and the
    return on capital applies the combined rate to the opening base.  Revenue
    less opex and capex reproduces the net cash-flow allowance.
    """
    closing = s.rab1_expected if rab1 is None else rab1
    r_combined = combined_cost_of_capital(s)
    ret = (r_combined.gross - 1.0) * s.rab0
    dep = s.rab0 + capex - closing
    return BuildingBlockDecomposition(
        revenue=ret + opex + dep,
        opex=opex,
        capex=capex,
        depreciation=dep,
        return_on_capital=ret,
    )


def combined_coc_series(
    rab1_expected: float,
    r_x: float,
    r_rab: float,
    allowances: Sequence[float],
) -> list[tuple[float, float]]:
    """Combined rate (in percent) as the expected net cash flow varies.

    For each allowance level e the combined rate uses expectation weights
    e/(e + E(RAB_1)); the opening base plays no role here.  The series is
    strictly increasing in e whenever r_x > r_rab.
    """
    out = []
    for e in allowances:
        s = OneYearScenario(rab0=1.0, rab1_expected=rab1_expected, r_x=r_x, r_rab=r_rab)
        out.append((float(e), combined_cost_of_capital(s, float(e)).percent))
    return out


def constant_allowance_schedule(
    rab0: float,
    life: int,
    r_x: float,
    r_rab: float,
    tol: float = 1e-10,
) -> tuple[float, list[float]]:
    """Constant expected cash flow that runs an asset base down to zero.

    Each year the base evolves as RAB_t = r_rab * (RAB_{t-1} - c / r_x); the
    constant c is found by bisection so that RAB_life = 0.  Returns the
    constant and the per-year combined rates (c + RAB_{t+1}) / RAB_t - 1 in
    percent, which rise over the asset's life.

    Raises:
        NoSolutionError: no positive constant empties the base (degenerate
            inputs only).
    """
    if life < 1:
        raise ValueError("life must be >= 1")
    if rab0 <= 0.0:
        raise ValueError("rab0 must be positive")

    def closing_base(c: float) -> list[float]:
        path = [rab0]
        for _ in range(life):
            path.append(r_rab * (path[-1] - c / r_x))
        return path

    lo, hi = 0.0, rab0 * r_x + 1.0
    if closing_base(lo)[-1] <= 0.0 or closing_base(hi)[-1] >= 0.0:
        raise NoSolutionError("cannot bracket a constant that empties the base")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if closing_base(mid)[-1] > 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    path = closing_base(c)
    path[-1] = 0.0  # exactly exhausted by construction of c
    rates = [
        (c + path[t + 1]) / path[t] - 1.0 if path[t] != 0.0 else 0.0
        for t in range(life)
    ]
    return c, [r * 100.0 for r in rates]
