"""Zero-coupon debt instruments, portfolios, and financing-side results.

A debt book is a set of instruments (one per maturity, each paying a
nonnegative state-contingent amount) plus holdings: how many units of the
instrument maturing at ``t`` are held from rebalance time ``s``.  On top of
that sit the period-one payoff split, the rebalancing invariance of the
portfolio's value, the portfolio cost of capital assembled instrument by
instrument, the yield/cost-of-capital gap, the one-year weighted-average rate
of an equity/debt split, the equity-only allowance, and a fixed two-period
witness showing that no single weighted-average rate reprices a levered firm
period by period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .bbm import OneYearScenario, component_allowance
from .coc import cost_of_capital, holding_cost_of_capital, value_weighted_average
from .errors import ZeroPortfolioValueError, ZeroPresentValueError
from .multiyear import internal_rate_of_return
from .rates import GrossRate, as_gross
from .tree import DocumentError, EventTree, RandomCashFlow


@dataclass(frozen=True)
class DebtInstrument:
    """A claim paying ``payoff`` at ``maturity``; default is encoded in the payoff."""

    maturity: int
    payoff: RandomCashFlow

    def __post_init__(self) -> None:
        if self.maturity != self.payoff.time:
            raise ValueError(
                f"payoff occurs at time {self.payoff.time}, not the stated maturity {self.maturity}"
            )
        for node, amount in self.payoff.values.items():
            if amount < 0.0:
                raise ValueError(f"negative payoff {amount} at node {node}")

    @classmethod
    def defaultable_bond(
        cls,
        tree: EventTree,
        maturity: int,
        face: float,
        default_nodes: Iterable[int] = (),
        recovery: float = 0.0,
    ) -> "DebtInstrument":
        """Bond paying ``face``, or ``recovery * face`` in the default states.

        ``default_nodes`` are maturity-date nodes; the constructor compiles the
        (default set, recovery) description down to plain node payoffs.
        """
        if not 0.0 <= recovery <= 1.0:
            raise ValueError(f"recovery must lie in [0, 1], got {recovery}")
        if face < 0.0:
            raise ValueError(f"face must be nonnegative, got {face}")
        bad = set(default_nodes)
        for node in bad:
            if node not in tree or tree.time(node) != maturity:
                raise ValueError(f"default node {node} is not a maturity-date node")
        amounts = {
            node: recovery * face if node in bad else face
            for node in tree.nodes_at(maturity)
        }
        return cls(maturity, tree.flow(maturity, amounts))


@dataclass(frozen=True)
class DebtPortfolio:
    """Holdings ``(s, t) -> quantity``: units of the maturity-``t`` instrument held from time ``s``."""

    holdings: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean: dict[tuple[int, int], float] = {}
        for key, quantity in self.holdings.items():
            s, t = key
            if not (isinstance(s, int) and isinstance(t, int)):
                raise ValueError(f"holding key {key!r} must be an (int, int) pair")
            if t <= s or s < 0:
                raise ValueError(f"holding ({s}, {t}): maturity must exceed the rebalance time")
            if not math.isfinite(quantity):
                raise ValueError(f"holding ({s}, {t}) has non-finite quantity {quantity}")
            clean[(s, t)] = float(quantity)
        object.__setattr__(self, "holdings", clean)

    def quantities_at(self, s: int) -> dict[int, float]:
        """Maturity -> quantity for the holdings put on at rebalance time ``s``."""
        return {t: d for (s_, t), d in self.holdings.items() if s_ == s}

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, object]]) -> "DebtPortfolio":
        holdings: dict[tuple[int, int], float] = {}
        for i, rec in enumerate(records):
            try:
                key = (int(rec["s"]), int(rec["t"]))
                quantity = float(rec["d"])  # type: ignore[arg-type]
            except (KeyError, TypeError, ValueError) as exc:
                raise DocumentError(f"holding #{i}: expected s/t/d fields ({exc})") from exc
            if key in holdings:
                raise DocumentError(f"holding #{i}: duplicate holding for {key}")
            holdings[key] = quantity
        return cls(holdings)

    def to_records(self) -> list[dict[str, float]]:
        return [
            {"s": s, "t": t, "d": d}
            for (s, t), d in sorted(self.holdings.items())
        ]


def build_portfolio_document(
    instruments: Mapping[int, DebtInstrument], portfolio: DebtPortfolio
) -> dict:
    """Serialize instruments and holdings to the portfolio JSON layout."""
    return {
        "instruments": [
            {
                "maturity": m,
                "payoff": {str(node): amount for node, amount in sorted(inst.payoff.values.items())},
            }
            for m, inst in sorted(instruments.items())
        ],
        "holdings": portfolio.to_records(),
    }


def parse_portfolio_document(
    tree: EventTree, doc: object
) -> tuple[dict[int, DebtInstrument], DebtPortfolio]:
    """Read a portfolio JSON document against ``tree``.

    Raises:
        DocumentError: structural problems (duplicate maturities, payoffs not
            covering the maturity date, holdings referencing no instrument).
    """
    if not isinstance(doc, Mapping):
        raise DocumentError("portfolio document must be a JSON object")
    instruments: dict[int, DebtInstrument] = {}
    for i, entry in enumerate(doc.get("instruments", [])):
        if not isinstance(entry, Mapping):
            raise DocumentError(f"instrument #{i} must be an object")
        try:
            maturity = int(entry["maturity"])
            raw = entry["payoff"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"instrument #{i}: expected maturity/payoff fields ({exc})") from exc
        if maturity in instruments:
            raise DocumentError(f"instrument #{i}: duplicate maturity {maturity}")
        if not isinstance(raw, Mapping):
            raise DocumentError(f"instrument #{i}: payoff must map node ids to amounts")
        try:
            amounts = {int(node): float(amount) for node, amount in raw.items()}
            payoff = tree.flow(maturity, amounts)
            instruments[maturity] = DebtInstrument(maturity, payoff)
        except (TypeError, ValueError) as exc:
            raise DocumentError(f"instrument #{i} (maturity {maturity}): {exc}") from exc
    try:
        portfolio = DebtPortfolio.from_records(doc.get("holdings", []))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc
    for (_, t) in portfolio.holdings:
        if t not in instruments:
            raise DocumentError(f"holding references unknown instrument maturing at {t}")
    return instruments, portfolio


def portfolio_value(
    tree: EventTree,
    instruments: Mapping[int, DebtInstrument],
    portfolio: DebtPortfolio,
    at: int | None = None,
) -> float:
    """Value at node ``at`` of the holdings put on at that node's time."""
    node = tree.root if at is None else at
    total = 0.0
    for t, quantity in sorted(portfolio.quantities_at(tree.time(node)).items()):
        if t not in instruments:
            raise ValueError(f"no instrument maturing at {t}")
        total += quantity * tree.value(instruments[t].payoff, node)
    return total


def first_period_debt_flows(
    tree: EventTree,
    instruments: Mapping[int, DebtInstrument],
    portfolio: DebtPortfolio,
    rebalanced: DebtPortfolio | None = None,
) -> tuple[RandomCashFlow, RandomCashFlow]:
    """Split the debt book's time-1 position into net payoff and retained value.

    The net payoff collects the maturing instrument plus sales (or purchases)
    of the longer instruments at their time-1 values; the retained value is
    what the post-rebalance book is worth.  ``rebalanced=None`` keeps every
    pre-existing long position unchanged.
    """
    q0 = portfolio.quantities_at(0)
    if rebalanced is None:
        q1 = {t: d for t, d in q0.items() if t >= 2}
    else:
        q1 = rebalanced.quantities_at(1)
    for t in q1:
        if t not in instruments:
            raise ValueError(f"rebalance references unknown instrument maturing at {t}")

    payoff = dict.fromkeys(tree.nodes_at(1), 0.0)
    retained = dict.fromkeys(tree.nodes_at(1), 0.0)
    if 1 in q0:
        maturing = instruments[1].payoff
        for n in payoff:
            payoff[n] += q0[1] * maturing.values[n]
    for t in sorted(set(q0) | set(q1)):
        if t < 2:
            continue
        prices = tree.value_at(instruments[t].payoff, 1)
        sold = q0.get(t, 0.0) - q1.get(t, 0.0)
        kept = q1.get(t, 0.0)
        for n in payoff:
            payoff[n] += sold * prices.values[n]
            retained[n] += kept * prices.values[n]
    return tree.flow(1, payoff), tree.flow(1, retained)


def rebalance_invariance_residual(
    tree: EventTree,
    instruments: Mapping[int, DebtInstrument],
    portfolio: DebtPortfolio,
    rebalances: Iterable[DebtPortfolio | None],
) -> float:
    """Largest gap between V(payoff + retained value) and the book's time-0 value.

    The gap should be zero no matter how the book is rebalanced at time 1:
    selling a position and holding it have the same time-1 worth.
    """
    v0 = portfolio_value(tree, instruments, portfolio)
    worst = 0.0
    for candidate in rebalances:
        x1, v1 = first_period_debt_flows(tree, instruments, portfolio, candidate)
        worst = max(worst, abs(tree.value(x1 + v1) - v0))
    return worst


@dataclass(frozen=True)
class InstrumentShare:
    """One instrument's slice of the portfolio cost of capital."""

    maturity: int
    weight: float
    rate: GrossRate | None


def portfolio_cost_of_capital(
    tree: EventTree,
    instruments: Mapping[int, DebtInstrument],
    portfolio: DebtPortfolio,
    observable_only: bool = False,
) -> tuple[GrossRate | None, tuple[InstrumentShare, ...]]:
    """One-period cost of capital of the debt book, assembled per instrument.

    Each instrument held from time 0 contributes its value share times its
    one-period rate: the maturing instrument's expected payoff over price, and
    for longer instruments the expected next-period price over today's price.
    The assembled rate equals the direct cost of capital of the combined
    period-one flow.

    With ``observable_only=True`` the expected future prices of the longer
    instruments are treated as unavailable — only the maturing instrument's
    rate can be quoted, the longer shares carry ``None``, and the combined
    rate is ``None`` whenever any long position exists.

    Raises:
        ZeroPortfolioValueError: the book is worth exactly zero at time 0.
    """
    v0 = portfolio_value(tree, instruments, portfolio)
    if v0 == 0.0:
        raise ZeroPortfolioValueError("portfolio value is zero; weights undefined")
    shares: list[InstrumentShare] = []
    inverse_missing = False
    combined = 0.0
    for t, quantity in sorted(portfolio.quantities_at(0).items()):
        if t not in instruments:
            raise ValueError(f"no instrument maturing at {t}")
        weight = quantity * tree.value(instruments[t].payoff) / v0
        if t == 1:
            rate = cost_of_capital(tree, instruments[t].payoff)
        elif observable_only:
            rate = None
            inverse_missing = True
        else:
            rate = holding_cost_of_capital(tree, instruments[t].payoff, sell_time=1)
        shares.append(InstrumentShare(t, weight, rate))
        if rate is not None:
            combined += weight * rate.gross
    total = None if inverse_missing else GrossRate(combined)
    return total, tuple(shares)


def ytm_and_coc(
    tree: EventTree, instrument: DebtInstrument, face: float
) -> tuple[GrossRate, GrossRate]:
    """Per-period yield to maturity and cost of capital of one instrument.

    The yield discounts the promised face; the cost of capital discounts the
    expected payoff.  Both are geometric per-period rates, so for any payoff
    never above face the yield overstates the cost of capital, with equality
    exactly when the instrument always pays in full.

    Raises:
        ZeroPresentValueError: the instrument has no value to yield against.
    """
    price = tree.value(instrument.payoff)
    if price <= 0.0:
        raise ZeroPresentValueError("yield undefined for a non-positive price")
    t = instrument.maturity
    ytm = (face / price) ** (1.0 / t)
    coc = (tree.expect(instrument.payoff) / price) ** (1.0 / t)
    return GrossRate(ytm), GrossRate(coc)


def one_year_wacc(
    tree: EventTree,
    equity_flow: RandomCashFlow,
    debt_flow: RandomCashFlow,
    total_flow: RandomCashFlow | None = None,
) -> tuple[GrossRate, float]:
    """Weighted-average one-period rate of an equity/debt split of a time-1 flow.

    Returns ``(rate, alpha)`` with ``alpha`` the equity share by value; the
    rate equals the direct cost of capital of the combined flow.  When the
    firm-level flow is supplied it must equal the two parts node by node.
    """
    if total_flow is not None:
        combined = equity_flow + debt_flow
        for node, amount in total_flow.values.items():
            if not math.isclose(amount, combined.values[node], rel_tol=1e-12, abs_tol=1e-9):
                raise ValueError(
                    f"split does not add up at node {node}: "
                    f"{combined.values[node]} != {amount}"
                )
    alpha, rate = value_weighted_average(tree, equity_flow, debt_flow)
    return rate, alpha


@dataclass(frozen=True)
class EquityScenario:
    """One-year allowance inputs for the equity side of a levered asset base."""

    rab0: float
    rab1_e: float
    r_xe: float
    r_rabe: float
    debt_value0: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "r_xe", as_gross(self.r_xe))
        object.__setattr__(self, "r_rabe", as_gross(self.r_rabe))
        for name in ("rab0", "rab1_e", "r_xe", "r_rabe", "debt_value0"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.r_xe <= 0.0 or self.r_rabe <= 0.0:
            raise ValueError("gross rates must be positive")


def equity_allowance(s: EquityScenario) -> float:
    """Expected year-one payment to equity holders of a part-debt-funded base.

    Equity is worth the asset base minus the debt book, so the allowance is
    the one-year component form applied to that difference:

        E(X^E_1) = rab0 * r_xe - (rab1_e + r_rabe * debt_value0) * (r_xe / r_rabe)

    equivalently ``(rab0 - rab1_e / r_rabe - debt_value0) * r_xe``.  The output
    satisfies ``rab0 = E(X^E_1)/r_xe + rab1_e/r_rabe + debt_value0`` exactly.
    """
    return (s.rab0 - s.rab1_e / s.r_rabe - s.debt_value0) * s.r_xe


def equity_allowance_identity_residual(s: EquityScenario) -> float:
    """Gap in ``rab0 = E(X^E_1)/r_xe + rab1_e/r_rabe + debt_value0``."""
    lhs = s.rab0
    rhs = equity_allowance(s) / s.r_xe + s.rab1_e / s.r_rabe + s.debt_value0
    return abs(lhs - rhs)


@dataclass(frozen=True)
class RateSplitInstance:
    """A two-period firm split into equity and debt flow vectors.

    ``combined``/``equity``/``debt`` list expected flows per year; the final
    entries include the closing positions (asset base, equity base, and debt
    book value), so each vector prices to its opening via a single rate.
    """

    rab0: float
    equity0: float
    debt0: float
    combined: tuple[float, ...]
    equity: tuple[float, ...]
    debt: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "combined", tuple(float(v) for v in self.combined))
        object.__setattr__(self, "equity", tuple(float(v) for v in self.equity))
        object.__setattr__(self, "debt", tuple(float(v) for v in self.debt))
        if not len(self.combined) == len(self.equity) == len(self.debt):
            raise ValueError("flow vectors must have equal length")
        for e, d, c in zip(self.equity, self.debt, self.combined):
            if not math.isclose(e + d, c, rel_tol=1e-9, abs_tol=1e-9):
                raise ValueError(f"split does not add up: {e} + {d} != {c}")
        if not math.isclose(self.equity0 + self.debt0, self.rab0, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError("opening values must add up to the asset base")


@dataclass(frozen=True)
class RateSplitResult:
    """Single rates of the three books and the best weighted-average fit."""

    combined_rate: GrossRate
    equity_rate: GrossRate
    debt_rate: GrossRate
    best_alpha: float
    best_residual: float


def _period_pricing_residual(instance: RateSplitInstance, gross: float) -> float:
    """Sum over years of |combined flow priced at ``gross`` - the split's pricing|.

    Each year's expected combined flow is discounted at the candidate rate and
    compared with the sum of the equity and debt flows discounted at their own
    single rates; a weighted-average rate succeeds only if every year's
    present value matches, so the per-year gaps are accumulated.
    """
    r_e = internal_rate_of_return(instance.equity0, instance.equity).gross
    r_d = internal_rate_of_return(instance.debt0, instance.debt).gross
    total = 0.0
    for k, (c, e, d) in enumerate(zip(instance.combined, instance.equity, instance.debt), start=1):
        split_pv = e / r_e**k + d / r_d**k
        total += abs(c / gross**k - split_pv)
    return total


def weighted_average_rate_gap(
    instance: RateSplitInstance, grid_step: float = 1e-4
) -> RateSplitResult:
    """Best achievable fit of a weighted-average rate to a two-book split.

    Scans mixing weights ``alpha`` over a grid (plus both endpoints), rates
    the firm at ``alpha * equity_rate + (1 - alpha) * debt_rate``, and keeps
    the smallest period-by-period pricing residual.  A strictly positive
    minimum shows the combined single rate is not any weighted average of the
    component rates.
    """
    r = internal_rate_of_return(instance.rab0, instance.combined)
    r_e = internal_rate_of_return(instance.equity0, instance.equity)
    r_d = internal_rate_of_return(instance.debt0, instance.debt)

    steps = int(round(1.0 / grid_step))
    best_alpha, best = 0.0, math.inf
    for i in range(steps + 1):
        alpha = min(i * grid_step, 1.0)
        mixed = alpha * r_e.gross + (1.0 - alpha) * r_d.gross
        residual = _period_pricing_residual(instance, mixed)
        if residual < best:
            best_alpha, best = alpha, residual
    return RateSplitResult(r, r_e, r_d, best_alpha, best)


# Fixed two-period witness: risk-free debt at 5%, equity at 20%, with the
# debt book front-light (most of its payoff in year two) and the equity book
# front-heavy.  No mix of 5% and 20% can reprice both years at once.
TWO_PERIOD_GAP_WITNESS = RateSplitInstance(
    rab0=937.6417233560091,
    equity0=388.8888888888889,
    debt0=548.7528344671202,
    combined=(400.0, 700.0),
    equity=(300.0, 200.0),
    debt=(100.0, 500.0),
)

# One-period control: with a single year any value split prices exactly, and
# these books are sized so the best mixing weight lands on the grid.
ONE_PERIOD_CONTROL = RateSplitInstance(
    rab0=400.0,
    equity0=200.0,
    debt0=200.0,
    combined=(450.0,),
    equity=(240.0,),
    debt=(210.0,),
)
