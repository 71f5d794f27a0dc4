"""Cost-of-capital operators on event trees.

The gross cost of capital of a dated payoff is its expectation divided by its
present value.  This module provides that ratio, holding-period variants, the
two ways of averaging rates across payoffs, and a mean-variance construction
of state prices with the associated beta / security-market-line rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    RateOutOfRangeError,
    ZeroDenominatorError,
    ZeroExpectationError,
    ZeroPresentValueError,
    ZeroVarianceError,
)
from .rates import GrossRate, as_gross
from .tree import EventTree, RandomCashFlow


def cost_of_capital(tree: EventTree, x: RandomCashFlow, at: int | None = None) -> GrossRate:
    """Gross cost of capital E(x)/V(x) seen from node ``at`` (default root).

    Raises:
        ZeroPresentValueError: the payoff is worth exactly zero, so the ratio
            is undefined.
    """
    v = tree.value(x, at)
    if v == 0.0:
        raise ZeroPresentValueError("cost of capital undefined for a zero-value payoff")
    return GrossRate(tree.expect(x, at) / v)


def holding_cost_of_capital(
    tree: EventTree, x: RandomCashFlow, sell_time: int, at: int | None = None
) -> GrossRate:
    """Cost of capital from ``at`` for holding ``x`` until ``sell_time``.

    The position is bought at ``at`` and closed out at ``sell_time`` for the
    then-prevailing value of ``x``, so the rate is E(V_sell)/V_now.
    """
    node = tree.root if at is None else at
    s = tree.time(node)
    if not (s <= sell_time <= x.time):
        raise ValueError(
            f"sell time {sell_time} must lie between the node's time {s} and {x.time}"
        )
    resale = tree.value_at(x, sell_time)
    v = tree.value(x, node)
    if v == 0.0:
        raise ZeroPresentValueError("holding cost of capital undefined at zero value")
    return GrossRate(tree.expect(resale, node) / v)


def two_period_decomposition_residual(tree: EventTree, x2: RandomCashFlow) -> float:
    """Absolute gap in the two-period decomposition of a time-2 cost of capital.

    The left side is the direct two-period rate.  The right side chains the
    first-period rate of the interim value with an expectation of the payoff
    deflated by its second-period rates, evaluated literally node by node.
    """
    if x2.time != 2:
        raise ValueError(f"expected a time-2 payoff, got time {x2.time}")
    lhs = cost_of_capital(tree, x2).gross

    interim = tree.value_at(x2, 1)
    first_leg = cost_of_capital(tree, interim).gross
    e1 = tree.expected_at(x2, 1)
    deflated = {}
    for n in tree.nodes_at(1):
        if interim.values[n] == 0.0:
            raise ZeroDenominatorError(f"interim value of the payoff is zero at node {n}")
        if e1.values[n] == 0.0:
            raise ZeroDenominatorError(f"expected payoff is zero at node {n}")
        second_leg = e1.values[n] / interim.values[n]
        deflated[n] = e1.values[n] / second_leg
    tail = tree.expect(RandomCashFlow(1, deflated))
    if tail == 0.0:
        raise ZeroDenominatorError("deflated tail expectation is zero")
    rhs = first_leg * tree.expect(x2) / tail
    return abs(lhs - rhs)


def _weighted_combination(
    tree: EventTree,
    x: RandomCashFlow,
    y: RandomCashFlow,
    at: int | None,
    harmonic: bool,
) -> tuple[float, GrossRate]:
    combined = x + y
    if harmonic:
        total = tree.expect(combined, at)
        if total == 0.0:
            raise ZeroExpectationError("expectation weights undefined: E(x+y) = 0")
        alpha = tree.expect(x, at) / total
    else:
        total = tree.value(combined, at)
        if total == 0.0:
            raise ZeroPresentValueError("value weights undefined: V(x+y) = 0")
        alpha = tree.value(x, at) / total

    acc = 0.0
    for weight, leg in ((alpha, x), (1.0 - alpha, y)):
        if weight == 0.0:
            continue  # a zero-weight leg may have an undefined rate of its own
        r = cost_of_capital(tree, leg, at).gross
        if harmonic:
            if r == 0.0:
                raise ZeroDenominatorError("harmonic average undefined for a zero gross rate")
            acc += weight / r
        else:
            acc += weight * r
    rate = (1.0 / acc) if harmonic else acc
    return alpha, GrossRate(rate)


def value_weighted_average(
    tree: EventTree, x: RandomCashFlow, y: RandomCashFlow, at: int | None = None
) -> tuple[float, GrossRate]:
    """Arithmetic average of the two legs' rates under value weights.

    Returns ``(alpha, rate)`` with ``alpha = V(x)/V(x+y)``; the result equals
    the cost of capital of ``x + y``.
    """
    return _weighted_combination(tree, x, y, at, harmonic=False)


def expectation_weighted_average(
    tree: EventTree, x: RandomCashFlow, y: RandomCashFlow, at: int | None = None
) -> tuple[float, GrossRate]:
    """Harmonic average of the two legs' rates under expectation weights.

    Returns ``(alpha, rate)`` with ``alpha = E(x)/E(x+y)``; the inverse rate
    is the alpha-weighted average of the inverse leg rates, and the result
    equals the cost of capital of ``x + y``.
    """
    return _weighted_combination(tree, x, y, at, harmonic=True)


@dataclass(frozen=True)
class MeanVarianceSpec:
    """Parameters of a one-period mean-variance pricing rule.

    ``delta`` is the subjective discount factor and ``alpha_ra`` the risk
    aversion weight on variance.  ``alpha_ra`` is deliberately named apart
    from the portfolio weights called ``alpha`` elsewhere.
    """

    delta: float
    alpha_ra: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")
        if not math.isfinite(self.alpha_ra):
            raise ValueError("alpha_ra must be finite")


def mean_variance_tree(
    spec: MeanVarianceSpec, probabilities: Sequence[float], market_values: Sequence[float]
) -> EventTree:
    """One-period tree whose state prices embed a mean-variance valuation.

    State i gets q_i = p_i * delta * (1 - 2 * alpha_ra * (M_i - E[M])), which
    makes the value of any payoff X equal delta*E[X] - 2*alpha_ra*delta*Cov(M, X).

    Raises:
        NonPositiveStatePriceError: the risk aversion is too aggressive for
            the given market dispersion, via the tree constructor.
    """
    if len(probabilities) != len(market_values) or not probabilities:
        raise ValueError("need matching, nonempty probabilities and market values")
    mean = sum(p * m for p, m in zip(probabilities, market_values))
    q = [
        p * spec.delta * (1.0 - 2.0 * spec.alpha_ra * (m - mean))
        for p, m in zip(probabilities, market_values)
    ]
    return EventTree.one_period(list(probabilities), q)


def beta(tree: EventTree, x: RandomCashFlow, m: RandomCashFlow, at: int | None = None) -> float:
    """Expectation-scaled regression coefficient of ``x`` on the market payoff ``m``.

    Computed under the physical path probabilities from ``at``:
    (E(m)/E(x)) * Cov(x, m) / Var(m).
    """
    if x.time != m.time:
        raise ValueError("payoff and market must be dated alike")
    node = tree.root if at is None else at
    probs = {n: tree.path_probability(n, node) for n in tree.nodes_at(x.time)}
    ex = sum(probs[n] * x.values[n] for n in probs)
    em = sum(probs[n] * m.values[n] for n in probs)
    cov = sum(probs[n] * (x.values[n] - ex) * (m.values[n] - em) for n in probs)
    var = sum(probs[n] * (m.values[n] - em) ** 2 for n in probs)
    if var == 0.0:
        raise ZeroVarianceError("market payoff has zero variance")
    if ex == 0.0:
        raise ZeroExpectationError("beta undefined for a payoff with zero expectation")
    return (em / ex) * (cov / var)


def capm_rate(
    rf: GrossRate | float, rm: GrossRate | float, b: float
) -> GrossRate:
    """Security-market-line rate in inverse form.

    1/R = 1/RF - (1/RF - 1/RM) * beta.  Stated this way the relation is exact
    for mean-variance state prices.
    """
    rf_g = as_gross(rf)
    rm_g = as_gross(rm)
    if rf_g <= 0.0 or rm_g <= 0.0:
        raise RateOutOfRangeError("risk-free and market gross rates must be positive")
    inverse = 1.0 / rf_g - (1.0 / rf_g - 1.0 / rm_g) * b
    if inverse <= 0.0:
        raise RateOutOfRangeError(
            f"beta {b} pushes the inverse rate to {inverse}, outside the admissible range"
        )
    return GrossRate(1.0 / inverse)
