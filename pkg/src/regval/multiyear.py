"""Multi-year allowance schemes over a regulatory period.

Three ways of setting the expected cash-flow allowances for years 1..T are
covered, given an opening asset base and a path of closing bases:

* forward parameters: per-year rate pairs derived from the cumulative rates
  on each year's flow and on the closing base, applied year by year;
* a single rate for the whole period, recovered as an internal rate of
  return on the allowance stream;
* annually reset parameters, where each year's pair is pinned down from the
  price processes of later payoffs by a quotient recursion.

A verifier checks the zero-net-present-value property of any concrete
policy: wherever the policy resets, the asset base must equal the value of
everything still to come.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    NoSignChangeError,
    PolicyViolationError,
    ZeroDenominatorError,
)
from .rates import GrossRate, as_gross
from .tree import CashFlowStream, EventTree, RandomCashFlow


@dataclass(frozen=True)
class MultiYearScenario:
    """Deterministic inputs for a T-year period.

    ``rab`` holds the asset base for times 0..T.  ``r_x[i]`` is the gross
    cumulative rate from time 0 on the year-(i+1) net cash flow, ``r_rab[i]``
    the same for the time-(i+1) closing base.
    """

    T: int
    rab: tuple[float, ...]
    r_x: tuple[float, ...]
    r_rab: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rab", tuple(float(v) for v in self.rab))
        object.__setattr__(self, "r_x", tuple(float(v) for v in self.r_x))
        object.__setattr__(self, "r_rab", tuple(float(v) for v in self.r_rab))
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if len(self.rab) != self.T + 1:
            raise ValueError(f"rab must list {self.T + 1} values, got {len(self.rab)}")
        if len(self.r_x) != self.T or len(self.r_rab) != self.T:
            raise ValueError(f"r_x and r_rab must list {self.T} values each")
        for seq, name in ((self.rab, "rab"), (self.r_x, "r_x"), (self.r_rab, "r_rab")):
            if any(not math.isfinite(v) for v in seq):
                raise ValueError(f"{name} contains a non-finite value")
        if any(v <= 0.0 for v in self.r_x + self.r_rab):
            raise ValueError("gross rates must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "MultiYearScenario":
        try:
            return cls(
                T=int(data["T"]),
                rab=tuple(float(v) for v in data["rab"]),
                r_x=tuple(float(v) for v in data["r_x"]),
                r_rab=tuple(float(v) for v in data["r_rab"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad multi-year scenario: {exc}") from exc

    def to_dict(self) -> dict[str, object]:
        return {
            "T": self.T,
            "rab": list(self.rab),
            "r_x": list(self.r_x),
            "r_rab": list(self.r_rab),
        }


@dataclass(frozen=True)
class ForwardParams:
    """Per-year rate pairs (gross); entry i belongs to year i+1."""

    r: tuple[float, ...]
    s: tuple[float, ...]


def forward_parameters(sc: MultiYearScenario) -> ForwardParams:
    """Year-by-year parameters from the cumulative rate structure.

    R_t divides the cumulative flow rate by the previous closing-base rate,
    S_t is the one-year step in the closing-base rates; the time-0 base
    carries rate 1 by convention.
    """
    r = []
    s = []
    for i in range(sc.T):
        prev = 1.0 if i == 0 else sc.r_rab[i - 1]
        r.append(sc.r_x[i] / prev)
        s.append(sc.r_rab[i] / prev)
    return ForwardParams(r=tuple(r), s=tuple(s))


def allowance_path(sc: MultiYearScenario) -> tuple[float, ...]:
    """Expected net cash flow per year under the forward-parameter scheme.

    E(X_t) = R_t * RAB_{t-1} - RAB_t * (R_t / S_t).  Discounting each year's
    allowance at its cumulative rate and adding the discounted terminal base
    recovers the opening base exactly.
    """
    fwd = forward_parameters(sc)
    return tuple(
        fwd.r[i] * sc.rab[i] - sc.rab[i + 1] * (fwd.r[i] / fwd.s[i])
        for i in range(sc.T)
    )


def implied_combined_coc(
    sc: MultiYearScenario, allowances: Sequence[float] | None = None
) -> tuple[float, ...]:
    """Naive per-year rate (percent) implied by allowance plus closing base.

    (E(X_t) + RAB_t) / RAB_{t-1} - 1.  Under the forward scheme this climbs
    over the period even when every year's parameters are identical.
    """
    path = allowance_path(sc) if allowances is None else tuple(allowances)
    if len(path) != sc.T:
        raise ValueError(f"expected {sc.T} allowances, got {len(path)}")
    out = []
    for i in range(sc.T):
        if sc.rab[i] == 0.0:
            raise ZeroDenominatorError(f"asset base is zero at time {i}")
        out.append(((path[i] + sc.rab[i + 1]) / sc.rab[i] - 1.0) * 100.0)
    return tuple(out)


def internal_rate_of_return(
    outlay: float, flows: Sequence[float], tol: float = 1e-12
) -> GrossRate:
    """The unique gross rate R with sum(flows[t] / R^t) equal to ``outlay``.

    Flows are indexed from year 1 and must be nonnegative with at least one
    strictly positive entry, which makes the present value strictly monotone
    in R and the root unique.  Solved by bisection from a bracket expanded
    upward from [1e-6, 2] until the sign changes.

    Raises:
        NoSignChangeError: the problem is ill-posed (negative or all-zero
            flows, non-positive outlay) or no bracket could be found.
    """
    flows = [float(f) for f in flows]
    if not flows or any(f < 0.0 for f in flows) or all(f == 0.0 for f in flows):
        raise NoSignChangeError("flows must be nonnegative with at least one positive")
    if not (math.isfinite(outlay) and outlay > 0.0):
        raise NoSignChangeError(f"outlay must be positive, got {outlay!r}")

    def gap(rate: float) -> float:
        return sum(f / rate**t for t, f in enumerate(flows, start=1)) - outlay

    lo, hi = 1e-6, 2.0
    if gap(lo) < 0.0:
        raise NoSignChangeError("present value below the outlay even at a vanishing rate")
    for _ in range(200):
        if gap(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NoSignChangeError("could not bracket the rate of return")
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= tol:
            break
        if g > 0.0:
            lo = mid
        else:
            hi = mid
    return GrossRate(mid)


def single_rate_allowances(
    rab: Sequence[float], r: GrossRate | float
) -> tuple[float, ...]:
    """Allowance per year when one rate is applied to the whole period.

    E(X_t) = R * RAB_{t-1} - RAB_t for the given base path (times 0..T).
    """
    base = [float(v) for v in rab]
    if len(base) < 2:
        raise ValueError("need an opening and at least one closing base")
    r_g = as_gross(r)
    return tuple(r_g * base[i] - base[i + 1] for i in range(len(base) - 1))


# -- annually reset parameters ------------------------------------------------


def _scalar_of(flow: RandomCashFlow, rel_tol: float = 1e-9) -> float:
    vals = list(flow.values.values())
    lead = vals[0]
    scale = max(1.0, abs(lead))
    if any(abs(v - lead) > rel_tol * scale for v in vals):
        raise ValueError("parameter varies across nodes; no scalar form exists")
    return lead


@dataclass(frozen=True)
class AnnualParams:
    """Node-wise annual rate pairs; entry t covers the year ending at t.

    Each entry is a payoff dated t-1 whose amounts are gross rates.  On a
    deterministic structure all amounts coincide and the scalar accessors
    apply.
    """

    a: Mapping[int, RandomCashFlow]
    b: Mapping[int, RandomCashFlow]

    def a_scalar(self, t: int) -> float:
        return _scalar_of(self.a[t])

    def b_scalar(self, t: int) -> float:
        return _scalar_of(self.b[t])


def _holding_return_layers(
    tree: EventTree, claim: RandomCashFlow, j_max: int
) -> list[dict[int, float]]:
    """One-period gross returns of holding ``claim``, for periods 1..j_max.

    Layer j maps each time-(j-1) node to E_{j-1}(V_j(claim)) / V_{j-1}(claim).
    """
    values = [tree.value_at(claim, j) for j in range(j_max + 1)]
    layers: list[dict[int, float]] = []
    for j in range(1, j_max + 1):
        expected = tree.expected_at(values[j], j - 1)
        layer = {}
        for m in tree.nodes_at(j - 1):
            denom = values[j - 1].values[m]
            if denom == 0.0:
                raise ZeroDenominatorError(
                    f"claim value vanishes at node {m}; no holding return exists"
                )
            layer[m] = expected.values[m] / denom
        layers.append(layer)
    return layers


def _path_products(
    tree: EventTree, layers: list[dict[int, float]]
) -> dict[int, float]:
    """Multiply holding-return layers down each path; keyed by the deepest node."""
    product = {tree.root: layers[0][tree.root]}
    for j in range(1, len(layers)):
        product = {
            n: product[tree.parent(n)] * layers[j][n] for n in tree.nodes_at(j)
        }
    return product


def annual_reset_parameters(
    tree: EventTree, flows: CashFlowStream, terminal_rab: RandomCashFlow
) -> AnnualParams:
    """Rate pairs for a scheme that re-prices the asset base every year.

    The first element of each pair is the one-period cost of capital of that
    year's flow, node by node.  The second follows a quotient recursion: the
    running product of next year's claim's holding returns, divided by the
    pairs already fixed along the path.  The terminal base plays the role of
    the final claim.  Substituting the pairs into the nested allowance
    expansion reproduces the opening base exactly.
    """
    horizon = terminal_rab.time
    if horizon < 1:
        raise ValueError("terminal base must be dated at time 1 or later")
    if flows.times != tuple(range(1, horizon + 1)):
        raise ValueError(
            f"need one flow for every year 1..{horizon}, got times {flows.times}"
        )

    a: dict[int, RandomCashFlow] = {}
    for t in range(1, horizon + 1):
        x = flows.get(t)
        assert x is not None
        expected = tree.expected_at(x, t - 1)
        value = tree.value_at(x, t - 1)
        rates = {}
        for n in tree.nodes_at(t - 1):
            if value.values[n] == 0.0:
                raise ZeroDenominatorError(
                    f"year-{t} flow has zero value at node {n}; no one-period rate"
                )
            rates[n] = expected.values[n] / value.values[n]
        a[t] = RandomCashFlow(t - 1, rates)

    b: dict[int, RandomCashFlow] = {}
    fixed = {tree.root: 1.0}  # product of earlier pairs along each path
    for t in range(1, horizon + 1):
        claim = flows.get(t + 1) if t < horizon else terminal_rab
        assert claim is not None
        layers = _holding_return_layers(tree, claim, t)
        products = _path_products(tree, layers)
        layer_b = {}
        for n in tree.nodes_at(t - 1):
            if fixed[n] == 0.0:
                raise ZeroDenominatorError(f"degenerate zero parameter on the path to {n}")
            layer_b[n] = products[n] / fixed[n]
        b[t] = RandomCashFlow(t - 1, layer_b)
        if t < horizon:
            fixed = {
                n: fixed[tree.parent(n)] * layer_b[tree.parent(n)]
                for n in tree.nodes_at(t)
            }
    return AnnualParams(a=a, b=b)


def annual_expansion_value(
    tree: EventTree,
    flows: CashFlowStream,
    terminal_rab: RandomCashFlow,
    params: AnnualParams,
) -> float:
    """Evaluate the nested allowance expansion under the given rate pairs.

    Each year's term divides the conditional expectation by that year's first
    parameter (the terminal base by its second parameter) and rolls the
    result back through the chain of second parameters under expectations.
    """
    horizon = terminal_rab.time

    def rolled_back(amounts: RandomCashFlow, top_year: int) -> float:
        current = amounts
        for j in range(top_year, 0, -1):
            expected = tree.expected_at(current, j - 1)
            divided = {}
            for m in tree.nodes_at(j - 1):
                divisor = params.b[j].values[m]
                if divisor == 0.0:
                    raise ZeroDenominatorError(f"zero second parameter at node {m}")
                divided[m] = expected.values[m] / divisor
            current = RandomCashFlow(j - 1, divided)
        # after unwinding to time 0 the single root amount remains, scaled by
        # nothing further; the year-1 division already happened inside the loop
        return current.values[tree.root]

    total = 0.0
    for u in range(1, horizon + 1):
        x = flows.get(u)
        assert x is not None
        expected = tree.expected_at(x, u - 1)
        leading = {}
        for n in tree.nodes_at(u - 1):
            leading[n] = expected.values[n] / params.a[u].values[n]
        if u == 1:
            total += leading[tree.root]
        else:
            total += rolled_back(RandomCashFlow(u - 1, leading), u - 1)

    expected = tree.expected_at(terminal_rab, horizon - 1)
    leading = {}
    for n in tree.nodes_at(horizon - 1):
        divisor = params.b[horizon].values[n]
        if divisor == 0.0:
            raise ZeroDenominatorError(f"zero second parameter at node {n}")
        leading[n] = expected.values[n] / divisor
    if horizon == 1:
        total += leading[tree.root]
    else:
        total += rolled_back(RandomCashFlow(horizon - 1, leading), horizon - 1)
    return total


def annual_expansion_residual(
    tree: EventTree,
    flows: CashFlowStream,
    terminal_rab: RandomCashFlow,
    params: AnnualParams,
) -> float:
    """Gap between the nested expansion and the directly valued opening base."""
    direct = tree.value_stream(flows) + tree.value(terminal_rab)
    return abs(annual_expansion_value(tree, flows, terminal_rab, params) - direct)


def annual_allowance(
    rab_prev: float,
    expected_rab: float,
    a: GrossRate | float,
    b: GrossRate | float,
) -> float:
    """One year's expected flow from an annually reset rate pair.

    E(X_t) = A * RAB_{t-1} - E(RAB_t) * (A / B).
    """
    a_g = as_gross(a)
    b_g = as_gross(b)
    if b_g == 0.0:
        raise ZeroDenominatorError("second parameter must be nonzero")
    return a_g * rab_prev - expected_rab * (a_g / b_g)


# -- zero-NPV policy verification ---------------------------------------------


@dataclass(frozen=True)
class NpvCheck:
    """Residuals from verifying a policy's zero-net-present-value property."""

    npv_residual: float
    max_reset_residual: float
    worst_reset: int
    reset_gaps: Mapping[int, float]


def verify_npv_zero(
    tree: EventTree,
    flows: CashFlowStream,
    rab_path: Mapping[int, "RandomCashFlow | float"],
    resets: Sequence[int] | None = None,
    strict: bool = True,
    rtol: float = 1e-9,
) -> NpvCheck:
    """Check that a policy's asset base always prices the remaining stream.

    ``rab_path`` maps every time 0..S (S the last flow date) to the asset
    base at that time, either as a payoff or as a scalar for a base that is
    certain.  The base must be exhausted at S.  At every reset time the base
    must equal, node by node, the value of the flows up to and including the
    next reset plus the base carried at that reset.  The returned residuals
    compare each reset's base against the value of the entire remaining
    stream, and the opening base against the whole stream's value.

    Raises:
        PolicyViolationError: in strict mode, a reset's value condition or
            the terminal exhaustion fails beyond ``rtol`` of the opening base.
    """
    if len(flows) == 0:
        raise ValueError("a policy needs at least one flow")
    life = max(flows.times)

    path: dict[int, RandomCashFlow] = {}
    for t in range(life + 1):
        if t not in rab_path:
            raise ValueError(f"rab_path is missing time {t}")
        entry = rab_path[t]
        if isinstance(entry, RandomCashFlow):
            if entry.time != t:
                raise ValueError(f"base under key {t} is dated {entry.time}")
            path[t] = entry
        else:
            path[t] = tree.flow(t, {n: float(entry) for n in tree.nodes_at(t)})

    rab0 = path[0].values[tree.root]
    scale = max(1.0, abs(rab0))
    tol = rtol * scale

    if any(abs(v) > tol for v in path[life].values.values()):
        if strict:
            raise PolicyViolationError(f"asset base not exhausted at end of life {life}")

    reset_times = sorted(set(resets)) if resets is not None else list(range(life))
    if not reset_times or reset_times[0] != 0:
        raise ValueError("the policy must reset at time 0")
    if any(t < 0 or t >= life for t in reset_times):
        raise ValueError(f"reset times must lie in [0, {life - 1}]")

    boundaries = reset_times + [life]
    for i, s in enumerate(reset_times):
        nxt = boundaries[i + 1]
        for n in tree.nodes_at(s):
            segment = sum(
                tree.value(flows.get(t), n) for t in range(s + 1, nxt + 1) if flows.get(t)
            )
            segment += tree.value(path[nxt], n)
            gap = abs(segment - path[s].values[n])
            if strict and gap > tol:
                raise PolicyViolationError(
                    f"value condition fails at reset {s}, node {n}: gap {gap:.3e}"
                )

    reset_gaps: dict[int, float] = {}
    for s in reset_times:
        worst = 0.0
        for n in tree.nodes_at(s):
            remaining = sum(
                tree.value(flows.get(t), n) for t in range(s + 1, life + 1) if flows.get(t)
            )
            remaining += tree.value(path[life], n)
            worst = max(worst, abs(remaining - path[s].values[n]))
        reset_gaps[s] = worst

    worst_reset = max(reset_gaps, key=lambda t: reset_gaps[t])
    return NpvCheck(
        npv_residual=reset_gaps[0],
        max_reset_residual=max(reset_gaps.values()),
        worst_reset=worst_reset,
        reset_gaps=reset_gaps,
    )


# -- cash-flow CSV ------------------------------------------------------------


class CashflowCsvError(ValueError):
    """A year/flow CSV file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_cashflow_csv(lines: Iterable[str]) -> list[float]:
    """Parse a ``year,flow`` CSV into a year-ordered flow list.

    Years must run 1..T without gaps.  The final row is understood to carry
    the terminal base inside its flow, but nothing here depends on that.
    """
    reader = csv.reader(lines)
    rows = list(reader)
    if not rows:
        raise CashflowCsvError("file is empty", line=1)
    header = [c.strip().lower() for c in rows[0]]
    if header != ["year", "flow"]:
        raise CashflowCsvError(f"expected header 'year,flow', got {','.join(rows[0])}", line=1)
    flows: list[float] = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise CashflowCsvError(f"expected 2 fields, got {len(row)}", line=i)
        try:
            year = int(row[0].strip())
            amount = float(row[1].strip())
        except ValueError as exc:
            raise CashflowCsvError(str(exc), line=i) from exc
        if year != len(flows) + 1:
            raise CashflowCsvError(
                f"years must run 1..T without gaps; expected {len(flows) + 1}, got {year}",
                line=i,
            )
        if not math.isfinite(amount):
            raise CashflowCsvError(f"non-finite flow {row[1]!r}", line=i)
        flows.append(amount)
    if not flows:
        raise CashflowCsvError("no data rows", line=2)
    return flows
