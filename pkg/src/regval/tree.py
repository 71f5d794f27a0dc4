"""Finite event trees and the valuation functionals defined on them.

An :class:`EventTree` is a finite tree of states indexed by discrete time.
Every non-root node carries the physical probability ``p`` and the one-period
state price ``q`` of the edge leading into it from its parent.  Two linear
functionals are defined on dated payoffs:

* ``expect``  -- expectation under the physical path probabilities, and
* ``value``   -- present value by backward induction over the state prices.

Payoffs are :class:`RandomCashFlow` objects (one amount per node of a given
date) and collections of them form a :class:`CashFlowStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import NonPositiveStatePriceError, TreeStructureError
from .rates import GrossRate

_PROB_TOL = 1e-12


class DocumentError(ValueError):
    """A serialized tree/flow document is malformed."""


@dataclass(frozen=True)
class TreeNode:
    """One node record: identifier, date, parent link and edge data.

    For the root node ``parent`` is ``None`` and ``p``/``q`` are carried as
    1.0 placeholders; they are never used in any computation.
    """

    id: int
    time: int
    parent: int | None
    p: float = 1.0
    q: float = 1.0


@dataclass(frozen=True)
class RandomCashFlow:
    """A dated payoff: one amount for every node at time ``time``."""

    time: int
    values: Mapping[int, float]

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError(f"flow time must be >= 0, got {self.time}")
        vals = dict(self.values)
        for node, amount in vals.items():
            if not math.isfinite(amount):
                raise ValueError(f"non-finite amount {amount!r} at node {node}")
        object.__setattr__(self, "values", vals)

    def amount(self, node: int) -> float:
        return self.values[node]

    def _check_compatible(self, other: "RandomCashFlow") -> None:
        if self.time != other.time:
            raise ValueError(
                f"cannot combine flows at different times {self.time} and {other.time}"
            )
        if set(self.values) != set(other.values):
            raise ValueError("cannot combine flows defined on different node sets")

    def __add__(self, other: "RandomCashFlow") -> "RandomCashFlow":
        self._check_compatible(other)
        return RandomCashFlow(
            self.time, {n: v + other.values[n] for n, v in self.values.items()}
        )

    def __sub__(self, other: "RandomCashFlow") -> "RandomCashFlow":
        self._check_compatible(other)
        return RandomCashFlow(
            self.time, {n: v - other.values[n] for n, v in self.values.items()}
        )

    def __mul__(self, scale: float) -> "RandomCashFlow":
        return RandomCashFlow(self.time, {n: v * scale for n, v in self.values.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "RandomCashFlow":
        return self * -1.0


@dataclass(frozen=True)
class CashFlowStream:
    """A finite collection of dated payoffs, at most one per date, dates >= 1."""

    flows: Mapping[int, RandomCashFlow] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ordered: dict[int, RandomCashFlow] = {}
        for t in sorted(dict(self.flows)):
            flow = self.flows[t]
            if t < 1:
                raise ValueError(f"stream dates must be >= 1, got {t}")
            if flow.time != t:
                raise ValueError(f"flow dated {flow.time} stored under key {t}")
            ordered[t] = flow
        object.__setattr__(self, "flows", ordered)

    @classmethod
    def from_flows(cls, flows: Iterable[RandomCashFlow]) -> "CashFlowStream":
        out: dict[int, RandomCashFlow] = {}
        for flow in flows:
            if flow.time in out:
                raise ValueError(f"duplicate flow at time {flow.time}")
            out[flow.time] = flow
        return cls(out)

    @property
    def times(self) -> tuple[int, ...]:
        return tuple(self.flows)

    def get(self, t: int) -> RandomCashFlow | None:
        return self.flows.get(t)

    def items(self) -> Iterator[tuple[int, RandomCashFlow]]:
        return iter(self.flows.items())

    def __len__(self) -> int:
        return len(self.flows)


class EventTree:
    """A finite event tree with physical probabilities and state prices.

    Nodes are integer ids assigned breadth first (root 0, then each level in
    order), which keeps serialized documents reproducible.  Trees built from
    explicit records accept any unique integer ids as long as the structure
    validates.
    """

    def __init__(self, records: Iterable[TreeNode], horizon: int | None = None):
        nodes = list(records)
        if not nodes:
            raise TreeStructureError("a tree needs at least one node")
        by_id: dict[int, TreeNode] = {}
        for rec in nodes:
            if rec.id in by_id:
                raise TreeStructureError(f"duplicate node id {rec.id}")
            by_id[rec.id] = rec
        roots = [r for r in nodes if r.parent is None]
        if len(roots) != 1:
            raise TreeStructureError(f"expected exactly one root, found {len(roots)}")
        root = roots[0]
        if root.time != 0:
            raise TreeStructureError(f"root must sit at time 0, got {root.time}")

        children: dict[int, list[int]] = {r.id: [] for r in nodes}
        for rec in nodes:
            if rec.parent is None:
                continue
            if rec.parent not in by_id:
                raise TreeStructureError(f"node {rec.id} has unknown parent {rec.parent}")
            if rec.time != by_id[rec.parent].time + 1:
                raise TreeStructureError(
                    f"node {rec.id} at time {rec.time} under parent at time "
                    f"{by_id[rec.parent].time}"
                )
            if not (math.isfinite(rec.p) and rec.p > 0.0):
                raise TreeStructureError(f"edge probability into node {rec.id} must be > 0")
            if not (math.isfinite(rec.q) and rec.q > 0.0):
                raise NonPositiveStatePriceError(
                    f"state price into node {rec.id} must be > 0, got {rec.q}"
                )
            children[rec.parent].append(rec.id)

        for rec in nodes:
            kids = children[rec.id]
            if kids:
                total = sum(by_id[c].p for c in kids)
                if abs(total - 1.0) > _PROB_TOL:
                    raise TreeStructureError(
                        f"probabilities under node {rec.id} sum to {total!r}, not 1"
                    )

        max_time = max(r.time for r in nodes)
        if horizon is not None and horizon != max_time:
            raise TreeStructureError(
                f"declared horizon {horizon} but deepest node sits at {max_time}"
            )
        for rec in nodes:
            if rec.time < max_time and not children[rec.id]:
                raise TreeStructureError(
                    f"node {rec.id} at time {rec.time} has no successor before the horizon"
                )

        self._by_id = by_id
        self._children = {n: tuple(kids) for n, kids in children.items()}
        self._root = root.id
        self._horizon = max_time
        levels: dict[int, list[int]] = {}
        for rec in sorted(nodes, key=lambda r: r.id):
            levels.setdefault(rec.time, []).append(rec.id)
        self._levels = {t: tuple(ids) for t, ids in levels.items()}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def one_period(cls, p: Sequence[float], q: Sequence[float]) -> "EventTree":
        """Root plus one layer of children with the given edge data."""
        if len(p) != len(q) or not p:
            raise TreeStructureError("need matching, nonempty p and q sequences")
        records = [TreeNode(0, 0, None)]
        records += [
            TreeNode(i + 1, 1, 0, float(pi), float(qi))
            for i, (pi, qi) in enumerate(zip(p, q))
        ]
        return cls(records)

    @classmethod
    def certainty_chain(cls, q_per_period: Sequence[float]) -> "EventTree":
        """A degenerate single-path tree; ``q_per_period[t]`` prices period t+1."""
        records = [TreeNode(0, 0, None)]
        for t, qt in enumerate(q_per_period):
            records.append(TreeNode(t + 1, t + 1, t, 1.0, float(qt)))
        return cls(records)

    @classmethod
    def uniform(cls, horizon: int, p: Sequence[float], q: Sequence[float]) -> "EventTree":
        """Non-recombining tree with identical branching on every edge set."""
        if horizon < 1:
            raise TreeStructureError("horizon must be >= 1")
        if len(p) != len(q) or not p:
            raise TreeStructureError("need matching, nonempty p and q sequences")
        records = [TreeNode(0, 0, None)]
        frontier = [0]
        next_id = 1
        for t in range(1, horizon + 1):
            new_frontier = []
            for parent in frontier:
                for pi, qi in zip(p, q):
                    records.append(TreeNode(next_id, t, parent, float(pi), float(qi)))
                    new_frontier.append(next_id)
                    next_id += 1
            frontier = new_frontier
        return cls(records)

    # -- structure accessors --------------------------------------------------

    @property
    def horizon(self) -> int:
        return self._horizon

    @property
    def root(self) -> int:
        return self._root

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self._by_id))

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, node: int) -> bool:
        return node in self._by_id

    def _node(self, node: int) -> TreeNode:
        try:
            return self._by_id[node]
        except KeyError:
            raise TreeStructureError(f"unknown node id {node}") from None

    def time(self, node: int) -> int:
        return self._node(node).time

    def parent(self, node: int) -> int | None:
        return self._node(node).parent

    def children(self, node: int) -> tuple[int, ...]:
        self._node(node)
        return self._children[node]

    def nodes_at(self, t: int) -> tuple[int, ...]:
        if t not in self._levels:
            raise TreeStructureError(f"no nodes at time {t} (horizon {self._horizon})")
        return self._levels[t]

    def edge_probability(self, node: int) -> float:
        rec = self._node(node)
        if rec.parent is None:
            raise TreeStructureError("the root has no incoming edge")
        return rec.p

    def state_price(self, node: int) -> float:
        rec = self._node(node)
        if rec.parent is None:
            raise TreeStructureError("the root has no incoming edge")
        return rec.q

    def kernel(self, node: int) -> float:
        """One-period pricing kernel q/p on the edge into ``node`` (read only)."""
        rec = self._node(node)
        if rec.parent is None:
            raise TreeStructureError("the root has no incoming edge")
        return rec.q / rec.p

    def ancestor_at(self, node: int, t: int) -> int:
        """The unique ancestor of ``node`` living at time ``t``."""
        rec = self._node(node)
        if t > rec.time or t < 0:
            raise TreeStructureError(f"node {node} at time {rec.time} has no ancestor at {t}")
        cur = rec
        while cur.time > t:
            cur = self._by_id[cur.parent]  # type: ignore[index]
        return cur.id

    def path_probability(self, node: int, origin: int | None = None) -> float:
        """Product of edge probabilities from ``origin`` (default root) down to ``node``."""
        start = self._root if origin is None else origin
        self._node(start)
        prob = 1.0
        cur = self._node(node)
        while cur.id != start:
            if cur.parent is None:
                raise TreeStructureError(f"node {node} does not descend from {start}")
            prob *= cur.p
            cur = self._by_id[cur.parent]
        return prob

    # -- payoffs --------------------------------------------------------------

    def flow(self, time: int, values: Mapping[int, float] | Sequence[float]) -> RandomCashFlow:
        """Build a payoff at ``time``, validating full node coverage.

        ``values`` is either a mapping from node id to amount or a plain
        sequence listed in ``nodes_at(time)`` order.
        """
        level = self.nodes_at(time)
        if isinstance(values, Mapping):
            given = dict(values)
        else:
            if len(values) != len(level):
                raise ValueError(
                    f"expected {len(level)} amounts at time {time}, got {len(values)}"
                )
            given = dict(zip(level, values))
        missing = set(level) - set(given)
        extra = set(given) - set(level)
        if missing or extra:
            raise ValueError(
                f"flow at time {time} must cover exactly the nodes at that time "
                f"(missing {sorted(missing)}, extraneous {sorted(extra)})"
            )
        return RandomCashFlow(time, {n: float(given[n]) for n in level})

    def certain_flow(self, time: int, amount: float) -> RandomCashFlow:
        return self.flow(time, {n: float(amount) for n in self.nodes_at(time)})

    def _check_flow(self, x: RandomCashFlow) -> None:
        level = self.nodes_at(x.time)
        if set(x.values) != set(level):
            raise ValueError(
                f"flow at time {x.time} does not match this tree's nodes at that time"
            )

    # -- functionals ----------------------------------------------------------

    def _backward(self, x: RandomCashFlow, to_time: int, use_prices: bool) -> dict[int, float]:
        """Roll a dated payoff back to ``to_time`` under q (prices) or p (probabilities)."""
        self._check_flow(x)
        if to_time > x.time or to_time < 0:
            raise ValueError(f"cannot roll a time-{x.time} payoff back to time {to_time}")
        current = dict(x.values)
        for t in range(x.time - 1, to_time - 1, -1):
            nxt: dict[int, float] = {}
            for n in self._levels[t]:
                total = 0.0
                for c in self._children[n]:
                    rec = self._by_id[c]
                    w = rec.q if use_prices else rec.p
                    total += w * current[c]
                nxt[n] = total
            current = nxt
        return current

    def expect(self, x: RandomCashFlow, at: int | None = None) -> float:
        """Conditional expectation of ``x`` seen from node ``at`` (default root)."""
        node = self._root if at is None else at
        rec = self._node(node)
        return self._backward(x, rec.time, use_prices=False)[node]

    def expected_at(self, x: RandomCashFlow, t: int) -> RandomCashFlow:
        """The conditional expectation of ``x`` as a payoff dated ``t``."""
        return RandomCashFlow(t, self._backward(x, t, use_prices=False))

    def value(self, x: RandomCashFlow, at: int | None = None) -> float:
        """Present value of ``x`` at node ``at`` (default root) by backward induction."""
        node = self._root if at is None else at
        rec = self._node(node)
        return self._backward(x, rec.time, use_prices=True)[node]

    def value_at(self, x: RandomCashFlow, t: int) -> RandomCashFlow:
        """The price process of ``x`` at time ``t``, as a payoff dated ``t``."""
        return RandomCashFlow(t, self._backward(x, t, use_prices=True))

    def value_stream(self, stream: CashFlowStream, at: int | None = None) -> float:
        """Value of a stream: the sum of the values of its dated payoffs."""
        node = self._root if at is None else at
        rec = self._node(node)
        total = 0.0
        for t, flow in stream.items():
            if t < rec.time:
                raise ValueError(
                    f"stream has a flow at {t} before the valuation node's time {rec.time}"
                )
            total += self.value(flow, node)
        return total

    def truncate_with_terminal(self, stream: CashFlowStream, cutoff: int) -> CashFlowStream:
        """Drop flows after ``cutoff`` and fold their time-``cutoff`` value in.

        The replacement terminal amount is added to whatever the stream pays
        at ``cutoff``, node by node, so the stream's value from any node at or
        before ``cutoff`` is unchanged.
        """
        if cutoff < 1 or cutoff > self._horizon:
            raise ValueError(f"cutoff must lie in [1, {self._horizon}], got {cutoff}")
        head = {t: f for t, f in stream.items() if t < cutoff}
        tail = [f for t, f in stream.items() if t > cutoff]
        at_cut = stream.get(cutoff)
        if tail:
            terminal = self.certain_flow(cutoff, 0.0)
            for f in tail:
                terminal = terminal + self.value_at(f, cutoff)
            at_cut = terminal if at_cut is None else at_cut + terminal
        if at_cut is not None:
            head[cutoff] = at_cut
        return CashFlowStream(head)

    def risk_free_rate(self, t: int, at: int | None = None) -> GrossRate:
        """Gross risk-free rate from node ``at`` (default root) to time ``t``."""
        node = self._root if at is None else at
        price = self.value(self.certain_flow(t, 1.0), node)
        return GrossRate(1.0 / price)

    # -- serialization --------------------------------------------------------

    def to_records(self) -> list[TreeNode]:
        return [self._by_id[n] for n in sorted(self._by_id)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventTree):
            return NotImplemented
        return self.to_records() == other.to_records()

    def __repr__(self) -> str:
        return f"EventTree(horizon={self._horizon}, nodes={len(self._by_id)})"


def build_document(tree: EventTree, stream: CashFlowStream | None = None) -> dict:
    """Serialize a tree and optional stream to a plain JSON-ready dict."""
    nodes = [
        {"id": rec.id, "time": rec.time, "parent": rec.parent, "p": rec.p, "q": rec.q}
        for rec in tree.to_records()
    ]
    flows: dict[str, dict[str, float]] = {}
    if stream is not None:
        for t, flow in stream.items():
            flows[str(t)] = {str(n): flow.values[n] for n in sorted(flow.values)}
    return {"horizon": tree.horizon, "nodes": nodes, "flows": flows}


def parse_document(doc: object) -> tuple[EventTree, CashFlowStream]:
    """Parse a tree/flows document produced by :func:`build_document`."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    for key in ("horizon", "nodes"):
        if key not in doc:
            raise DocumentError(f"document is missing the {key!r} field")
    raw_nodes = doc["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise DocumentError("'nodes' must be a nonempty list")
    records = []
    for i, entry in enumerate(raw_nodes):
        if not isinstance(entry, dict):
            raise DocumentError(f"node entry {i} is not an object")
        try:
            records.append(
                TreeNode(
                    id=int(entry["id"]),
                    time=int(entry["time"]),
                    parent=None if entry["parent"] is None else int(entry["parent"]),
                    p=float(entry.get("p", 1.0)),
                    q=float(entry.get("q", 1.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"node entry {i} is malformed: {exc}") from exc
    try:
        horizon = int(doc["horizon"])
        tree = EventTree(records, horizon=horizon)
    except (TreeStructureError, NonPositiveStatePriceError, TypeError, ValueError) as exc:
        raise DocumentError(f"invalid tree: {exc}") from exc

    flows: dict[int, RandomCashFlow] = {}
    raw_flows = doc.get("flows", {})
    if not isinstance(raw_flows, dict):
        raise DocumentError("'flows' must be an object keyed by time")
    for t_key, mapping in raw_flows.items():
        try:
            t = int(t_key)
        except (TypeError, ValueError):
            raise DocumentError(f"flow key {t_key!r} is not a time") from None
        if not isinstance(mapping, dict):
            raise DocumentError(f"flow at time {t_key} must map node ids to amounts")
        try:
            values = {int(n): float(v) for n, v in mapping.items()}
            flows[t] = tree.flow(t, values)
        except (TreeStructureError, TypeError, ValueError) as exc:
            raise DocumentError(f"invalid flow at time {t_key}: {exc}") from exc
    return tree, CashFlowStream(flows)
