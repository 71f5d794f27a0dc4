"""Shared tree builders and worked fixtures for the test suite."""

from __future__ import annotations

import random

import pytest

from regval.debt import DebtInstrument, DebtPortfolio
from regval.tree import CashFlowStream, EventTree, RandomCashFlow

# Sibling state prices summing to 1/1.05 with an up-weight chosen so that a
# (1.5, 0.5)-shaped payoff earns a 20% one-period rate.  This makes a binary
# tree whose certain claims grow at 5% while profile-shaped claims price at a
# 20% cost of capital, matching the published five-year illustration.
Q_UP = 5.0 / 14.0
Q_DOWN = 25.0 / 42.0
PROFILE = (1.5, 0.5)


def profile_tree(horizon: int) -> EventTree:
    """Non-recombining binary tree with the 5%/20% calibration per period."""
    return EventTree.uniform(horizon, p=(0.5, 0.5), q=(Q_UP, Q_DOWN))


def profile_flow(tree: EventTree, t: int, mean: float) -> RandomCashFlow:
    """Flow at time ``t`` with expectation ``mean``; risk enters on the last step.

    Each node's amount is the mean scaled by 1.5 after an up-move and 0.5
    after a down-move, so the flow's value seen from any time-(t-1) node is
    mean/1.2 and its earlier values compound at the 5% certain rate.
    """
    amounts = {}
    for i, node in enumerate(tree.nodes_at(t)):
        amounts[node] = mean * PROFILE[i % 2]
    return tree.flow(t, amounts)


TABLE2_RAB = (1000.0, 900.0, 800.0, 700.0, 600.0, 500.0)
TABLE2_ALLOWANCES = (
    1200.0 - 900.0 * (1.2 / 1.05),
    1080.0 - 800.0 * (1.2 / 1.05),
    960.0 - 700.0 * (1.2 / 1.05),
    840.0 - 600.0 * (1.2 / 1.05),
    720.0 - 500.0 * (1.2 / 1.05),
)


@pytest.fixture(scope="session")
def table2_tree() -> EventTree:
    return profile_tree(5)


@pytest.fixture(scope="session")
def table2_flows(table2_tree: EventTree) -> CashFlowStream:
    return CashFlowStream(
        {
            t: profile_flow(table2_tree, t, mean)
            for t, mean in enumerate(TABLE2_ALLOWANCES, start=1)
        }
    )


@pytest.fixture(scope="session")
def table2_terminal(table2_tree: EventTree) -> RandomCashFlow:
    return table2_tree.certain_flow(5, TABLE2_RAB[-1])


# Three-maturity debt fixture: a binary tree a touch above a 4% certain rate,
# with instrument prices pinned at 900/800/700.  The one-year instrument pays
# (1000, 900), giving the worked 950/900 expected-payoff-to-price example.
DEBT_Q = (0.36, 0.6)


@pytest.fixture(scope="session")
def debt_tree() -> EventTree:
    return EventTree.uniform(3, p=(0.5, 0.5), q=DEBT_Q)


@pytest.fixture(scope="session")
def debt_instruments(debt_tree: EventTree) -> dict[int, DebtInstrument]:
    one = DebtInstrument(1, debt_tree.flow(1, {1: 1000.0, 2: 900.0}))

    # constant payoffs solved so the time-0 prices come out at 800 and 700
    per_period = sum(DEBT_Q)
    two = DebtInstrument(2, debt_tree.certain_flow(2, 800.0 / per_period**2))
    three = DebtInstrument(3, debt_tree.certain_flow(3, 700.0 / per_period**3))
    return {1: one, 2: two, 3: three}


@pytest.fixture(scope="session")
def debt_portfolio() -> DebtPortfolio:
    return DebtPortfolio({(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0})


def random_tree(rnd: random.Random, horizon: int | None = None) -> EventTree:
    """Small irregular tree with positive probabilities and state prices."""
    from regval.tree import TreeNode

    depth = horizon if horizon is not None else rnd.randint(2, 4)
    records = [TreeNode(id=0, time=0, parent=None)]
    next_id = 1
    frontier = [0]
    for t in range(1, depth + 1):
        new_frontier = []
        for parent in frontier:
            k = rnd.randint(1, 3)
            weights = [rnd.uniform(0.2, 1.0) for _ in range(k)]
            total = sum(weights)
            for w in weights:
                p = w / total
                q = p * rnd.uniform(0.75, 1.1)
                records.append(TreeNode(id=next_id, time=t, parent=parent, p=p, q=q))
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return EventTree(records)


def random_flow(
    rnd: random.Random,
    tree: EventTree,
    t: int,
    lo: float = -100.0,
    hi: float = 100.0,
) -> RandomCashFlow:
    return tree.flow(t, {n: rnd.uniform(lo, hi) for n in tree.nodes_at(t)})


def random_positive_flow(
    rnd: random.Random, tree: EventTree, t: int, hi: float = 100.0
) -> RandomCashFlow:
    return tree.flow(t, {n: rnd.uniform(1.0, hi) for n in tree.nodes_at(t)})


@pytest.fixture()
def rnd() -> random.Random:
    return random.Random(20260824)
