"""Event-tree construction, expectation/value functionals, and serialization."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regval.errors import NonPositiveStatePriceError, TreeStructureError
from regval.tree import (
    CashFlowStream,
    DocumentError,
    EventTree,
    RandomCashFlow,
    TreeNode,
    build_document,
    parse_document,
)

from conftest import random_flow, random_tree


def two_state(p=(0.5, 0.5), q=(0.6, 0.35)) -> EventTree:
    return EventTree.one_period(p, q)


class TestConstruction:
    def test_single_root_required(self):
        records = [
            TreeNode(0, 0, None),
            TreeNode(1, 0, None),
        ]
        with pytest.raises(TreeStructureError, match="root"):
            EventTree(records)

    def test_duplicate_ids_rejected(self):
        records = [TreeNode(0, 0, None), TreeNode(0, 1, 0)]
        with pytest.raises(TreeStructureError, match="duplicate"):
            EventTree(records)

    def test_child_time_must_increment(self):
        records = [TreeNode(0, 0, None), TreeNode(1, 2, 0)]
        with pytest.raises(TreeStructureError):
            EventTree(records)

    def test_unknown_parent_rejected(self):
        records = [TreeNode(0, 0, None), TreeNode(1, 1, 7)]
        with pytest.raises(TreeStructureError):
            EventTree(records)

    def test_sibling_probabilities_must_sum_to_one(self):
        with pytest.raises(TreeStructureError, match="sum"):
            EventTree.one_period((0.5, 0.6), (0.5, 0.5))

    def test_state_prices_must_be_positive(self):
        with pytest.raises(NonPositiveStatePriceError):
            EventTree.one_period((0.5, 0.5), (0.5, 0.0))

    def test_childless_interior_node_rejected(self):
        records = [
            TreeNode(0, 0, None),
            TreeNode(1, 1, 0, p=0.5, q=0.5),
            TreeNode(2, 1, 0, p=0.5, q=0.5),
            TreeNode(3, 2, 1, p=1.0, q=0.9),
        ]
        with pytest.raises(TreeStructureError, match="no successor"):
            EventTree(records)

    def test_horizon_mismatch_rejected(self):
        records = [TreeNode(0, 0, None), TreeNode(1, 1, 0)]
        with pytest.raises(TreeStructureError, match="horizon"):
            EventTree(records, horizon=3)

    def test_accessors(self):
        tree = two_state()
        assert tree.horizon == 1
        assert tree.root == 0
        assert tree.nodes_at(1) == (1, 2)
        assert tree.parent(1) == 0
        assert tree.children(0) == (1, 2)
        assert tree.edge_probability(2) == 0.5
        assert tree.state_price(2) == 0.35
        assert tree.kernel(2) == pytest.approx(0.7)
        assert 2 in tree and 9 not in tree

    def test_uniform_builder_is_breadth_first(self):
        tree = EventTree.uniform(2, (0.5, 0.5), (0.4, 0.5))
        assert tree.nodes_at(0) == (0,)
        assert tree.nodes_at(1) == (1, 2)
        assert tree.nodes_at(2) == (3, 4, 5, 6)
        assert tree.parent(5) == 2

    def test_path_probability_multiplies_edges(self):
        tree = EventTree.uniform(3, (0.4, 0.6), (0.4, 0.5))
        deep = tree.nodes_at(3)[0]
        assert tree.path_probability(deep) == pytest.approx(0.4**3)
        assert tree.path_probability(deep, origin=tree.ancestor_at(deep, 1)) == pytest.approx(0.4**2)


class TestFlows:
    def test_flow_requires_full_node_coverage(self):
        tree = two_state()
        with pytest.raises(ValueError, match="cover exactly"):
            tree.flow(1, {1: 100.0})

    def test_flow_from_sequence(self):
        tree = two_state()
        x = tree.flow(1, [100.0, 300.0])
        assert x.values == {1: 100.0, 2: 300.0}

    def test_arithmetic(self):
        tree = two_state()
        x = tree.flow(1, [100.0, 300.0])
        y = tree.flow(1, [1.0, 2.0])
        assert (x + y).values == {1: 101.0, 2: 302.0}
        assert (x - y).values == {1: 99.0, 2: 298.0}
        assert (2.0 * x).values == {1: 200.0, 2: 600.0}
        assert (-x).values == {1: -100.0, 2: -300.0}

    def test_incompatible_flows_rejected(self):
        tree = two_state()
        chain = EventTree.certainty_chain([0.95, 0.95])
        x = tree.flow(1, [100.0, 300.0])
        with pytest.raises(ValueError):
            x + chain.flow(2, {2: 5.0})

    def test_non_finite_amount_rejected(self):
        with pytest.raises(ValueError):
            RandomCashFlow(1, {1: float("nan")})

    def test_stream_keys_must_match_flow_times(self):
        tree = two_state()
        with pytest.raises(ValueError):
            CashFlowStream({2: tree.flow(1, [1.0, 2.0])})


class TestExpect:
    def test_symmetric_mean(self):
        tree = two_state()
        assert tree.expect(tree.flow(1, [100.0, 300.0])) == pytest.approx(200.0)

    def test_certainty_single_child(self):
        chain = EventTree.certainty_chain([0.9])
        assert chain.expect(chain.flow(1, {1: 42.0})) == 42.0

    def test_three_period_path_enumeration(self):
        tree = EventTree.uniform(3, (0.4, 0.6), (0.4, 0.5))
        x = tree.flow(3, {n: float(n) for n in tree.nodes_at(3)})
        expected = 0.0
        for n in tree.nodes_at(3):
            prob = 1.0
            walk = n
            while walk != tree.root:
                prob *= tree.edge_probability(walk)
                walk = tree.parent(walk)
            expected += prob * n
        assert tree.expect(x) == pytest.approx(expected, rel=1e-14)

    def test_conditional_expectation_at_interior_node(self):
        tree = EventTree.uniform(2, (0.4, 0.6), (0.4, 0.5))
        x = tree.flow(2, [10.0, 20.0, 30.0, 40.0])
        at = tree.nodes_at(1)[1]
        assert tree.expect(x, at) == pytest.approx(0.4 * 30 + 0.6 * 40)

    def test_time_ordering_violated(self):
        tree = EventTree.uniform(2, (0.5, 0.5), (0.4, 0.5))
        x = tree.flow(1, [10.0, 20.0])
        with pytest.raises(ValueError):
            tree.expect(x, at=tree.nodes_at(2)[0])


class TestValue:
    def test_two_state_sum(self):
        tree = two_state()
        x = tree.flow(1, [100.0, 300.0])
        assert tree.value(x) == pytest.approx(0.6 * 100 + 0.35 * 300)

    def test_certain_flow_discounts_at_state_price_sum(self):
        tree = two_state(q=(0.6, 0.35))
        a = tree.certain_flow(1, 50.0)
        assert tree.value(a) == pytest.approx(0.95 * 50.0)
        assert tree.risk_free_rate(1).gross == pytest.approx(1 / 0.95)

    def test_value_at_own_time_is_the_payoff(self):
        tree = two_state()
        x = tree.flow(1, [100.0, 300.0])
        held = tree.value_at(x, 1)
        assert held.values == x.values

    def test_recursion_through_interim_values(self):
        tree = EventTree.uniform(2, (0.5, 0.5), (0.45, 0.5))
        x = tree.flow(2, [5.0, -2.0, 7.0, 11.0])
        interim = tree.value_at(x, 1)
        assert tree.value(interim) == pytest.approx(tree.value(x), rel=1e-14)

    def test_value_stream_sums_per_flow_values(self):
        chain = EventTree.certainty_chain([1 / 1.05, 1 / 1.05])
        stream = CashFlowStream(
            {1: chain.certain_flow(1, 100.0), 2: chain.certain_flow(2, 100.0)}
        )
        assert chain.value_stream(stream) == pytest.approx(100 / 1.05 + 100 / 1.05**2)
        assert chain.value_stream(stream) == pytest.approx(185.94, abs=0.005)

    def test_empty_stream_is_worth_zero(self):
        chain = EventTree.certainty_chain([0.9])
        assert chain.value_stream(CashFlowStream({})) == 0.0

    def test_single_flow_stream_matches_value(self):
        tree = two_state()
        x = tree.flow(1, [100.0, 300.0])
        assert tree.value_stream(CashFlowStream({1: x})) == tree.value(x)


class TestRiskFree:
    def test_five_periods_compound(self):
        chain = EventTree.certainty_chain([1 / 1.05] * 5)
        assert chain.risk_free_rate(1).gross == pytest.approx(1.05)
        assert chain.risk_free_rate(5).gross == pytest.approx(1.05**5)
        assert chain.risk_free_rate(5).gross == pytest.approx(1.27628, abs=5e-6)

    def test_unit_state_price_sum_gives_unit_rate(self):
        tree = two_state(q=(0.5, 0.5))
        assert tree.risk_free_rate(1).gross == pytest.approx(1.0)


class TestTruncation:
    def build(self):
        tree = EventTree.uniform(3, (0.5, 0.5), (0.45, 0.5))
        rnd = random.Random(7)
        stream = CashFlowStream(
            {t: random_flow(rnd, tree, t) for t in (1, 2, 3)}
        )
        return tree, stream

    def test_truncate_to_first_period(self):
        tree, stream = self.build()
        cut = tree.truncate_with_terminal(stream, 1)
        assert cut.times == (1,)
        assert tree.value_stream(cut) == pytest.approx(tree.value_stream(stream), rel=1e-12)

    def test_truncate_at_last_time_is_identity(self):
        tree, stream = self.build()
        cut = tree.truncate_with_terminal(stream, 3)
        assert cut.times == stream.times
        for t in cut.times:
            assert cut.get(t).values == stream.get(t).values

    def test_every_cutoff_preserves_value(self):
        tree, stream = self.build()
        for cutoff in (1, 2, 3):
            cut = tree.truncate_with_terminal(stream, cutoff)
            assert tree.value_stream(cut) == pytest.approx(
                tree.value_stream(stream), rel=1e-12
            )

    def test_cutoff_beyond_horizon_rejected(self):
        tree, stream = self.build()
        with pytest.raises(ValueError):
            tree.truncate_with_terminal(stream, 4)


class TestRandomizedProperties:
    def test_linearity_on_random_trees(self):
        rnd = random.Random(101)
        for _ in range(100):
            tree = random_tree(rnd)
            t = rnd.randint(1, tree.horizon)
            x = random_flow(rnd, tree, t)
            y = random_flow(rnd, tree, t)
            a, b = rnd.uniform(-3, 3), rnd.uniform(-3, 3)
            combo = a * x + b * y
            lhs = tree.value(combo)
            rhs = a * tree.value(x) + b * tree.value(y)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
            assert tree.expect(combo) == pytest.approx(
                a * tree.expect(x) + b * tree.expect(y), rel=1e-10, abs=1e-10
            )

    def test_recursion_on_random_trees(self):
        rnd = random.Random(202)
        for _ in range(100):
            tree = random_tree(rnd)
            t = tree.horizon
            x = random_flow(rnd, tree, t)
            direct = tree.value(x)
            for s in range(1, t):
                assert tree.value(tree.value_at(x, s)) == pytest.approx(
                    direct, rel=1e-10, abs=1e-10
                )

    def test_truncation_preserves_stream_value_on_random_trees(self):
        rnd = random.Random(303)
        for _ in range(100):
            tree = random_tree(rnd)
            stream = CashFlowStream(
                {t: random_flow(rnd, tree, t) for t in range(1, tree.horizon + 1)}
            )
            reference = tree.value_stream(stream)
            for cutoff in range(1, tree.horizon + 1):
                cut = tree.truncate_with_terminal(stream, cutoff)
                assert tree.value_stream(cut) == pytest.approx(
                    reference, rel=1e-10, abs=1e-10
                )

    @given(
        amounts=st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=4,
            max_size=4,
        ),
        scale=st.floats(min_value=-50, max_value=50, allow_nan=False),
    )
    @settings(max_examples=100)
    def test_value_scales_linearly(self, amounts, scale):
        tree = EventTree.uniform(2, (0.5, 0.5), (0.45, 0.5))
        x = tree.flow(2, amounts)
        assert tree.value(scale * x) == pytest.approx(
            scale * tree.value(x), rel=1e-10, abs=1e-9
        )


class TestDocuments:
    def test_round_trip(self):
        tree = EventTree.uniform(2, (0.4, 0.6), (0.4, 0.5))
        stream = CashFlowStream(
            {1: tree.flow(1, [10.0, 20.0]), 2: tree.flow(2, [1.0, 2.0, 3.0, 4.0])}
        )
        doc = build_document(tree, stream)
        back_tree, back_stream = parse_document(doc)
        assert back_tree == tree
        for t in stream.times:
            assert back_stream.get(t).values == stream.get(t).values

    def test_document_field_names(self):
        tree = two_state()
        doc = build_document(tree)
        assert set(doc) == {"horizon", "nodes", "flows"}
        assert set(doc["nodes"][0]) == {"id", "time", "parent", "p", "q"}

    def test_missing_fields_reported(self):
        with pytest.raises(DocumentError, match="horizon"):
            parse_document({"nodes": []})

    def test_bad_node_entry_reported_with_index(self):
        doc = {"horizon": 1, "nodes": [{"id": 0, "time": 0, "parent": None}, {"oops": 1}]}
        with pytest.raises(DocumentError, match="entry 1"):
            parse_document(doc)

    def test_bad_flow_time_reported(self):
        tree = two_state()
        doc = build_document(tree)
        doc["flows"] = {"not-a-time": {}}
        with pytest.raises(DocumentError, match="not-a-time"):
            parse_document(doc)

    def test_invalid_tree_shape_reported(self):
        doc = {"horizon": 1, "nodes": [{"id": 0, "time": 0, "parent": None, "p": 1, "q": 1},
                                       {"id": 1, "time": 1, "parent": 0, "p": 0.5, "q": 0.4}]}
        with pytest.raises(DocumentError, match="invalid tree"):
            parse_document(doc)


def test_kernel_is_state_price_over_probability():
    tree = EventTree.one_period((0.25, 0.75), (0.5, 0.45))
    assert tree.kernel(1) == pytest.approx(0.5 / 0.25)
    assert tree.kernel(2) == pytest.approx(0.45 / 0.75)


def test_expected_at_gives_node_wise_conditionals():
    tree = EventTree.uniform(2, (0.3, 0.7), (0.3, 0.6))
    x = tree.flow(2, [1.0, 2.0, 3.0, 4.0])
    conditional = tree.expected_at(x, 1)
    assert conditional.time == 1
    assert conditional.values[tree.nodes_at(1)[0]] == pytest.approx(0.3 * 1 + 0.7 * 2)
