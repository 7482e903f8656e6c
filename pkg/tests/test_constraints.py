import math
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from robsub.constraints import (
    CardinalityLower,
    CardinalityUpper,
    CoveringFamily,
    GraphSpec,
    Knapsacks,
    PerfectMatching,
    SpanningTree,
    STCut,
    STPath,
    VertexCover,
    constraint_from_dict,
    contains_feasible_subset,
    covering_polytope,
    get,
    is_feasible,
    min_modular,
)
from robsub.errors import (
    InfeasibleError,
    InstanceFormatError,
    UnsupportedError,
    ValidationError,
)
from robsub.instances import make_rng, random_bipartite_graph, random_connected_graph
from robsub.oracle import enumerate_feasible

TRIANGLE = GraphSpec(3, ((0, 1), (1, 2), (0, 2)))


class TestCardinality(unittest.TestCase):

    def test_lower_bound_picks_cheapest(self):
        """The k cheapest elements, ties by id."""
        C = CardinalityLower(4, 2)
        self.assertEqual(min_modular(C, (3, 1, 2, 0)), frozenset({1, 3}))
        self.assertEqual(min_modular(C, (1, 1, 1, 1)), frozenset({0, 1}))
        self.assertTrue(is_feasible(C, {0, 1, 2}))
        self.assertFalse(is_feasible(C, {0}))

    def test_lower_bound_infeasible(self):
        """k larger than the ground set admits no set."""
        with self.assertRaises(InfeasibleError):
            CardinalityLower(3, 4)

    def test_lower_bound_covering(self):
        """One covering constraint on V with demand k."""
        covering = CardinalityLower(4, 2).covering()
        self.assertEqual(covering.constraints, ((frozenset(range(4)), 2),))
        self.assertEqual(covering.factor, 3)
        self.assertEqual(CardinalityLower(4, 0).covering().constraints, ())

    def test_upper_bound(self):
        """The empty set is the cheapest set of at most k elements."""
        C = CardinalityUpper(4, 2)
        self.assertEqual(min_modular(C, (1, 2, 3, 4)), frozenset())
        self.assertFalse(is_feasible(C, {0, 1, 2}))
        with self.assertRaises(UnsupportedError):
            covering_polytope(C)

    def test_negative_weights(self):
        """Modular costs must be nonnegative and one per element."""
        C = CardinalityLower(3, 1)
        with self.assertRaises(ValidationError):
            min_modular(C, (1, -1, 0))
        with self.assertRaises(ValidationError):
            min_modular(C, (1, 1))


class TestKnapsacks(unittest.TestCase):

    def test_membership(self):
        """Every knapsack must hold."""
        C = Knapsacks((((1, 2, 3), 3), ((3, 0, 0), 3)))
        self.assertEqual(C.n, 3)
        self.assertTrue(is_feasible(C, {0, 1}))
        self.assertFalse(is_feasible(C, {2, 1}))
        self.assertEqual(min_modular(C, (1, 1, 1)), frozenset())

    def test_ragged_weights(self):
        """All knapsacks need the same number of weights."""
        with self.assertRaises(ValidationError):
            Knapsacks((((1, 2), 3), ((1,), 3)))


class TestGraphFamilies(unittest.TestCase):

    def test_spanning_tree(self):
        """Kruskal picks the two cheapest edges of a triangle."""
        C = SpanningTree(TRIANGLE)
        self.assertEqual(C.n, 3)
        self.assertEqual(min_modular(C, (1, 2, 3)), frozenset({0, 1}))
        self.assertTrue(is_feasible(C, {0, 2}))
        self.assertFalse(is_feasible(C, {0}))
        self.assertTrue(contains_feasible_subset(C, {0, 1, 2}))
        self.assertFalse(contains_feasible_subset(C, {1}))

    def test_spanning_tree_disconnected(self):
        """A disconnected graph has no spanning tree."""
        with self.assertRaises(InfeasibleError):
            SpanningTree(GraphSpec(3, ((0, 1),)))

    def test_shortest_path(self):
        """Dijkstra on a diamond with a costly shortcut."""
        graph = GraphSpec(
            4, ((0, 1), (1, 3), (0, 2), (2, 3), (0, 3)), source=0, target=3
        )
        C = STPath(graph)
        self.assertEqual(min_modular(C, (1, 1, 2, 2, 5)), frozenset({0, 1}))
        self.assertEqual(min_modular(C, (5, 5, 2, 2, 3)), frozenset({4}))
        self.assertTrue(is_feasible(C, {0, 1}))
        self.assertFalse(is_feasible(C, {0, 1, 4}))
        self.assertFalse(is_feasible(C, {0}))
        self.assertTrue(contains_feasible_subset(C, {0, 1, 2}))

    def test_directed_path(self):
        """Directed edges are only traversed forwards."""
        graph = GraphSpec(3, ((0, 1), (1, 2), (2, 0)), directed=True, source=0, target=2)
        C = STPath(graph)
        self.assertEqual(min_modular(C, (1, 1, 1)), frozenset({0, 1}))
        self.assertFalse(is_feasible(C, {2}))
        with self.assertRaises(InfeasibleError):
            STPath(GraphSpec(3, ((0, 1), (2, 1)), directed=True, source=0, target=2))

    def test_path_needs_terminals(self):
        """Source and target are required and distinct."""
        with self.assertRaises(ValidationError):
            STPath(TRIANGLE)

    def test_perfect_matching(self):
        """The assignment solver picks the cheap diagonal."""
        graph = GraphSpec(4, ((0, 2), (0, 3), (1, 2), (1, 3)), left=(0, 1))
        C = PerfectMatching(graph)
        self.assertEqual(min_modular(C, (1, 5, 5, 1)), frozenset({0, 3}))
        self.assertTrue(is_feasible(C, {1, 2}))
        self.assertFalse(is_feasible(C, {0, 2}))
        self.assertTrue(contains_feasible_subset(C, {0, 2, 3}))
        self.assertFalse(contains_feasible_subset(C, {0, 1}))

    def test_no_perfect_matching(self):
        """Two left vertices sharing their only neighbour cannot be matched."""
        with self.assertRaises(InfeasibleError):
            PerfectMatching(GraphSpec(4, ((0, 2), (1, 2)), left=(0, 1)))

    def test_minimum_cut(self):
        """The cheaper edge of a path separates its ends."""
        graph = GraphSpec(3, ((0, 1), (1, 2)), source=0, target=2)
        C = STCut(graph)
        self.assertEqual(min_modular(C, (3, 1)), frozenset({1}))
        self.assertTrue(is_feasible(C, {0}))
        self.assertFalse(is_feasible(C, ()))

    def test_vertex_cover(self):
        """Vertices are the ground set and every edge must be touched."""
        C = VertexCover(TRIANGLE)
        self.assertEqual(C.alpha, 2.0)
        self.assertEqual(min_modular(C, (1, 1, 1)), frozenset({0, 1}))
        self.assertTrue(is_feasible(C, {1, 2}))
        self.assertFalse(is_feasible(C, {1}))
        covering = C.covering()
        self.assertEqual(len(covering.constraints), 3)
        self.assertEqual(covering.factor, 2)

    def test_vertex_cover_prunes(self):
        """A star is covered by its centre alone."""
        C = VertexCover(GraphSpec(4, ((0, 1), (0, 2), (0, 3))))
        self.assertEqual(min_modular(C, (1, 1, 1, 1)), frozenset({0}))

    def test_vertex_cover_self_loop(self):
        """A self-loop forces its vertex into every cover."""
        C = VertexCover(GraphSpec(3, ((0, 1), (2, 2))))
        covering = C.covering()
        self.assertIn((frozenset({2}), 1), covering.constraints)
        self.assertEqual(len(covering.constraints), 2)
        self.assertFalse(C.is_feasible({0, 1}))
        self.assertEqual(min_modular(C, (1, 1, 5)), frozenset({1, 2}))


class TestCoveringFamily(unittest.TestCase):

    def test_demands_in_range(self):
        """Demands lie in 1..|W|."""
        with self.assertRaises(ValidationError):
            CoveringFamily(3, ((frozenset({0, 1}), 3),))
        with self.assertRaises(ValidationError):
            CoveringFamily(3, ((frozenset({0, 4}), 1),))

    def test_contains(self):
        """Membership checks the box and every covering constraint."""
        covering = CoveringFamily(3, ((frozenset({0, 1}), 1), (frozenset({1, 2}), 1)))
        self.assertTrue(covering.contains([0.5, 0.5, 0.5]))
        self.assertFalse(covering.contains([1.0, 0.0, 0.0]))
        self.assertAlmostEqual(covering.max_violation([1.0, 0.0, 0.0]), 1.0)

    def test_user_family_size(self):
        """A supplied description must live on the same ground set."""
        C = CardinalityLower(3, 1)
        with self.assertRaises(ValidationError):
            covering_polytope(C, CoveringFamily(2, ()))
        user = CoveringFamily(3, ((frozenset({0, 1, 2}), 1),))
        self.assertIs(covering_polytope(C, user), user)


class TestConstraintRegistry(unittest.TestCase):

    def test_get(self):
        """Families are retrieved by name."""
        self.assertIs(get("vertex_cover"), VertexCover)
        with self.assertRaises(KeyError) as context:
            get("matroid")
        self.assertIn("Constraint family matroid not found.", str(context.exception))

    def test_dictionary_form(self):
        """Families parse back from their dictionary form."""
        for C in (
            CardinalityLower(4, 2),
            Knapsacks((((1, 2), 3),)),
            STCut(GraphSpec(3, ((0, 1), (1, 2)), source=0, target=2)),
        ):
            self.assertEqual(constraint_from_dict(C.to_dict()), C)

    def test_unknown_kind(self):
        """Unknown kinds are format errors naming the field."""
        with self.assertRaises(InstanceFormatError) as context:
            constraint_from_dict({"kind": "matroid"})
        self.assertEqual(context.exception.field, "constraint.kind")

    def test_infeasible_graph_in_data(self):
        """Infeasible families keep their own error type when parsed."""
        data = {"kind": "spanning_tree", "graph": {"num_nodes": 3, "edges": [[0, 1]]}}
        with self.assertRaises(InfeasibleError):
            constraint_from_dict(data)


def random_families(rng):
    """One small instance of every constraint family."""
    yield CardinalityLower(6, int(rng.integers(0, 7)))
    yield CardinalityUpper(6, int(rng.integers(0, 7)))
    yield Knapsacks(((tuple(rng.integers(1, 5, size=6).tolist()), 6.0),))
    graph = random_connected_graph(5, 3, rng, terminals=True)
    yield SpanningTree(graph)
    yield STPath(graph)
    yield STCut(graph)
    yield PerfectMatching(random_bipartite_graph(3, 3, rng))
    yield VertexCover(random_connected_graph(6, 4, rng))


class TestMinModularAgainstEnumeration(unittest.TestCase):

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_within_alpha_of_cheapest_feasible_set(self, seed):
        """Exact families match the enumerated optimum; vertex cover stays within 2x."""
        rng = make_rng(seed)
        for C in random_families(rng):
            w = rng.integers(0, 10, size=C.n).astype(float)
            cheapest = min(math.fsum(w[j] for j in S) for S in enumerate_feasible(C))
            S = min_modular(C, w)
            cost = math.fsum(w[j] for j in S)
            self.assertTrue(is_feasible(C, S), C.kind)
            self.assertGreaterEqual(cost, cheapest - 1e-9, C.kind)
            self.assertLessEqual(cost, C.alpha * cheapest + 1e-9, C.kind)
