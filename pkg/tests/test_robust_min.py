import math
import unittest

from robsub.bounds import ModularBound
from robsub.constraints import (
    CardinalityLower,
    CardinalityUpper,
    CoveringFamily,
    GraphSpec,
    PerfectMatching,
    SpanningTree,
    STPath,
    VertexCover,
)
from robsub.core import (
    GroundSet,
    average_function,
    build_function,
    kappa_factor,
    total_curvature,
    worst_case_curvature,
)
from robsub.errors import UnsupportedError, ValidationError
from robsub.families import ClusteredSqrt, Modular
from robsub.instances import (
    clustered_sqrt_functions,
    make_rng,
    random_bipartite_graph,
    random_connected_graph,
    synthetic_instance,
)
from robsub.oracle import brute_force_solve
from robsub.robust_min import (
    EACertificate,
    aa_submin,
    clustered_sqrt_certificate,
    cr_submin,
    ea_aa_submin,
    ea_submin,
    inner_minmax_modular,
    mmin_robust_submin,
    round_chain,
)

TRIANGLE = GraphSpec(3, ((0, 1), (1, 2), (0, 2)))


class TestInnerProblem(unittest.TestCase):

    def setUp(self):
        self.bounds = [
            ModularBound(0.0, (1, 4, 2, 3), frozenset(), "upper"),
            ModularBound(0.0, (4, 1, 3, 2), frozenset(), "upper"),
        ]
        self.C = CardinalityLower(4, 2)

    def test_strategies(self):
        """modmax and avg solve their own modular surrogate."""
        self.assertEqual(inner_minmax_modular(self.bounds, self.C, "modmax"), frozenset({2, 3}))
        self.assertEqual(inner_minmax_modular(self.bounds, self.C, "avg"), frozenset({0, 1}))

    def test_both_prefers_modmax_on_ties(self):
        """Both candidates reach 5; the modmax one is kept."""
        self.assertEqual(inner_minmax_modular(self.bounds, self.C, "both"), frozenset({2, 3}))

    def test_exhaustive(self):
        """Exhaustive search returns the smallest optimal tuple."""
        self.assertEqual(
            inner_minmax_modular(self.bounds, self.C, "exhaustive"), frozenset({0, 1})
        )

    def test_invalid_arguments(self):
        """Unknown strategies, empty or mis-sized bounds are refused."""
        with self.assertRaises(ValidationError):
            inner_minmax_modular(self.bounds, self.C, "random")
        with self.assertRaises(ValidationError):
            inner_minmax_modular([], self.C)
        with self.assertRaises(ValidationError):
            inner_minmax_modular(self.bounds, CardinalityLower(3, 1))


class TestMajorizationMinimization(unittest.TestCase):

    def setUp(self):
        V = GroundSet(4)
        self.fs = [
            build_function(Modular((1, 4, 2, 3)), V),
            build_function(Modular((4, 1, 3, 2)), V),
        ]
        self.C = CardinalityLower(4, 2)

    def test_modular_functions(self):
        """With modular functions one step reaches the optimum of 5."""
        sol = mmin_robust_submin(self.fs, self.C)
        self.assertTrue(self.C.is_feasible(sol.selected))
        self.assertEqual(sol.worst, 5.0)
        self.assertEqual(sol.method, "mmin")
        self.assertEqual(sol.iterations, 1)
        self.assertAlmostEqual(sol.bound, 2.0)

    def test_average_approximation(self):
        """AA minimizes f_avg and reports the worst case."""
        sol = aa_submin(self.fs, self.C)
        self.assertEqual(sol.selected, frozenset({0, 1}))
        self.assertEqual(sol.values, (5.0, 5.0))
        self.assertEqual(sol.method, "aa")

    def test_size_mismatch(self):
        """The constraint must live on the functions' ground set."""
        with self.assertRaises(ValidationError):
            mmin_robust_submin(self.fs, CardinalityLower(5, 2))


class TestAgainstOracle(unittest.TestCase):
    """Solver outputs stay within their proven factors of the optimum."""

    def setUp(self):
        instance = synthetic_instance(n=8, count=3, k=3, seed=1, blocks=3)
        self.fs, _ = instance.functions()
        self.C = instance.constraint
        self.opt = brute_force_solve("P1", fs=self.fs, constraint=self.C)
        self.size = max(len(self.opt.selected), 1)

    def test_mmin_within_factor(self):
        """worst <= l·K(|X*|, κ) · OPT."""
        sol = mmin_robust_submin(self.fs, self.C)
        factor = len(self.fs) * kappa_factor(self.size, worst_case_curvature(self.fs))
        self.assertTrue(self.C.is_feasible(sol.selected))
        self.assertLessEqual(sol.worst, factor * self.opt.value + 1e-9)
        self.assertGreaterEqual(sol.worst, self.opt.value - 1e-9)

    def test_mmin_trace_decreases(self):
        """Every accepted iterate improves the worst value."""
        sol = mmin_robust_submin(self.fs, self.C)
        values = [value for _, value in sol.trace]
        for a, b in zip(values, values[1:]):
            self.assertLess(b, a)
        self.assertEqual(values[-1], sol.worst)

    def test_exhaustive_inner_within_curvature_factor(self):
        """With exact inner steps the factor drops to K(|X*|, κ)."""
        sol = mmin_robust_submin(self.fs, self.C, strategy="exhaustive")
        factor = kappa_factor(self.size, worst_case_curvature(self.fs))
        self.assertLessEqual(sol.worst, factor * self.opt.value + 1e-9)

    def test_aa_within_factor(self):
        """worst <= l·K(|X*|, κ_avg) · OPT."""
        sol = aa_submin(self.fs, self.C)
        kappa = total_curvature(average_function(self.fs))
        factor = len(self.fs) * kappa_factor(self.size, kappa)
        self.assertLessEqual(sol.worst, factor * self.opt.value + 1e-9)

    def test_cr_rounding_factor(self):
        """Rounding loses at most the covering factor against the relaxation."""
        sol = cr_submin(self.fs, None, self.C, solver="cutting_plane")
        self.assertTrue(self.C.is_feasible(sol.selected))
        self.assertEqual(sol.bound, 6.0)
        self.assertLessEqual(sol.worst, sol.bound * sol.continuous_value * (1 + 1e-6))

    def test_ea_feasible(self):
        """The ellipsoidal reduction returns a feasible set with a surrogate value."""
        certificates = [clustered_sqrt_certificate(f) for f in self.fs]
        sol = ea_submin(self.fs, certificates, self.C)
        self.assertTrue(self.C.is_feasible(sol.selected))
        self.assertIsNotNone(sol.surrogate_value)
        self.assertGreaterEqual(sol.worst, self.opt.value - 1e-9)


class TestRandomInstances(unittest.TestCase):
    """Seeded random instances stay within the proven factors."""

    def assertWithinFactors(self, fs, C):
        opt = brute_force_solve("P1", fs=fs, constraint=C)
        size = max(len(opt.selected), 1)
        scale = len(fs) * C.alpha

        sol = mmin_robust_submin(fs, C)
        self.assertTrue(C.is_feasible(sol.selected))
        self.assertGreaterEqual(sol.worst, opt.value - 1e-9)
        factor = scale * kappa_factor(size, worst_case_curvature(fs))
        self.assertLessEqual(sol.worst, factor * opt.value + 1e-9)

        sol = aa_submin(fs, C)
        self.assertTrue(C.is_feasible(sol.selected))
        factor = scale * kappa_factor(size, total_curvature(average_function(fs)))
        self.assertLessEqual(sol.worst, factor * opt.value + 1e-9)

    def edge_functions(self, rng, n, count):
        V = GroundSet(n)
        return [build_function(spec, V) for spec in clustered_sqrt_functions(n, count, rng, 3)]

    def test_cardinality(self):
        """|X| >= k over varying l and k."""
        for seed in range(8):
            instance = synthetic_instance(n=8, count=2 + seed % 2, k=1 + seed % 4, seed=seed, blocks=3)
            fs, _ = instance.functions()
            self.assertWithinFactors(fs, instance.constraint)

    def test_spanning_tree(self):
        """Spanning trees of random connected graphs."""
        for seed in range(5):
            rng = make_rng(seed)
            C = SpanningTree(random_connected_graph(5, 3, rng))
            self.assertWithinFactors(self.edge_functions(rng, C.n, 2 + seed % 2), C)

    def test_shortest_path(self):
        """Source-target paths of random connected graphs."""
        for seed in range(5):
            rng = make_rng(seed)
            C = STPath(random_connected_graph(5, 3, rng, terminals=True))
            self.assertWithinFactors(self.edge_functions(rng, C.n, 2 + seed % 2), C)

    def test_perfect_matching(self):
        """Perfect matchings of random bipartite graphs."""
        for seed in range(5):
            rng = make_rng(seed)
            C = PerfectMatching(random_bipartite_graph(3, 4, rng))
            self.assertWithinFactors(self.edge_functions(rng, C.n, 2 + seed % 2), C)


class TestContinuousRelaxation(unittest.TestCase):

    def setUp(self):
        self.fs = [build_function(Modular((1, 1, 1)), GroundSet(3))]
        self.C = VertexCover(TRIANGLE)

    def test_cutting_plane_on_triangle(self):
        """The LP optimum is 3/2 at the half-integral point."""
        sol = cr_submin(self.fs, None, self.C, solver="cutting_plane")
        self.assertAlmostEqual(sol.continuous_value, 1.5, delta=1e-6)
        self.assertEqual(sol.worst, 2.0)
        self.assertEqual(sol.bound, 2.0)
        self.assertTrue(self.C.is_feasible(sol.selected))

    def test_subgradient_on_triangle(self):
        """Projected subgradient descent gets close to 3/2."""
        sol = cr_submin(self.fs, None, self.C, solver="subgradient")
        self.assertGreaterEqual(sol.continuous_value, 1.5 - 1e-6)
        self.assertLessEqual(sol.continuous_value, 1.75 + 1e-9)
        self.assertEqual(sol.worst, 2.0)

    def test_user_covering(self):
        """A supplied covering description replaces the built-in one."""
        covering = CoveringFamily(3, tuple(self.C.covering().constraints))
        sol = cr_submin(self.fs, covering, self.C, solver="cutting_plane")
        self.assertEqual(len(sol.selected), 2)

    def test_no_covering_description(self):
        """Families without a covering description need a user one."""
        with self.assertRaises(UnsupportedError):
            cr_submin(self.fs, None, CardinalityUpper(3, 1))

    def test_unknown_solver(self):
        """Only the two relaxation solvers exist."""
        with self.assertRaises(ValidationError):
            cr_submin(self.fs, None, self.C, solver="newton")

    def test_round_chain(self):
        """The shortest feasible prefix is pruned with the modular oracle."""
        C = CardinalityLower(3, 2)
        self.assertEqual(round_chain(self.fs, [0.9, 0.1, 0.6], C), frozenset({0, 2}))


class TestEllipsoidalApproximation(unittest.TestCase):

    def setUp(self):
        V = GroundSet(4)
        self.fs = [
            build_function(ClusteredSqrt(((0, 1, 2, 3),), (1, 4, 2, 3)), V),
            build_function(ClusteredSqrt(((0, 1, 2, 3),), (4, 1, 3, 2)), V),
        ]
        self.C = CardinalityLower(4, 2)

    def test_single_block_certificate_is_exact(self):
        """sqrt(w(X)) with one block is its own certificate."""
        cert = clustered_sqrt_certificate(self.fs[0])
        self.assertTrue(cert.exact)
        self.assertEqual(cert.weights, (1.0, 4.0, 2.0, 3.0))
        cert.verify(self.fs[0])

    def test_ea_solves_exact_square_roots(self):
        """The reduction solves min max w_i(X) and reports sqrt(l)."""
        certificates = [clustered_sqrt_certificate(f) for f in self.fs]
        sol = ea_submin(self.fs, certificates, self.C)
        self.assertAlmostEqual(sol.worst, math.sqrt(5))
        self.assertAlmostEqual(sol.bound, math.sqrt(2))

    def test_ea_on_average(self):
        """The averaged certificate picks an optimal pair as well."""
        certificates = [clustered_sqrt_certificate(f) for f in self.fs]
        sol = ea_aa_submin(self.fs, certificates, self.C)
        self.assertEqual(sol.method, "ea_aa")
        self.assertAlmostEqual(sol.worst, math.sqrt(5))

    def test_inexact_certificate_has_no_bound(self):
        """Several blocks make the certificate a lower bound only."""
        V = GroundSet(4)
        f = build_function(ClusteredSqrt(((0, 1), (2, 3)), (1, 1, 1, 1)), V)
        cert = clustered_sqrt_certificate(f)
        self.assertFalse(cert.exact)
        sol = ea_submin([f], [cert], self.C)
        self.assertIsNone(sol.bound)

    def test_violated_certificate(self):
        """Certificates exceeding f are rejected."""
        cert = EACertificate((4.0, 4.0, 4.0, 4.0))
        with self.assertRaises(ValidationError):
            cert.verify(self.fs[0])
        with self.assertRaises(ValidationError):
            ea_submin(self.fs, [cert, cert], self.C)

    def test_negative_certificate(self):
        """Certificate weights must be nonnegative."""
        with self.assertRaises(ValidationError):
            EACertificate((1.0, -1.0))

    def test_unsupported_family(self):
        """Only clustered square-root functions get automatic certificates."""
        f = build_function(Modular((1, 1, 1, 1)), GroundSet(4))
        with self.assertRaises(UnsupportedError):
            clustered_sqrt_certificate(f)
        g = build_function(ClusteredSqrt(((0, 1),), (1, 1, 1, 1)), GroundSet(4))
        with self.assertRaises(UnsupportedError):
            clustered_sqrt_certificate(g)

    def test_certificate_dictionary_form(self):
        """Certificates parse back from their dictionary form."""
        cert = EACertificate((1.0, 2.0), 0.25, True)
        self.assertEqual(EACertificate.from_dict(cert.to_dict()), cert)
