import math
import unittest

import numpy as np

from robsub.core import GroundSet, build_function
from robsub.errors import InstanceFormatError, ValidationError
from robsub.families import (
    ClusteredSqrt,
    Coverage,
    FacilityLocation,
    FeatureBased,
    Modular,
    Truncation,
    WeightedSum,
    get,
    integer_valued,
    spec_from_dict,
)


def handle(spec, n):
    return build_function(spec, GroundSet(n))


class TestFamilyValues(unittest.TestCase):
    """Closed-form values of every function family."""

    def test_modular(self):
        """A modular function sums the weights of the set."""
        f = handle(Modular((1, 2, 3)), 3)
        self.assertEqual(f({0, 2}), 4.0)
        self.assertEqual(f(()), 0.0)

    def test_clustered_sqrt(self):
        """Each block contributes the square root of its weight inside the set."""
        f = handle(ClusteredSqrt(((0, 1), (2,)), (1, 3, 4)), 3)
        self.assertAlmostEqual(f({0, 1, 2}), 4.0)
        self.assertAlmostEqual(f({1}), math.sqrt(3))

    def test_facility_location(self):
        """Every row takes its best similarity inside the set."""
        f = handle(FacilityLocation(((1, 0), (0, 1))), 2)
        self.assertEqual(f({0}), 1.0)
        self.assertEqual(f({0, 1}), 2.0)
        self.assertEqual(f(()), 0.0)

    def test_feature_based(self):
        """Feature sums pass through the concave function."""
        f = handle(FeatureBased(((1, 0), (3, 0))), 2)
        self.assertAlmostEqual(f({0, 1}), 2.0)
        g = handle(FeatureBased(((1, 0), (3, 0)), concave="log1p"), 2)
        self.assertAlmostEqual(g({1}), math.log1p(3))

    def test_coverage(self):
        """Items covered twice count once."""
        f = handle(Coverage(((0, 1), (1, 2)), (1, 1, 1)), 2)
        self.assertEqual(f({0}), 2.0)
        self.assertEqual(f({0, 1}), 3.0)

    def test_truncation(self):
        """Values are capped."""
        f = handle(Truncation(Modular((1, 1, 1)), 2), 3)
        self.assertEqual(f({0, 1, 2}), 2.0)
        self.assertEqual(f({0}), 1.0)

    def test_weighted_sum(self):
        """Terms are scaled and added."""
        spec = WeightedSum(((2, Modular((1, 1))), (0.5, Modular((4, 0)))))
        f = handle(spec, 2)
        self.assertAlmostEqual(f({0}), 4.0)
        self.assertAlmostEqual(f({1}), 2.0)


class TestChainEvaluation(unittest.TestCase):
    """Prefix evaluation agrees with evaluating every prefix separately."""

    def setUp(self):
        rng = np.random.default_rng(3)
        n = 6
        self.n = n
        self.specs = [
            Modular(tuple(rng.random(n).tolist())),
            ClusteredSqrt(((0, 1, 2), (3, 4), (5,)), tuple(rng.random(n).tolist())),
            FacilityLocation(tuple(tuple(r) for r in rng.random((n, n)).tolist())),
            FeatureBased(tuple(tuple(r) for r in rng.random((n, 3)).tolist())),
            Coverage(((0,), (0, 1), (2,), (1, 3), (3,), (2, 4)), (1, 2, 1, 3, 1)),
            Truncation(Modular((1,) * n), 3.5),
            WeightedSum(((0.5, Modular((1,) * n)), (2.0, Coverage(((0,),) * n, (1,))))),
        ]
        self.order = rng.permutation(n)

    def test_chain_matches_prefixes(self):
        """chain_values(order)[i] equals f of the first i+1 elements."""
        for spec in self.specs:
            f = handle(spec, self.n)
            values = f.chain_values(self.order)
            for i in range(self.n):
                expected = f(self.order[: i + 1].tolist())
                self.assertAlmostEqual(values[i], expected, msg=spec.kind)


class TestFamilyValidation(unittest.TestCase):

    def test_negative_weights_rejected(self):
        """Negative or non-finite data is refused at construction."""
        with self.assertRaises(ValidationError):
            Modular((1, -1))
        with self.assertRaises(ValidationError):
            Coverage(((0,),), (math.inf,))

    def test_dimension_mismatch(self):
        """validate checks the data against the ground set size."""
        with self.assertRaises(ValidationError):
            build_function(Modular((1, 2)), GroundSet(3))
        with self.assertRaises(ValidationError):
            build_function(FacilityLocation(((1, 0), (0, 1))), GroundSet(3))

    def test_bad_clusters(self):
        """Blocks must be nonempty, repeat-free and inside the ground set."""
        for clusters in (((0, 1), ()), ((0, 0, 1),), ((0, 5),)):
            with self.assertRaises(ValidationError):
                ClusteredSqrt(clusters, (1, 1, 1)).validate(3)

    def test_clusters_may_overlap(self):
        """Overlapping blocks covering V are accepted."""
        spec = ClusteredSqrt(((0, 1), (1, 2)), (1, 1, 1))
        spec.validate(3)
        self.assertTrue(spec.covers(3))
        self.assertFalse(ClusteredSqrt(((0,),), (1, 1)).covers(2))

    def test_unknown_concave_function(self):
        """Only the registered concave functions are accepted."""
        with self.assertRaises(ValidationError):
            FeatureBased(((1,),), concave="cube")

    def test_empty_weighted_sum(self):
        """A weighted sum needs at least one term."""
        with self.assertRaises(ValidationError):
            WeightedSum(())


class TestFamilyRegistry(unittest.TestCase):

    def test_get_family(self):
        """Families are retrieved by their serialized name."""
        self.assertIs(get("coverage"), Coverage)
        self.assertIs(get("clustered_sqrt"), ClusteredSqrt)

    def test_get_unknown_family(self):
        """Unknown names raise KeyError."""
        with self.assertRaises(KeyError) as context:
            get("quadratic")
        self.assertIn("Function family quadratic not found.", str(context.exception))

    def test_nested_dictionary_form(self):
        """Nested specifications survive their dictionary form."""
        spec = WeightedSum(((1.5, Truncation(Modular((1, 2)), 2.5)),))
        self.assertEqual(spec_from_dict(spec.to_dict()), spec)

    def test_unknown_family_in_data(self):
        """The offending field is named in parse errors."""
        with self.assertRaises(InstanceFormatError) as context:
            spec_from_dict({"family": "quadratic"}, "f[0]")
        self.assertEqual(context.exception.field, "f[0].family")

    def test_missing_field_in_data(self):
        """A missing field is reported with its path."""
        with self.assertRaises(InstanceFormatError) as context:
            spec_from_dict({"family": "modular"}, "g[1]")
        self.assertEqual(context.exception.field, "g[1].weights")

    def test_invalid_values_in_data(self):
        """Invalid values become format errors on the spec path."""
        with self.assertRaises(InstanceFormatError) as context:
            spec_from_dict({"family": "modular", "weights": [1, -2]}, "f[2]")
        self.assertEqual(context.exception.field, "f[2]")


class TestIntegerValued(unittest.TestCase):

    def test_integer_data(self):
        """Integer weights, items, similarities and caps give integer values."""
        self.assertTrue(integer_valued(Modular((1, 2, 0))))
        self.assertTrue(integer_valued(Coverage(((0,), (0, 1)), (2, 3))))
        self.assertTrue(integer_valued(FacilityLocation(((1, 0), (0, 1)))))
        self.assertTrue(integer_valued(Truncation(Modular((1, 2)), 2)))
        self.assertTrue(integer_valued(WeightedSum(((2, Modular((1, 1))), (1, Modular((0, 3)))))))

    def test_fractional_data(self):
        """Any fractional parameter or a non-integer family disqualifies the spec."""
        self.assertFalse(integer_valued(Modular((0.3, 0.3))))
        self.assertFalse(integer_valued(Truncation(Modular((1, 2)), 1.5)))
        self.assertFalse(integer_valued(WeightedSum(((0.5, Modular((1, 1))),))))
        self.assertFalse(integer_valued(ClusteredSqrt(((0, 1),), (1, 1))))
