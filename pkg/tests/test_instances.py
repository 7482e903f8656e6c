import copy
import os
import tempfile
import unittest

import networkx as nx

from robsub.constraints import CardinalityLower, PerfectMatching, SpanningTree
from robsub.core import GroundSet
from robsub.errors import InstanceFormatError
from robsub.families import ClusteredSqrt, Modular
from robsub.instances import (
    InstanceFile,
    get,
    make_rng,
    random_bipartite_graph,
    random_connected_graph,
    random_coverage,
    synthetic_instance,
)

COVER_DATA = {
    "schema_version": 1,
    "rng": "PCG64",
    "ground_set": {"n": 2},
    "problem": "P3",
    "f": [{"family": "modular", "weights": [1, 1]}],
    "g": [{"family": "modular", "weights": [1, 2]}],
    "targets": [2],
}


class TestSyntheticInstances(unittest.TestCase):

    def test_rng_is_deterministic(self):
        """The same seed yields the same stream."""
        self.assertEqual(make_rng(5).random(3).tolist(), make_rng(5).random(3).tolist())

    def test_synthetic_shape(self):
        """l clustered square-root functions under |X| >= k."""
        instance = synthetic_instance(n=12, count=3, k=4, seed=2, blocks=3)
        self.assertEqual(instance.problem, "P1")
        self.assertEqual(instance.constraint, CardinalityLower(12, 4))
        self.assertEqual(len(instance.f_specs), 3)
        for spec in instance.f_specs:
            self.assertIsInstance(spec, ClusteredSqrt)
            self.assertTrue(spec.covers(12))
            self.assertLessEqual(len(spec.clusters), 3)

    def test_synthetic_is_reproducible(self):
        """A seed regenerates the same document; another seed does not."""
        first = synthetic_instance(n=10, count=2, k=3, seed=11).dumps()
        self.assertEqual(first, synthetic_instance(n=10, count=2, k=3, seed=11).dumps())
        self.assertNotEqual(first, synthetic_instance(n=10, count=2, k=3, seed=12).dumps())

    def test_generator_registry(self):
        """Generators are retrieved by name."""
        self.assertIs(get("synthetic"), synthetic_instance)
        with self.assertRaises(KeyError) as context:
            get("facility")
        self.assertIn("Instance generator facility not found.", str(context.exception))


class TestGraphGenerators(unittest.TestCase):

    def test_connected_graph(self):
        """Generated graphs admit spanning trees."""
        graph = random_connected_graph(7, 4, make_rng(1), terminals=True)
        self.assertTrue(nx.is_connected(graph.graph))
        self.assertEqual((graph.source, graph.target), (0, 6))
        SpanningTree(graph)

    def test_bipartite_graph(self):
        """Generated bipartite graphs admit a perfect matching."""
        graph = random_bipartite_graph(4, 3, make_rng(1))
        self.assertEqual(graph.left, (0, 1, 2, 3))
        PerfectMatching(graph)

    def test_coverage_hits_every_element(self):
        """Every element covers at least one item."""
        spec = random_coverage(6, 5, make_rng(3), density=0.0)
        self.assertTrue(all(len(items) == 1 for items in spec.cover))


class TestInstanceFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "instance.json")

    def tearDown(self):
        self.tmp.cleanup()

    def test_dump_and_load(self):
        """A dumped instance loads back equal."""
        instance = synthetic_instance(n=6, count=2, k=2, seed=4)
        instance.dump(self.path)
        self.assertEqual(InstanceFile.load(self.path), instance)

    def test_functions(self):
        """Specifications compile to handles on the instance ground set."""
        instance = InstanceFile.from_dict(COVER_DATA)
        fs, gs = instance.functions(validate=True)
        self.assertEqual(fs[0]({0, 1}), 2.0)
        self.assertEqual(gs[0]({1}), 2.0)
        self.assertEqual(instance.targets, (2.0,))

    def test_invalid_json(self):
        """Broken JSON is a format error."""
        with open(self.path, "w", encoding="utf-8") as f:
            f.write("{not json")
        with self.assertRaises(InstanceFormatError):
            InstanceFile.load(self.path)

    def test_missing_file(self):
        """Missing files raise FileNotFoundError."""
        with self.assertRaises(FileNotFoundError):
            InstanceFile.load(os.path.join(self.tmp.name, "absent.json"))

    def assertFieldError(self, data, field):
        with self.assertRaises(InstanceFormatError) as context:
            InstanceFile.from_dict(data)
        self.assertEqual(context.exception.field, field)

    def test_field_errors(self):
        """Format errors name the offending field."""
        cases = [
            ("schema_version", 2, "schema_version"),
            ("rng", "MT19937", "rng"),
            ("problem", "P9", "problem"),
            ("targets", None, "targets"),
            ("eps", 1.5, "eps"),
            ("ground_set", {"n": "many"}, "ground_set"),
            ("f", [{"family": "cubic"}], "f[0].family"),
        ]
        for key, value, field in cases:
            data = copy.deepcopy(COVER_DATA)
            data[key] = value
            self.assertFieldError(data, field)

    def test_missing_problem(self):
        """The problem field is required."""
        data = copy.deepcopy(COVER_DATA)
        del data["problem"]
        self.assertFieldError(data, "problem")

    def test_constraint_required(self):
        """Robust minimization needs a constraint of matching size."""
        data = copy.deepcopy(COVER_DATA)
        data["problem"] = "P1"
        self.assertFieldError(data, "constraint")
        data["constraint"] = {"kind": "cardinality_lower", "size": 3, "k": 1}
        self.assertFieldError(data, "constraint")

    def test_dimension_mismatch(self):
        """Function data must match the ground set."""
        data = copy.deepcopy(COVER_DATA)
        data["g"] = [{"family": "modular", "weights": [1, 2, 3]}]
        self.assertFieldError(data, "g[0]")

    def test_direct_construction(self):
        """Instances can be built in code as well."""
        instance = InstanceFile(
            ground_set=GroundSet(2),
            problem="P4",
            f_specs=(Modular((1, 1)),),
            g_specs=(Modular((1, 2)),),
            budgets=(1,),
        )
        self.assertEqual(InstanceFile.from_dict(instance.to_dict()), instance)
