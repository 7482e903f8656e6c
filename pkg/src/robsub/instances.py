"""Instance files and deterministic instance generators.

Instances are UTF-8 JSON documents carrying a schema version and the name of
the random generator used to build them. Generators draw from
``numpy.random.Generator(PCG64(seed))`` only, so a seed regenerates the same
instance on every platform numpy supports.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from robsub.constraints import (
    CardinalityLower,
    ConstraintFamily,
    CoveringFamily,
    GraphSpec,
    constraint_from_dict,
)
from robsub.core import GroundSet, SetFunctionHandle, build_function
from robsub.errors import InstanceFormatError, ValidationError
from robsub.families import ClusteredSqrt, Coverage, FunctionSpec, Modular, spec_from_dict
from robsub.robust_min import EACertificate

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RNG_ALGORITHM = "PCG64"
PROBLEMS = ("P1", "P2", "P3", "P4")


def make_rng(seed: int) -> np.random.Generator:
    """The generator every instance builder draws from."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class InstanceFile:
    """A complete problem instance.

    Attributes:
        ground_set (GroundSet): The ground set.
        problem (str): 'P1' (robust min), 'P2' (robust max), 'P3' (robust
            cover) or 'P4' (robust knapsack).
        f_specs (Tuple[FunctionSpec, ...]): The f functions.
        g_specs (Tuple[FunctionSpec, ...]): The g functions.
        constraint (Optional[ConstraintFamily]): Required by P1 and P2.
        budgets (Optional[Tuple[float, ...]]): b_i, one per f (P4).
        targets (Optional[Tuple[float, ...]]): c_j, one per g (P3).
        certificates (Tuple[EACertificate, ...]): Optional, one per f.
        covering (Optional[CoveringFamily]): Optional covering description.
        eps (float): Solver accuracy.
        seed (int): Seed the instance was generated from.
    """

    ground_set: GroundSet
    problem: str
    f_specs: Tuple[FunctionSpec, ...] = ()
    g_specs: Tuple[FunctionSpec, ...] = ()
    constraint: Optional[ConstraintFamily] = None
    budgets: Optional[Tuple[float, ...]] = None
    targets: Optional[Tuple[float, ...]] = None
    certificates: Tuple[EACertificate, ...] = field(default=())
    covering: Optional[CoveringFamily] = None
    eps: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InstanceFormatError(f"problem must be one of {PROBLEMS}", "problem")
        object.__setattr__(self, "f_specs", tuple(self.f_specs))
        object.__setattr__(self, "g_specs", tuple(self.g_specs))
        object.__setattr__(self, "certificates", tuple(self.certificates))
        for name in ("budgets", "targets"):
            values = getattr(self, name)
            if values is not None:
                object.__setattr__(self, name, tuple(float(v) for v in values))
        if not 0.0 < self.eps < 1.0:
            raise InstanceFormatError("eps must lie in (0, 1)", "eps")

        needs_f = self.problem in ("P1", "P3", "P4")
        needs_g = self.problem in ("P2", "P3", "P4")
        if needs_f and not self.f_specs:
            raise InstanceFormatError(f"{self.problem} needs at least one f", "f")
        if needs_g and not self.g_specs:
            raise InstanceFormatError(f"{self.problem} needs at least one g", "g")
        if self.problem in ("P1", "P2"):
            if self.constraint is None:
                raise InstanceFormatError(f"{self.problem} needs a constraint", "constraint")
            if self.constraint.n != self.ground_set.n:
                raise InstanceFormatError(
                    f"constraint has size {self.constraint.n}, ground set {self.ground_set.n}",
                    "constraint",
                )
        if self.problem == "P3" and (
            self.targets is None or len(self.targets) != len(self.g_specs)
        ):
            raise InstanceFormatError("P3 needs one target per g", "targets")
        if self.problem == "P4" and (
            self.budgets is None or len(self.budgets) != len(self.f_specs)
        ):
            raise InstanceFormatError("P4 needs one budget per f", "budgets")
        if self.certificates and len(self.certificates) != len(self.f_specs):
            raise InstanceFormatError("expected one certificate per f", "certificates")
        if self.covering is not None and self.covering.size != self.ground_set.n:
            raise InstanceFormatError("covering family size differs from n", "covering")
        for name, specs in (("f", self.f_specs), ("g", self.g_specs)):
            for i, spec in enumerate(specs):
                try:
                    spec.validate(self.ground_set.n)
                except ValidationError as e:
                    raise InstanceFormatError(str(e), f"{name}[{i}]") from e

    def functions(self, validate: bool = False) -> Tuple[List[SetFunctionHandle], List[SetFunctionHandle]]:
        """Compiles the f and g specifications into handles."""
        fs = [build_function(spec, self.ground_set, validate) for spec in self.f_specs]
        gs = [build_function(spec, self.ground_set, validate) for spec in self.g_specs]
        return fs, gs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "rng": RNG_ALGORITHM,
            "ground_set": {
                "n": self.ground_set.n,
                "labels": None if self.ground_set.labels is None else list(self.ground_set.labels),
            },
            "problem": self.problem,
            "f": [spec.to_dict() for spec in self.f_specs],
            "g": [spec.to_dict() for spec in self.g_specs],
            "constraint": None if self.constraint is None else self.constraint.to_dict(),
            "budgets": None if self.budgets is None else list(self.budgets),
            "targets": None if self.targets is None else list(self.targets),
            "certificates": [cert.to_dict() for cert in self.certificates],
            "covering": None if self.covering is None else self.covering.to_dict(),
            "eps": self.eps,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InstanceFile":
        """Parses the dictionary form of an instance.

        Raises:
            InstanceFormatError: If a field is missing or malformed; the
                error's ``field`` names it.
        """

        if not isinstance(data, dict):
            raise InstanceFormatError("an instance must be a JSON object")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise InstanceFormatError(f"unsupported schema version {version!r}", "schema_version")
        rng = data.get("rng", RNG_ALGORITHM)
        if rng != RNG_ALGORITHM:
            raise InstanceFormatError(f"unknown generator {rng!r}", "rng")
        for key in ("ground_set", "problem"):
            if key not in data:
                raise InstanceFormatError("missing field", key)

        ground = data["ground_set"]
        try:
            ground_set = GroundSet(int(ground["n"]), ground.get("labels"))
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceFormatError(f"malformed ground set: {e}", "ground_set") from e

        def specs(key: str) -> Tuple[FunctionSpec, ...]:
            items = data.get(key) or []
            if not isinstance(items, list):
                raise InstanceFormatError("expected a list", key)
            return tuple(spec_from_dict(item, f"{key}[{i}]") for i, item in enumerate(items))

        constraint = None
        if data.get("constraint") is not None:
            constraint = constraint_from_dict(data["constraint"])
        covering = None
        if data.get("covering") is not None:
            covering = CoveringFamily.from_dict(data["covering"])
        try:
            certificates = tuple(
                EACertificate.from_dict(item) for item in data.get("certificates") or []
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceFormatError(f"malformed certificate: {e}", "certificates") from e

        try:
            eps = float(data.get("eps", 0.1))
            seed = int(data.get("seed", 0))
        except (TypeError, ValueError) as e:
            raise InstanceFormatError(str(e), "eps") from e

        f_specs, g_specs = specs("f"), specs("g")
        try:
            return cls(
                ground_set=ground_set,
                problem=data["problem"],
                f_specs=f_specs,
                g_specs=g_specs,
                constraint=constraint,
                budgets=data.get("budgets"),
                targets=data.get("targets"),
                certificates=certificates,
                covering=covering,
                eps=eps,
                seed=seed,
            )
        except InstanceFormatError:
            raise
        except (TypeError, ValueError) as e:
            raise InstanceFormatError(str(e)) from e

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path: str) -> "InstanceFile":
        """Reads an instance file.

        Raises:
            FileNotFoundError: If the file does not exist.
            InstanceFormatError: If the file is not a valid instance.
        """
        with open(path, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise InstanceFormatError(f"invalid JSON at line {e.lineno}: {e.msg}") from e
        return cls.from_dict(data)


def random_partition(n: int, blocks: int, rng: np.random.Generator) -> Tuple[Tuple[int, ...], ...]:
    """Random clustering of 0..n-1 into at most ``blocks`` nonempty blocks."""
    labels = rng.integers(0, blocks, size=n)
    clusters = [tuple(np.flatnonzero(labels == b).tolist()) for b in range(blocks)]
    return tuple(c for c in clusters if c)


def clustered_sqrt_functions(
    n: int, count: int, rng: np.random.Generator, blocks: int = 5
) -> Tuple[ClusteredSqrt, ...]:
    """``count`` clustered square-root functions sharing one weight vector."""
    weights = tuple(rng.random(n).tolist())
    return tuple(ClusteredSqrt(random_partition(n, blocks, rng), weights) for _ in range(count))


def random_modular(n: int, rng: np.random.Generator, high: int = 0) -> Modular:
    """Uniform weights in [0, 1), or integers in 1..high when ``high`` > 0."""
    if high > 0:
        return Modular(tuple(rng.integers(1, high + 1, size=n).astype(float).tolist()))
    return Modular(tuple(rng.random(n).tolist()))


def random_coverage(n: int, items: int, rng: np.random.Generator, density: float = 0.3) -> Coverage:
    """Coverage function with unit item weights; every element covers an item."""
    cover = []
    for _ in range(n):
        chosen = np.flatnonzero(rng.random(items) < density).tolist()
        if not chosen:
            chosen = [int(rng.integers(0, items))]
        cover.append(tuple(chosen))
    return Coverage(tuple(cover), (1.0,) * items)


def random_connected_graph(
    num_nodes: int, extra_edges: int, rng: np.random.Generator, terminals: bool = False
) -> GraphSpec:
    """A random spanning tree on ``num_nodes`` vertices plus random extra edges."""
    order = rng.permutation(num_nodes).tolist()
    edges = [
        (order[int(rng.integers(0, i))], order[i]) for i in range(1, num_nodes)
    ]
    for _ in range(extra_edges):
        u, v = rng.choice(num_nodes, size=2, replace=False).tolist()
        edges.append((u, v))
    source, target = (0, num_nodes - 1) if terminals else (None, None)
    return GraphSpec(num_nodes, tuple(edges), source=source, target=target)


def random_bipartite_graph(half: int, extra_edges: int, rng: np.random.Generator) -> GraphSpec:
    """Bipartite graph on 2·half vertices containing a random perfect matching."""
    right = rng.permutation(half).tolist()
    edges = [(i, half + right[i]) for i in range(half)]
    for _ in range(extra_edges):
        edges.append((int(rng.integers(0, half)), half + int(rng.integers(0, half))))
    return GraphSpec(2 * half, tuple(edges), left=tuple(range(half)))


def synthetic_instance(
    n: int = 50, count: int = 3, k: int = 10, seed: int = 7, blocks: int = 5
) -> InstanceFile:
    """Robust minimization of ``count`` clustered square-root functions with |X| >= k."""
    rng = make_rng(seed)
    specs = clustered_sqrt_functions(n, count, rng, blocks)
    return InstanceFile(
        ground_set=GroundSet(n),
        problem="P1",
        f_specs=specs,
        constraint=CardinalityLower(n, k),
        seed=seed,
    )


def get(kind: str) -> Callable[..., InstanceFile]:
    """Retrieves an instance generator by name.

    Raises:
        KeyError: If the generator does not exist.
    """

    generator_dict = {
        "synthetic": synthetic_instance,
    }

    if kind not in generator_dict:
        raise KeyError(f"Instance generator {kind} not found.")

    return generator_dict[kind]
