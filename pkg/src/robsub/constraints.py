"""Combinatorial constraint families.

Every family exposes an exact (or, for vertex cover, 2-approximate) oracle
for minimizing a nonnegative modular cost, a membership test, a test for the
up-closure and, where one is built in, a covering description used by the
continuous relaxation.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, ClassVar, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.utils import UnionFind
from scipy.optimize import linear_sum_assignment

from robsub.errors import (
    InfeasibleError,
    InstanceFormatError,
    UnsupportedError,
    ValidationError,
)
from robsub.settings import LRU_CACHE_MAXSIZE
from robsub.utils import as_set


@dataclass(frozen=True)
class GraphSpec:
    """A graph whose edges (or vertices, for vertex cover) form the ground set.

    Edge ``i`` of ``edges`` is ground element ``i``.

    Attributes:
        num_nodes (int): Number of vertices, labelled 0..num_nodes-1.
        edges (Tuple[Tuple[int, int], ...]): Endpoint pairs; parallel edges allowed.
        directed (bool): Whether edges are directed from the first endpoint.
        source (Optional[int]): Distinguished vertex s.
        target (Optional[int]): Distinguished vertex t.
        left (Optional[Tuple[int, ...]]): One side of a bipartite graph.
    """

    num_nodes: int
    edges: Tuple[Tuple[int, int], ...]
    directed: bool = False
    source: Optional[int] = None
    target: Optional[int] = None
    left: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if isinstance(self.num_nodes, bool) or not isinstance(self.num_nodes, int):
            raise ValidationError("num_nodes must be an integer")
        if self.num_nodes < 1:
            raise ValidationError("a graph needs at least one vertex")
        try:
            edges = tuple((int(u), int(v)) for u, v in self.edges)
        except (TypeError, ValueError) as e:
            raise ValidationError("edges must be pairs of vertex ids") from e
        for u, v in edges:
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValidationError(f"edge ({u}, {v}) has an endpoint out of range")
        object.__setattr__(self, "edges", edges)
        for name in ("source", "target"):
            node = getattr(self, name)
            if node is not None and not 0 <= node < self.num_nodes:
                raise ValidationError(f"{name} {node} is out of range")
        if self.left is not None:
            left = tuple(sorted(set(int(u) for u in self.left)))
            if any(not 0 <= u < self.num_nodes for u in left):
                raise ValidationError("left side has vertices out of range")
            object.__setattr__(self, "left", left)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def multigraph(self, edge_ids: Optional[Iterable[int]] = None) -> nx.MultiGraph:
        """All vertices plus the selected edges, keyed by edge id."""
        graph = nx.MultiDiGraph() if self.directed else nx.MultiGraph()
        graph.add_nodes_from(range(self.num_nodes))
        ids = range(self.num_edges) if edge_ids is None else sorted(edge_ids)
        for e in ids:
            u, v = self.edges[e]
            graph.add_edge(u, v, key=e)
        return graph

    @property
    @lru_cache(maxsize=LRU_CACHE_MAXSIZE, typed=True)
    def graph(self) -> nx.MultiGraph:
        """The full multigraph. Shared; callers must not mutate it."""
        return self.multigraph()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "num_nodes": self.num_nodes,
            "edges": [list(e) for e in self.edges],
            "directed": self.directed,
            "source": self.source,
            "target": self.target,
            "left": None if self.left is None else list(self.left),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "graph") -> "GraphSpec":
        if not isinstance(data, dict):
            raise InstanceFormatError("expected an object", path)
        for key in ("num_nodes", "edges"):
            if key not in data:
                raise InstanceFormatError("missing field", f"{path}.{key}")
        try:
            return cls(
                num_nodes=data["num_nodes"],
                edges=tuple(tuple(e) for e in data["edges"]),
                directed=bool(data.get("directed", False)),
                source=data.get("source"),
                target=data.get("target"),
                left=None if data.get("left") is None else tuple(data["left"]),
            )
        except (TypeError, ValidationError) as e:
            raise InstanceFormatError(str(e), path) from e


@dataclass(frozen=True)
class CoveringFamily:
    """The polytope {x in [0,1]^n : sum_{i in W} x_i >= b_W for every W}.

    Attributes:
        size (int): Ground set size n.
        constraints (Tuple[Tuple[FrozenSet[int], int], ...]): Pairs (W, b_W).
    """

    size: int
    constraints: Tuple[Tuple[FrozenSet[int], int], ...]

    def __post_init__(self):
        parsed = []
        for W, b in self.constraints:
            W = as_set(W)
            b = int(b)
            if any(j < 0 or j >= self.size for j in W):
                raise ValidationError(f"covering set {sorted(W)} leaves the ground set")
            if b < 1 or b > len(W):
                raise ValidationError(f"covering demand {b} must lie in 1..{len(W)}")
            parsed.append((W, b))
        object.__setattr__(self, "constraints", tuple(parsed))

    @property
    def factor(self) -> int:
        """Rounding factor max_W |W| - b_W + 1."""
        return max((len(W) - b + 1 for W, b in self.constraints), default=1)

    def max_violation(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        return max(
            (b - float(x[sorted(W)].sum()) for W, b in self.constraints), default=0.0
        )

    def contains(self, x: Sequence[float], tol: float = 1e-7) -> bool:
        x = np.asarray(x, dtype=float)
        in_box = bool(np.all(x >= -tol) and np.all(x <= 1 + tol))
        return in_box and self.max_violation(x) <= tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": self.size,
            "constraints": [[sorted(W), b] for W, b in self.constraints],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "covering") -> "CoveringFamily":
        try:
            return cls(
                size=int(data["size"]),
                constraints=tuple((W, b) for W, b in data["constraints"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceFormatError(f"malformed covering family: {e}", path) from e


@dataclass(frozen=True)
class ConstraintFamily(ABC):
    """A nonempty family 𝒞 of feasible subsets of the ground set."""

    kind: ClassVar[str] = ""
    alpha: ClassVar[float] = 1.0

    @property
    @abstractmethod
    def n(self) -> int:
        """Size of the ground set the family lives on."""

    @abstractmethod
    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        """A feasible set of (approximately, within alpha) minimum weight."""

    @abstractmethod
    def is_feasible(self, S: Iterable[int]) -> bool:
        """Exact membership S in 𝒞."""

    @abstractmethod
    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        """True iff some X ⊆ S is feasible."""

    def covering(self) -> CoveringFamily:
        raise UnsupportedError(
            f"{self.kind} has no built-in covering description; supply one"
        )

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Serializes the family for the instance file format."""

    def _weights(self, weights: Sequence[float]) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.n,):
            raise ValidationError(f"expected {self.n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("modular weights must be finite and nonnegative")
        return w


def _check_k(size: int, k: int) -> None:
    if size < 1:
        raise ValidationError("ground set size must be positive")
    if k < 0:
        raise ValidationError(f"k must be nonnegative, got {k}")


@dataclass(frozen=True)
class CardinalityLower(ConstraintFamily):
    """All sets with at least k elements."""

    size: int
    k: int
    kind: ClassVar[str] = "cardinality_lower"

    def __post_init__(self):
        _check_k(self.size, self.k)
        if self.k > self.size:
            raise InfeasibleError(f"no set of {self.size} elements has {self.k} members")

    @property
    def n(self) -> int:
        return self.size

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        w = self._weights(weights)
        order = np.lexsort((np.arange(self.size), w))
        return frozenset(order[: self.k].tolist())

    def is_feasible(self, S: Iterable[int]) -> bool:
        return len(as_set(S)) >= self.k

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        return self.is_feasible(S)

    def covering(self) -> CoveringFamily:
        if self.k == 0:
            return CoveringFamily(self.size, ())
        return CoveringFamily(self.size, ((frozenset(range(self.size)), self.k),))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "size": self.size, "k": self.k}


@dataclass(frozen=True)
class CardinalityUpper(ConstraintFamily):
    """All sets with at most k elements."""

    size: int
    k: int
    kind: ClassVar[str] = "cardinality_upper"

    def __post_init__(self):
        _check_k(self.size, self.k)

    @property
    def n(self) -> int:
        return self.size

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        self._weights(weights)
        return frozenset()

    def is_feasible(self, S: Iterable[int]) -> bool:
        return len(as_set(S)) <= self.k

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "size": self.size, "k": self.k}


@dataclass(frozen=True)
class Knapsacks(ConstraintFamily):
    """All sets with w_i(S) <= b_i for every knapsack i."""

    knapsacks: Tuple[Tuple[Tuple[float, ...], float], ...]
    kind: ClassVar[str] = "knapsacks"

    def __post_init__(self):
        if not self.knapsacks:
            raise ValidationError("at least one knapsack is required")
        parsed = []
        for weights, budget in self.knapsacks:
            weights = tuple(float(w) for w in weights)
            budget = float(budget)
            if any(not math.isfinite(w) or w < 0 for w in weights):
                raise ValidationError("knapsack weights must be finite and nonnegative")
            if not math.isfinite(budget) or budget < 0:
                raise ValidationError("knapsack budgets must be finite and nonnegative")
            parsed.append((weights, budget))
        if len({len(w) for w, _ in parsed}) != 1:
            raise ValidationError("every knapsack needs one weight per element")
        object.__setattr__(self, "knapsacks", tuple(parsed))

    @property
    def n(self) -> int:
        return len(self.knapsacks[0][0])

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        self._weights(weights)
        return frozenset()

    def is_feasible(self, S: Iterable[int]) -> bool:
        S = as_set(S)
        return all(
            math.fsum(w[j] for j in S) <= b + 1e-9 for w, b in self.knapsacks
        )

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "knapsacks": [[list(w), b] for w, b in self.knapsacks],
        }


@dataclass(frozen=True)
class _GraphConstraint(ConstraintFamily):
    graph: GraphSpec

    @property
    def n(self) -> int:
        return self.graph.num_edges

    def _require_terminals(self) -> Tuple[int, int]:
        s, t = self.graph.source, self.graph.target
        if s is None or t is None or s == t:
            raise ValidationError(f"{self.kind} needs distinct source and target vertices")
        return s, t

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "graph": self.graph.to_dict()}


@dataclass(frozen=True)
class SpanningTree(_GraphConstraint):
    """Edge sets of spanning trees of a connected undirected graph."""

    kind: ClassVar[str] = "spanning_tree"

    def __post_init__(self):
        if self.graph.directed:
            raise ValidationError("spanning trees are defined on undirected graphs")
        if not nx.is_connected(self.graph.graph):
            raise InfeasibleError("the graph is not connected")

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        w = self._weights(weights)
        forest = UnionFind(range(self.graph.num_nodes))
        tree = set()
        for e in np.lexsort((np.arange(self.n), w)).tolist():
            u, v = self.graph.edges[e]
            if forest[u] != forest[v]:
                forest.union(u, v)
                tree.add(e)
        return frozenset(tree)

    def is_feasible(self, S: Iterable[int]) -> bool:
        S = as_set(S)
        if len(S) != self.graph.num_nodes - 1 or any(e >= self.n for e in S):
            return False
        forest = UnionFind(range(self.graph.num_nodes))
        for e in S:
            u, v = self.graph.edges[e]
            if forest[u] == forest[v]:
                return False
            forest.union(u, v)
        return True

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        S = as_set(S)
        return nx.is_connected(self.graph.multigraph(e for e in S if e < self.n))


@dataclass(frozen=True)
class STPath(_GraphConstraint):
    """Edge sets of simple paths from source to target."""

    kind: ClassVar[str] = "st_path"

    def __post_init__(self):
        s, t = self._require_terminals()
        if not nx.has_path(self.graph.graph, s, t):
            raise InfeasibleError("the target is unreachable from the source")

    def _pair(self, u: int, v: int) -> Tuple[int, int]:
        return (u, v) if self.graph.directed else (min(u, v), max(u, v))

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        w = self._weights(weights)
        s, t = self._require_terminals()
        cheapest: Dict[Tuple[int, int], int] = {}
        for e, (u, v) in enumerate(self.graph.edges):
            if u == v:
                continue
            pair = self._pair(u, v)
            if pair not in cheapest or w[e] < w[cheapest[pair]]:
                cheapest[pair] = e
        simple = nx.DiGraph() if self.graph.directed else nx.Graph()
        simple.add_nodes_from(range(self.graph.num_nodes))
        for (u, v), e in cheapest.items():
            simple.add_edge(u, v, weight=float(w[e]))
        nodes = nx.dijkstra_path(simple, s, t, weight="weight")
        return frozenset(cheapest[self._pair(u, v)] for u, v in zip(nodes, nodes[1:]))

    def is_feasible(self, S: Iterable[int]) -> bool:
        S = as_set(S)
        if not S or any(e >= self.n for e in S):
            return False
        s, t = self._require_terminals()
        sub = self.graph.multigraph(S)
        sub.remove_nodes_from([u for u in list(sub.nodes) if sub.degree(u) == 0])
        if s not in sub or t not in sub:
            return False
        if self.graph.directed:
            for u in sub.nodes:
                want = (
                    (1, 0) if u == s else (0, 1) if u == t else (1, 1)
                )
                if (sub.out_degree(u), sub.in_degree(u)) != want:
                    return False
            return nx.is_weakly_connected(sub)
        for u in sub.nodes:
            if sub.degree(u) != (1 if u in (s, t) else 2):
                return False
        return nx.is_connected(sub)

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        s, t = self._require_terminals()
        sub = self.graph.multigraph(e for e in as_set(S) if e < self.n)
        return nx.has_path(sub, s, t)


@dataclass(frozen=True)
class PerfectMatching(_GraphConstraint):
    """Edge sets of perfect matchings of a bipartite graph."""

    kind: ClassVar[str] = "perfect_matching"

    def __post_init__(self):
        if self.graph.left is None:
            raise ValidationError("a perfect matching constraint needs the left side")
        if self.graph.directed:
            raise ValidationError("matchings are defined on undirected graphs")
        left = set(self.graph.left)
        right = set(range(self.graph.num_nodes)) - left
        if len(left) != len(right):
            raise InfeasibleError("the two sides have different sizes")
        for u, v in self.graph.edges:
            if (u in left) == (v in left):
                raise ValidationError(f"edge ({u}, {v}) does not cross the bipartition")
        if not self.contains_feasible_subset(range(self.n)):
            raise InfeasibleError("the graph has no perfect matching")

    @property
    def right(self) -> Tuple[int, ...]:
        left = set(self.graph.left)
        return tuple(u for u in range(self.graph.num_nodes) if u not in left)

    def _orient(self, e: int) -> Tuple[int, int]:
        u, v = self.graph.edges[e]
        return (u, v) if u in set(self.graph.left) else (v, u)

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        w = self._weights(weights)
        row = {u: i for i, u in enumerate(self.graph.left)}
        col = {v: i for i, v in enumerate(self.right)}
        size = len(row)
        # Non-edges cost more than any perfect matching can.
        forbidden = (math.fsum(w) + 1.0) * (size + 1)
        cost = np.full((size, size), forbidden)
        best = np.full((size, size), -1, dtype=int)
        for e in range(self.n):
            u, v = self._orient(e)
            i, j = row[u], col[v]
            if best[i, j] < 0 or w[e] < cost[i, j]:
                cost[i, j] = w[e]
                best[i, j] = e
        rows, cols = linear_sum_assignment(cost)
        return frozenset(int(best[i, j]) for i, j in zip(rows, cols))

    def is_feasible(self, S: Iterable[int]) -> bool:
        S = as_set(S)
        if any(e >= self.n for e in S):
            return False
        degree = [0] * self.graph.num_nodes
        for e in S:
            u, v = self.graph.edges[e]
            degree[u] += 1
            degree[v] += 1
        return all(d == 1 for d in degree)

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        simple = nx.Graph(self.graph.multigraph(e for e in as_set(S) if e < self.n))
        matching = nx.bipartite.hopcroft_karp_matching(simple, top_nodes=self.graph.left)
        return len(matching) // 2 == len(self.graph.left)


@dataclass(frozen=True)
class STCut(_GraphConstraint):
    """Edge sets whose removal disconnects the target from the source."""

    kind: ClassVar[str] = "st_cut"

    def __post_init__(self):
        self._require_terminals()

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        w = self._weights(weights)
        s, t = self._require_terminals()
        simple = nx.DiGraph() if self.graph.directed else nx.Graph()
        simple.add_nodes_from(range(self.graph.num_nodes))
        for e, (u, v) in enumerate(self.graph.edges):
            if u == v:
                continue
            if simple.has_edge(u, v):
                simple[u][v]["capacity"] += float(w[e])
            else:
                simple.add_edge(u, v, capacity=float(w[e]))
        _, (reachable, _) = nx.minimum_cut(simple, s, t, capacity="capacity")
        cut = set()
        for e, (u, v) in enumerate(self.graph.edges):
            if (u in reachable) != (v in reachable):
                if not self.graph.directed or u in reachable:
                    cut.add(e)
        return frozenset(cut)

    def is_feasible(self, S: Iterable[int]) -> bool:
        s, t = self._require_terminals()
        S = as_set(S)
        rest = self.graph.multigraph(e for e in range(self.n) if e not in S)
        return not nx.has_path(rest, s, t)

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        return self.is_feasible(S)


@dataclass(frozen=True)
class VertexCover(_GraphConstraint):
    """Vertex sets touching every edge; the ground set is the vertex set."""

    kind: ClassVar[str] = "vertex_cover"
    alpha: ClassVar[float] = 2.0

    @property
    def n(self) -> int:
        return self.graph.num_nodes

    def min_modular(self, weights: Sequence[float]) -> FrozenSet[int]:
        """Local-ratio 2-approximation followed by pruning of redundant vertices."""
        residual = self._weights(weights).copy()
        cover = set()
        for u, v in self.graph.edges:
            if u in cover or v in cover:
                continue
            delta = min(residual[u], residual[v])
            residual[u] -= delta
            residual[v] -= delta
            cover.update(x for x in (u, v) if residual[x] <= 0.0)
        w = np.asarray(weights, dtype=float)
        for x in sorted(cover, key=lambda x: (-w[x], x)):
            if self.is_feasible(cover - {x}):
                cover.discard(x)
        return frozenset(cover)

    def is_feasible(self, S: Iterable[int]) -> bool:
        S = as_set(S)
        return all(u in S or v in S for u, v in self.graph.edges)

    def contains_feasible_subset(self, S: Iterable[int]) -> bool:
        return self.is_feasible(S)

    def covering(self) -> CoveringFamily:
        """One row x_u + x_v >= 1 per edge; a self-loop gives the row x_u >= 1."""
        return CoveringFamily(
            self.n, tuple((frozenset((u, v)), 1) for u, v in self.graph.edges)
        )


def get(kind: str) -> type:
    """Retrieves a constraint family by its serialized name.

    Raises:
        KeyError: If the family name does not exist.
    """

    constraint_dict = {
        cls.kind: cls
        for cls in (
            CardinalityLower,
            CardinalityUpper,
            Knapsacks,
            SpanningTree,
            STPath,
            PerfectMatching,
            STCut,
            VertexCover,
        )
    }

    if kind not in constraint_dict:
        raise KeyError(f"Constraint family {kind} not found.")

    return constraint_dict[kind]


def constraint_from_dict(data: Dict[str, Any], path: str = "constraint") -> ConstraintFamily:
    """Parses a family produced by ``ConstraintFamily.to_dict``.

    Raises:
        InstanceFormatError: If the data is malformed.
        InfeasibleError: If the parsed family has no feasible set.
    """

    if not isinstance(data, dict) or "kind" not in data:
        raise InstanceFormatError("expected an object with a 'kind'", path)
    try:
        cls = get(data["kind"])
    except KeyError as e:
        raise InstanceFormatError(f"unknown constraint {data['kind']!r}", f"{path}.kind") from e
    try:
        if issubclass(cls, _GraphConstraint):
            return cls(GraphSpec.from_dict(data.get("graph"), f"{path}.graph"))
        if cls is Knapsacks:
            return cls(tuple((w, b) for w, b in data["knapsacks"]))
        return cls(size=int(data["size"]), k=int(data["k"]))
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, InfeasibleError):
            raise
        raise InstanceFormatError(f"malformed constraint: {e}", path) from e


def min_modular(C: ConstraintFamily, weights: Sequence[float]) -> FrozenSet[int]:
    """Returns a feasible set minimizing the modular cost ``weights``.

    Exact for every family except VertexCover, which is within factor 2.

    Args:
        C (ConstraintFamily): The constraint.
        weights (Sequence[float]): Nonnegative cost of each ground element.

    Returns:
        FrozenSet[int]: The chosen feasible set.

    Raises:
        ValidationError: If the weights are negative or have the wrong length.
    """
    return C.min_modular(weights)


def is_feasible(C: ConstraintFamily, S: Iterable[int]) -> bool:
    return C.is_feasible(S)


def contains_feasible_subset(C: ConstraintFamily, S: Iterable[int]) -> bool:
    return C.contains_feasible_subset(S)


def covering_polytope(
    C: ConstraintFamily, user: Optional[CoveringFamily] = None
) -> CoveringFamily:
    """Covering description of C, or the user supplied one when given.

    Raises:
        UnsupportedError: If C has no built-in description and none is given.
        ValidationError: If the user family lives on a different ground set.
    """

    if user is not None:
        if user.size != C.n:
            raise ValidationError(f"covering family has size {user.size}, expected {C.n}")
        return user
    return C.covering()
