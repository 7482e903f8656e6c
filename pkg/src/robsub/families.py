"""Families of monotone submodular set functions.

Each family is a frozen dataclass holding plain tuples, so specifications are
hashable, comparable and serialize to the JSON instance format unchanged.
``compile`` turns a specification into a fast numpy evaluator over sorted
index arrays; ``compile_chain`` evaluates every prefix of an ordering at once.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, ClassVar, Dict, Sequence, Tuple

import numpy as np

from robsub.errors import InstanceFormatError, ValidationError

Evaluator = Callable[[np.ndarray], float]
ChainEvaluator = Callable[[np.ndarray], np.ndarray]


def _floats(values: Sequence[Any], name: str) -> Tuple[float, ...]:
    try:
        result = tuple(float(v) for v in values)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be a sequence of numbers") from e
    for v in result:
        if not math.isfinite(v) or v < 0:
            raise ValidationError(f"{name} must be finite and nonnegative, got {v}")
    return result


def _matrix(rows: Sequence[Sequence[Any]], name: str) -> Tuple[Tuple[float, ...], ...]:
    result = tuple(_floats(row, name) for row in rows)
    if result and len({len(row) for row in result}) != 1:
        raise ValidationError(f"{name} rows must all have the same length")
    return result


def _field(data: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(data, dict):
        raise InstanceFormatError("expected an object", path)
    if key not in data:
        raise InstanceFormatError("missing field", f"{path}.{key}")
    return data[key]


@dataclass(frozen=True)
class FunctionSpec(ABC):
    """Declarative description of a normalized monotone submodular function."""

    kind: ClassVar[str] = ""

    @abstractmethod
    def validate(self, n: int) -> None:
        """Checks the data against a ground set of ``n`` elements.

        Raises:
            ValidationError: If dimensions or ids do not match ``n``.
        """

    @abstractmethod
    def compile(self, n: int) -> Evaluator:
        """Returns a callable mapping a sorted index array to f(S)."""

    def compile_chain(self, n: int) -> ChainEvaluator:
        """Returns a callable mapping an ordering to the values of its prefixes."""
        evaluator = self.compile(n)

        def chain(order: np.ndarray) -> np.ndarray:
            return np.array(
                [evaluator(np.sort(order[: i + 1])) for i in range(len(order))],
                dtype=float,
            )

        return chain

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Serializes the specification for the instance file format."""

    @classmethod
    @abstractmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "FunctionSpec":
        """Parses a specification produced by ``to_dict``."""


@dataclass(frozen=True)
class Modular(FunctionSpec):
    """f(X) = sum of the weights of X."""

    weights: Tuple[float, ...]
    kind: ClassVar[str] = "modular"

    def __post_init__(self):
        object.__setattr__(self, "weights", _floats(self.weights, "weights"))

    def validate(self, n: int) -> None:
        if len(self.weights) != n:
            raise ValidationError(f"expected {n} weights, got {len(self.weights)}")

    def compile(self, n: int) -> Evaluator:
        w = np.asarray(self.weights, dtype=float)
        return lambda idx: float(w[idx].sum())

    def compile_chain(self, n: int) -> ChainEvaluator:
        w = np.asarray(self.weights, dtype=float)
        return lambda order: np.cumsum(w[order])

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.kind, "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "Modular":
        return cls(weights=_field(data, "weights", path))


@dataclass(frozen=True)
class ClusteredSqrt(FunctionSpec):
    """f(X) = sum over blocks C of sqrt(w(X ∩ C)).

    Blocks may overlap; a cover of the ground set is accepted as well as a
    partition.
    """

    clusters: Tuple[Tuple[int, ...], ...]
    weights: Tuple[float, ...]
    kind: ClassVar[str] = "clustered_sqrt"

    def __post_init__(self):
        try:
            clusters = tuple(tuple(int(j) for j in block) for block in self.clusters)
        except (TypeError, ValueError) as e:
            raise ValidationError("clusters must be lists of element ids") from e
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "weights", _floats(self.weights, "weights"))

    def validate(self, n: int) -> None:
        if len(self.weights) != n:
            raise ValidationError(f"expected {n} weights, got {len(self.weights)}")
        if not self.clusters:
            raise ValidationError("at least one cluster is required")
        for block in self.clusters:
            if not block:
                raise ValidationError("clusters must be nonempty")
            if len(set(block)) != len(block):
                raise ValidationError(f"cluster {block} repeats an element")
            if min(block) < 0 or max(block) >= n:
                raise ValidationError(f"cluster {block} has ids outside 0..{n - 1}")

    def covers(self, n: int) -> bool:
        """True when the blocks jointly contain every element."""
        return set().union(*map(set, self.clusters)) == set(range(n))

    def _scaled_membership(self, n: int) -> np.ndarray:
        m = np.zeros((len(self.clusters), n))
        for i, block in enumerate(self.clusters):
            m[i, list(block)] = 1.0
        return m * np.asarray(self.weights, dtype=float)

    def compile(self, n: int) -> Evaluator:
        wm = self._scaled_membership(n)
        return lambda idx: float(np.sqrt(wm[:, idx].sum(axis=1)).sum())

    def compile_chain(self, n: int) -> ChainEvaluator:
        wm = self._scaled_membership(n)
        return lambda order: np.sqrt(np.cumsum(wm[:, order], axis=1)).sum(axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.kind,
            "clusters": [list(block) for block in self.clusters],
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "ClusteredSqrt":
        return cls(
            clusters=_field(data, "clusters", path),
            weights=_field(data, "weights", path),
        )


@dataclass(frozen=True)
class FacilityLocation(FunctionSpec):
    """f(X) = sum over rows i of max_{j in X} similarity[i][j]."""

    similarity: Tuple[Tuple[float, ...], ...]
    kind: ClassVar[str] = "facility_location"

    def __post_init__(self):
        object.__setattr__(self, "similarity", _matrix(self.similarity, "similarity"))

    def validate(self, n: int) -> None:
        if len(self.similarity) != n or any(len(row) != n for row in self.similarity):
            raise ValidationError(f"similarity must be a {n}x{n} matrix")

    def compile(self, n: int) -> Evaluator:
        s = np.asarray(self.similarity, dtype=float)

        def evaluate(idx: np.ndarray) -> float:
            if idx.size == 0:
                return 0.0
            return float(s[:, idx].max(axis=1).sum())

        return evaluate

    def compile_chain(self, n: int) -> ChainEvaluator:
        s = np.asarray(self.similarity, dtype=float)
        return lambda order: np.maximum.accumulate(s[:, order], axis=1).sum(axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.kind, "similarity": [list(r) for r in self.similarity]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "FacilityLocation":
        return cls(similarity=_field(data, "similarity", path))


CONCAVE = {"sqrt": np.sqrt, "log1p": np.log1p}


@dataclass(frozen=True)
class FeatureBased(FunctionSpec):
    """f(X) = sum over features u of phi(sum_{j in X} features[j][u])."""

    features: Tuple[Tuple[float, ...], ...]
    concave: str = "sqrt"
    kind: ClassVar[str] = "feature_based"

    def __post_init__(self):
        object.__setattr__(self, "features", _matrix(self.features, "features"))
        if self.concave not in CONCAVE:
            raise ValidationError(f"concave must be one of {sorted(CONCAVE)}")

    def validate(self, n: int) -> None:
        if len(self.features) != n:
            raise ValidationError(f"expected {n} feature rows, got {len(self.features)}")

    def compile(self, n: int) -> Evaluator:
        feats = np.asarray(self.features, dtype=float).reshape(n, -1)
        phi = CONCAVE[self.concave]
        return lambda idx: float(phi(feats[idx].sum(axis=0)).sum())

    def compile_chain(self, n: int) -> ChainEvaluator:
        feats = np.asarray(self.features, dtype=float).reshape(n, -1)
        phi = CONCAVE[self.concave]
        return lambda order: phi(np.cumsum(feats[order], axis=0)).sum(axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.kind,
            "features": [list(r) for r in self.features],
            "concave": self.concave,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "FeatureBased":
        return cls(
            features=_field(data, "features", path),
            concave=data.get("concave", "sqrt"),
        )


@dataclass(frozen=True)
class Coverage(FunctionSpec):
    """f(X) = total weight of the universe items covered by X."""

    cover: Tuple[Tuple[int, ...], ...]
    item_weights: Tuple[float, ...]
    kind: ClassVar[str] = "coverage"

    def __post_init__(self):
        try:
            cover = tuple(tuple(int(u) for u in items) for items in self.cover)
        except (TypeError, ValueError) as e:
            raise ValidationError("cover must map elements to lists of item ids") from e
        object.__setattr__(self, "cover", cover)
        object.__setattr__(self, "item_weights", _floats(self.item_weights, "item_weights"))

    def validate(self, n: int) -> None:
        if len(self.cover) != n:
            raise ValidationError(f"expected a cover entry for each of {n} elements")
        m = len(self.item_weights)
        for items in self.cover:
            if any(u < 0 or u >= m for u in items):
                raise ValidationError(f"cover entry {items} has items outside 0..{m - 1}")

    def _incidence(self, n: int) -> np.ndarray:
        c = np.zeros((n, len(self.item_weights)), dtype=bool)
        for j, items in enumerate(self.cover):
            c[j, list(items)] = True
        return c

    def compile(self, n: int) -> Evaluator:
        c = self._incidence(n)
        u = np.asarray(self.item_weights, dtype=float)

        def evaluate(idx: np.ndarray) -> float:
            if idx.size == 0:
                return 0.0
            return float(u[c[idx].any(axis=0)].sum())

        return evaluate

    def compile_chain(self, n: int) -> ChainEvaluator:
        c = self._incidence(n)
        u = np.asarray(self.item_weights, dtype=float)
        return lambda order: np.logical_or.accumulate(c[order], axis=0).astype(float) @ u

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.kind,
            "cover": [list(items) for items in self.cover],
            "item_weights": list(self.item_weights),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "Coverage":
        return cls(
            cover=_field(data, "cover", path),
            item_weights=_field(data, "item_weights", path),
        )


@dataclass(frozen=True)
class Truncation(FunctionSpec):
    """f(X) = min(inner(X), cap)."""

    inner: FunctionSpec
    cap: float
    kind: ClassVar[str] = "truncation"

    def __post_init__(self):
        if not isinstance(self.inner, FunctionSpec):
            raise ValidationError("inner must be a function specification")
        object.__setattr__(self, "cap", _floats((self.cap,), "cap")[0])

    def validate(self, n: int) -> None:
        self.inner.validate(n)

    def compile(self, n: int) -> Evaluator:
        inner = self.inner.compile(n)
        cap = self.cap
        return lambda idx: min(inner(idx), cap)

    def compile_chain(self, n: int) -> ChainEvaluator:
        inner = self.inner.compile_chain(n)
        cap = self.cap
        return lambda order: np.minimum(inner(order), cap)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.kind, "inner": self.inner.to_dict(), "cap": self.cap}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "Truncation":
        return cls(
            inner=spec_from_dict(_field(data, "inner", path), f"{path}.inner"),
            cap=_field(data, "cap", path),
        )


@dataclass(frozen=True)
class WeightedSum(FunctionSpec):
    """f(X) = sum of coefficient * term(X) over nonnegative coefficients."""

    terms: Tuple[Tuple[float, FunctionSpec], ...]
    kind: ClassVar[str] = "weighted_sum"

    def __post_init__(self):
        terms = []
        for term in self.terms:
            coefficient, spec = term
            if not isinstance(spec, FunctionSpec):
                raise ValidationError("weighted sum terms must hold specifications")
            terms.append((_floats((coefficient,), "coefficient")[0], spec))
        if not terms:
            raise ValidationError("a weighted sum needs at least one term")
        object.__setattr__(self, "terms", tuple(terms))

    def validate(self, n: int) -> None:
        for _, spec in self.terms:
            spec.validate(n)

    def compile(self, n: int) -> Evaluator:
        parts = [(c, spec.compile(n)) for c, spec in self.terms]
        return lambda idx: math.fsum(c * g(idx) for c, g in parts)

    def compile_chain(self, n: int) -> ChainEvaluator:
        parts = [(c, spec.compile_chain(n)) for c, spec in self.terms]
        return lambda order: sum(c * g(order) for c, g in parts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.kind,
            "terms": [[c, spec.to_dict()] for c, spec in self.terms],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = "spec") -> "WeightedSum":
        terms = _field(data, "terms", path)
        if not isinstance(terms, list):
            raise InstanceFormatError("expected a list", f"{path}.terms")
        parsed = []
        for i, term in enumerate(terms):
            if not isinstance(term, list) or len(term) != 2:
                raise InstanceFormatError("expected [coefficient, spec]", f"{path}.terms[{i}]")
            parsed.append((term[0], spec_from_dict(term[1], f"{path}.terms[{i}]")))
        return cls(terms=tuple(parsed))


def get(kind: str) -> type:
    """Retrieves a function family by its serialized name.

    Args:
        kind (str): One of 'modular', 'clustered_sqrt', 'facility_location',
            'feature_based', 'coverage', 'truncation' or 'weighted_sum'.

    Returns:
        type: The ``FunctionSpec`` subclass implementing the family.

    Raises:
        KeyError: If the family name does not exist.
    """

    family_dict = {
        cls.kind: cls
        for cls in (
            Modular,
            ClusteredSqrt,
            FacilityLocation,
            FeatureBased,
            Coverage,
            Truncation,
            WeightedSum,
        )
    }

    if kind not in family_dict:
        raise KeyError(f"Function family {kind} not found.")

    return family_dict[kind]


def spec_from_dict(data: Dict[str, Any], path: str = "spec") -> FunctionSpec:
    """Parses any family from its dictionary form.

    Raises:
        InstanceFormatError: If the family is unknown or a field is malformed.
    """
    kind = _field(data, "family", path)
    try:
        cls = get(kind)
    except KeyError as e:
        raise InstanceFormatError(f"unknown function family {kind!r}", f"{path}.family") from e
    try:
        return cls.from_dict(data, path)
    except InstanceFormatError:
        raise
    except ValidationError as e:
        raise InstanceFormatError(str(e), path) from e


def _whole(values: Sequence[float]) -> bool:
    return all(float(v).is_integer() for v in values)


def integer_valued(spec: FunctionSpec) -> bool:
    """Whether ``spec`` takes only integer values, judged from its parameters.

    Modular, coverage and facility-location functions with integer data
    qualify, as do truncations at integer caps and integer combinations of
    qualifying terms. Every other family is reported as not integer-valued.

    Examples:
        >>> integer_valued(Modular((1, 2, 0)))
        True
        >>> integer_valued(Truncation(Modular((1, 2)), 1.5))
        False
    """

    if isinstance(spec, Modular):
        return _whole(spec.weights)
    if isinstance(spec, Coverage):
        return _whole(spec.item_weights)
    if isinstance(spec, FacilityLocation):
        return all(_whole(row) for row in spec.similarity)
    if isinstance(spec, Truncation):
        return _whole((spec.cap,)) and integer_valued(spec.inner)
    if isinstance(spec, WeightedSum):
        return all(_whole((c,)) and integer_valued(term) for c, term in spec.terms)
    return False
