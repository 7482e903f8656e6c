import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from robsub.errors import DomainError, ValidationError
from robsub.families import (
    ChainEvaluator,
    Evaluator,
    FunctionSpec,
    Truncation,
    WeightedSum,
)
from robsub.settings import LRU_CACHE_MAXSIZE, TOLERANCE
from robsub.utils import as_set

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundSet:
    """A finite ground set V = {0, ..., n-1}.

    Attributes:
        n (int): Number of elements, at least one.
        labels (Optional[Tuple[str, ...]]): Display names, one per element.
    """

    n: int
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"ground set size must be a positive integer, got {self.n!r}")
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != self.n:
                raise ValidationError(f"expected {self.n} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)

    @property
    def elements(self) -> FrozenSet[int]:
        return frozenset(range(self.n))

    def label(self, j: int) -> str:
        """Display name of element ``j``; the id itself when unlabeled."""
        self.check((j,))
        return str(j) if self.labels is None else self.labels[j]

    def check(self, S: Iterable[int]) -> FrozenSet[int]:
        """Normalizes ``S`` and verifies every id lies in the ground set.

        Raises:
            DomainError: If an id is outside 0..n-1.
        """
        S = as_set(S)
        for j in S:
            if j < 0 or j >= self.n:
                raise DomainError(f"element {j} is outside the ground set 0..{self.n - 1}")
        return S


@dataclass(frozen=True, eq=False)
class SetFunctionHandle:
    """A compiled monotone submodular function over a ground set.

    Handles compare by identity. Values are memoized per handle, so repeated
    queries made by the iterative solvers cost a dictionary lookup.

    Attributes:
        ground_set (GroundSet): The ground set the function is defined on.
        spec (FunctionSpec): The declarative description of the function.
        singletons (Tuple[float, ...]): f({j}) for every element.
        top_gains (Tuple[float, ...]): f(j | V \\ {j}) for every element.
    """

    ground_set: GroundSet
    spec: FunctionSpec
    singletons: Tuple[float, ...] = field(init=False, repr=False)
    top_gains: Tuple[float, ...] = field(init=False, repr=False)
    _evaluator: Evaluator = field(init=False, repr=False)
    _chain: ChainEvaluator = field(init=False, repr=False)

    def __post_init__(self):
        n = self.ground_set.n
        evaluator = self.spec.compile(n)
        object.__setattr__(self, "_evaluator", evaluator)
        object.__setattr__(self, "_chain", self.spec.compile_chain(n))
        everything = np.arange(n, dtype=np.intp)
        full = evaluator(everything)
        singletons = tuple(
            max(0.0, evaluator(np.array([j], dtype=np.intp))) for j in range(n)
        )
        top_gains = tuple(
            max(0.0, full - evaluator(np.delete(everything, j))) for j in range(n)
        )
        object.__setattr__(self, "singletons", singletons)
        object.__setattr__(self, "top_gains", top_gains)

    @property
    def n(self) -> int:
        return self.ground_set.n

    @lru_cache(maxsize=LRU_CACHE_MAXSIZE, typed=True)
    def value(self, S: FrozenSet[int]) -> float:
        """Evaluates f(S) for an already validated frozenset."""
        idx = np.fromiter(sorted(S), dtype=np.intp, count=len(S))
        return float(self._evaluator(idx))

    def __call__(self, S: Iterable[int]) -> float:
        return evaluate(self, S)

    def chain_values(self, order: Sequence[int]) -> np.ndarray:
        """Values f(S_1), ..., f(S_m) of the prefixes of ``order``."""
        return np.asarray(self._chain(np.asarray(order, dtype=np.intp)), dtype=float)


def build_function(
    spec: FunctionSpec,
    ground_set: GroundSet,
    validate: bool = True,
    samples: int = 200,
    seed: int = 0,
) -> SetFunctionHandle:
    """Compiles a specification into a function handle.

    Args:
        spec (FunctionSpec): The function description.
        ground_set (GroundSet): The ground set to evaluate on.
        validate (bool, optional): Whether to sample the diminishing-returns
            and monotonicity conditions. Defaults to True.
        samples (int, optional): Number of random checks. Defaults to 200.
        seed (int, optional): Seed of the sampling generator. Defaults to 0.

    Returns:
        SetFunctionHandle: The compiled function.

    Raises:
        ValidationError: If the data is malformed or a sampled check fails.
    """

    spec.validate(ground_set.n)
    handle = SetFunctionHandle(ground_set, spec)
    if validate:
        if abs(handle.value(frozenset())) > TOLERANCE:
            raise ValidationError("function is not normalized: f(empty set) != 0")
        if not check_submodular(handle, samples=samples, seed=seed):
            raise ValidationError(f"{spec.kind} function failed the submodularity check")
    return handle


def check_submodular(
    f: SetFunctionHandle, samples: int = 200, seed: int = 0, tol: float = TOLERANCE
) -> bool:
    """Samples triples S ⊆ T, j ∉ T and checks f(j|S) >= f(j|T) >= 0.

    Returns:
        bool: False as soon as a sampled triple violates the conditions.
    """

    rng = np.random.default_rng(seed)
    n = f.n
    for _ in range(samples):
        t_mask = rng.random(n) < rng.random()
        outside = np.flatnonzero(~t_mask)
        if outside.size == 0:
            continue
        j = int(rng.choice(outside))
        s_mask = t_mask & (rng.random(n) < rng.random())
        T = frozenset(np.flatnonzero(t_mask).tolist())
        S = frozenset(np.flatnonzero(s_mask).tolist())
        gain_t = f.value(T | {j}) - f.value(T)
        gain_s = f.value(S | {j}) - f.value(S)
        scale = max(1.0, abs(f.value(T | {j})))
        if gain_t < -tol * scale or gain_s < gain_t - tol * scale:
            logger.debug("violation at S=%s T=%s j=%d", sorted(S), sorted(T), j)
            return False
    return True


def evaluate(f: SetFunctionHandle, S: Iterable[int]) -> float:
    """Returns f(S).

    Raises:
        DomainError: If ``S`` holds an id outside the ground set.
    """
    return f.value(f.ground_set.check(S))


def gain(f: SetFunctionHandle, j: int, S: Iterable[int]) -> float:
    """Returns the marginal gain f(j | S) = f(S ∪ {j}) - f(S).

    Raises:
        DomainError: If ``j`` already belongs to ``S`` or an id is invalid.
    """
    S = f.ground_set.check(S)
    f.ground_set.check((j,))
    if j in S:
        raise DomainError(f"element {j} already belongs to the set")
    return f.value(S | {j}) - f.value(S)


def total_curvature(f: SetFunctionHandle) -> float:
    """Total curvature 1 - min_j f(j | V \\ {j}) / f({j}) over f({j}) > 0.

    Returns:
        float: A value in [0, 1]; 0 for modular functions.

    Raises:
        DomainError: If every singleton value is zero.
    """

    ratios = [
        top / single
        for single, top in zip(f.singletons, f.top_gains)
        if single > TOLERANCE
    ]
    if not ratios:
        raise DomainError("curvature is undefined when every singleton value is zero")
    return min(1.0, max(0.0, 1.0 - min(ratios)))


def worst_case_curvature(fs: Sequence[SetFunctionHandle]) -> float:
    """Largest total curvature over a list; identically zero functions count as 0."""
    kappa = 0.0
    for f in fs:
        try:
            kappa = max(kappa, total_curvature(f))
        except DomainError:
            continue
    return kappa


def kappa_factor(v: float, kappa: float) -> float:
    """Curvature-dependent factor v / (1 + (1 - kappa)(v - 1)).

    Equals 1 at kappa = 0 and v at kappa = 1.

    Raises:
        DomainError: If ``v`` < 1 or ``kappa`` lies outside [0, 1].
    """

    if v < 1:
        raise DomainError(f"kappa factor needs v >= 1, got {v}")
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"curvature must lie in [0, 1], got {kappa}")
    return v / (1.0 + (1.0 - kappa) * (v - 1.0))


def common_ground_set(fs: Sequence[SetFunctionHandle]) -> GroundSet:
    if not fs:
        raise ValidationError("the function list is empty")
    ground_set = fs[0].ground_set
    for f in fs[1:]:
        if f.ground_set != ground_set:
            raise ValidationError("all functions must share one ground set")
    return ground_set


def aggregate(fs: Sequence[SetFunctionHandle], mode: str, S: Iterable[int]) -> float:
    """Evaluates the worst case ('max') or the mean ('avg') of a list at S.

    Raises:
        ValidationError: If the list is empty, mixes ground sets or ``mode``
            is unknown.
    """

    common_ground_set(fs)
    values = [evaluate(f, S) for f in fs]
    if mode == "max":
        return max(values)
    if mode == "avg":
        return math.fsum(values) / len(values)
    raise ValidationError(f"unknown aggregation mode {mode!r}")


def max_value(fs: Sequence[SetFunctionHandle], S: FrozenSet[int]) -> float:
    return max(f.value(S) for f in fs)


def min_value(gs: Sequence[SetFunctionHandle], S: FrozenSet[int]) -> float:
    return min(g.value(S) for g in gs)


def combine(
    fs: Sequence[SetFunctionHandle], coefficients: Sequence[float]
) -> SetFunctionHandle:
    """Handle of the nonnegative combination sum_i c_i f_i."""
    ground_set = common_ground_set(fs)
    if len(coefficients) != len(fs):
        raise ValidationError("expected one coefficient per function")
    terms = tuple((float(c), f.spec) for c, f in zip(coefficients, fs))
    return build_function(WeightedSum(terms), ground_set, validate=False)


def average_function(fs: Sequence[SetFunctionHandle]) -> SetFunctionHandle:
    """Handle of f_avg = (1/l) sum_i f_i."""
    common_ground_set(fs)
    return combine(fs, [1.0 / len(fs)] * len(fs))


def saturated_function(
    gs: Sequence[SetFunctionHandle],
    caps: Sequence[float],
    coefficients: Optional[Sequence[float]] = None,
) -> SetFunctionHandle:
    """Handle of sum_i c_i min(g_i, cap_i); unit coefficients by default."""
    ground_set = common_ground_set(gs)
    if len(caps) != len(gs):
        raise ValidationError("expected one cap per function")
    if coefficients is None:
        coefficients = [1.0] * len(gs)
    terms = tuple(
        (float(c), Truncation(g.spec, float(cap)))
        for c, g, cap in zip(coefficients, gs, caps)
    )
    return build_function(WeightedSum(terms), ground_set, validate=False)
