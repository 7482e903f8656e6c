"""Robust submodular maximization: max over X of min_i g_i(X).

Both solvers reduce to submodular set cover. For a candidate level c the
truncated average (1/l)·sum_i min(g_i, c) reaches (1 - ε/l)·c only when every
g_i reaches (1 - ε)·c, so a bisection over c with a greedy cover per level
gives a bicriteria guarantee.
"""

import heapq
import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from robsub.constraints import Knapsacks
from robsub.core import (
    SetFunctionHandle,
    common_ground_set,
    min_value,
    saturated_function,
)
from robsub.errors import DomainError, InfeasibleError, ValidationError
from robsub.settings import TOLERANCE
from robsub.utils import relaxed_copies

logger = logging.getLogger(__name__)

REDUCTIONS = ("modmax", "avg", "both")

KnapsackInput = Union[Knapsacks, Sequence[Tuple[Sequence[float], float]]]


@dataclass(frozen=True)
class BicriteriaTarget:
    """Accuracy ε of a bicriteria solver and the factors it implies.

    Attributes:
        eps (float): Accuracy in (0, 1).
    """

    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValidationError(f"eps must lie in (0, 1), got {self.eps}")

    @property
    def objective_factor(self) -> float:
        return 1.0 - self.eps

    def size_factor(self, count: int) -> int:
        """Copies of the cardinality budget, ceil(ln(count / ε))."""
        return relaxed_copies(count, self.eps)

    def knapsack_factor(self, count: int, knapsacks: int) -> float:
        """Declared violation m·(ln(count / ε) + 1) of the knapsack solver."""
        return knapsacks * (math.log(count / self.eps) + 1.0)


@dataclass(frozen=True)
class ViolationReport:
    """Budget use of a knapsack solution.

    Attributes:
        ratios (Tuple[float, ...]): w_i(X) / b_i for every knapsack.
        violation (float): The largest ratio.
        bound (float): Declared bound on the violation.
        level (float): Level c reached by the bisection.
        reduction (str): Aggregation that produced the set.
    """

    ratios: Tuple[float, ...]
    violation: float
    bound: float
    level: float
    reduction: str


def _ratio(gain: float, cost: float) -> float:
    if gain <= 0.0:
        return 0.0
    return math.inf if cost <= 0.0 else gain / cost


def greedy_cover(
    h: SetFunctionHandle,
    target: float,
    cost: Optional[Sequence[float]] = None,
    candidates: Optional[Iterable[int]] = None,
) -> FrozenSet[int]:
    """Greedy submodular set cover with lazy gain updates.

    Repeatedly adds the element of largest gain per cost until h reaches
    ``target``. Ties go to the smaller element id.

    Args:
        h (SetFunctionHandle): Monotone submodular coverage function.
        target (float): Required value of h.
        cost (Optional[Sequence[float]]): Nonnegative element costs; unit
            costs by default.
        candidates (Optional[Iterable[int]]): Elements allowed in the cover;
            the whole ground set by default.

    Returns:
        FrozenSet[int]: A set with h(S) >= target - 1e-9.

    Raises:
        InfeasibleError: If the candidates cannot reach the target.
        ValidationError: If the costs are malformed.

    Examples:
        >>> from robsub.core import GroundSet, build_function
        >>> from robsub.families import Modular
        >>> h = build_function(Modular((1, 1, 1)), GroundSet(3))
        >>> sorted(greedy_cover(h, 2))
        [0, 1]
    """

    n = h.n
    costs = np.ones(n) if cost is None else np.asarray(cost, dtype=float)
    if costs.shape != (n,) or np.any(costs < 0) or not np.all(np.isfinite(costs)):
        raise ValidationError("costs must be finite, nonnegative and one per element")
    pool = sorted(range(n) if candidates is None else h.ground_set.check(candidates))

    if target <= TOLERANCE:
        return frozenset()
    if h.value(frozenset(pool)) < target - TOLERANCE:
        raise InfeasibleError(f"target {target} exceeds what the candidates can cover")

    selected = frozenset()
    current = 0.0
    heap = [(-_ratio(h.value(frozenset((j,))), costs[j]), j, 0) for j in pool]
    heapq.heapify(heap)
    stamp = 0
    while current < target - TOLERANCE:
        if not heap:
            raise InfeasibleError("the candidates were exhausted before the target")
        negative, j, seen = heapq.heappop(heap)
        if seen == stamp:
            if negative >= 0.0:
                raise InfeasibleError("no remaining element increases coverage")
            selected = selected | {j}
            current = h.value(selected)
            stamp += 1
            continue
        fresh = h.value(selected | {j}) - current
        heapq.heappush(heap, (-_ratio(fresh, costs[j]), j, stamp))
    return selected


def _check_gs(gs: Sequence[SetFunctionHandle]) -> int:
    return common_ground_set(gs).n


def _bisect(attempt, hi: float, tolerance: float, max_iters: int):
    """Largest level accepted by ``attempt``, trying ``hi`` before bisecting [0, hi]."""
    found = attempt(hi)
    if found is not None:
        return found, hi
    lo, best = 0.0, None
    for _ in range(max_iters):
        if hi - lo <= tolerance:
            break
        mid = 0.5 * (lo + hi)
        found = attempt(mid)
        if found is None:
            hi = mid
        else:
            lo, best = mid, found
    return best, lo


def saturate_robust_max(
    gs: Sequence[SetFunctionHandle],
    k: int,
    eps: float,
    tolerance: Optional[float] = None,
    max_iters: int = 60,
) -> Tuple[FrozenSet[int], float]:
    """Bicriteria robust maximization under the cardinality bound |X| <= k.

    Every level c is tested by covering the truncated average to
    (1 - ε/l)·c, accepting covers of at most k·ceil(ln(l/ε)) elements.
    One level c is shared by all functions: each g_i is truncated at the
    same c, not at a level rescaled by g_i(V), so the accepted level bounds
    min_i g_i directly.

    Args:
        gs (Sequence[SetFunctionHandle]): The functions g_1, ..., g_l.
        k (int): Cardinality budget, at least 1.
        eps (float): Accuracy in (0, 1).
        tolerance (Optional[float]): Bisection stops when the level interval
            is shorter; 1e-9·min_i g_i(V) by default.
        max_iters (int, optional): Bisection step limit. Defaults to 60.

    Returns:
        Tuple[FrozenSet[int], float]: The set, with min_i g_i >= (1 - ε)·c,
        and the accepted level c.

    Raises:
        DomainError: If every g_i(V) is zero.
        ValidationError: If k < 1 or eps is outside (0, 1).
    """

    n = _check_gs(gs)
    target = BicriteriaTarget(eps)
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    everything = frozenset(range(n))
    tops = [g.value(everything) for g in gs]
    if max(tops) <= TOLERANCE:
        raise DomainError("every function is zero on the ground set")
    hi = min(tops)
    if hi <= TOLERANCE:
        return frozenset(), 0.0

    count = len(gs)
    limit = k * target.size_factor(count)

    def attempt(c: float) -> Optional[FrozenSet[int]]:
        saturated = saturated_function(gs, [c] * count, [1.0 / count] * count)
        try:
            S = greedy_cover(saturated, (1.0 - eps / count) * c)
        except InfeasibleError:
            return None
        return S if len(S) <= limit else None

    tol = 1e-9 * hi if tolerance is None else tolerance
    best, level = _bisect(attempt, hi, tol, max_iters)
    logger.debug("saturate reached level %.6g with %d elements", level, len(best or ()))
    return (best or frozenset()), level


def _knapsack_pairs(knapsacks: KnapsackInput, n: int) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(knapsacks, Knapsacks):
        knapsacks = knapsacks.knapsacks
    if not knapsacks:
        raise ValidationError("at least one knapsack is required")
    weights = np.array([w for w, _ in knapsacks], dtype=float)
    budgets = np.array([b for _, b in knapsacks], dtype=float)
    if weights.shape != (len(budgets), n):
        raise ValidationError(f"every knapsack needs {n} weights")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValidationError("knapsack weights must be finite and nonnegative")
    if np.any(budgets <= 0) or not np.all(np.isfinite(budgets)):
        raise ValidationError("knapsack budgets must be positive")
    return weights, budgets


def aggregate_knapsacks(knapsacks: KnapsackInput, reduction: str) -> np.ndarray:
    """Single normalized knapsack: per-element max ('modmax') or mean ('avg') of w_ij / b_i.

    Examples:
        >>> aggregate_knapsacks([((1, 2), 2), ((2, 1), 2)], "modmax").tolist()
        [1.0, 1.0]
    """

    if reduction not in ("modmax", "avg"):
        raise ValidationError(f"reduction must be 'modmax' or 'avg', got {reduction!r}")
    first = knapsacks.knapsacks[0][0] if isinstance(knapsacks, Knapsacks) else knapsacks[0][0]
    weights, budgets = _knapsack_pairs(knapsacks, len(first))
    ratios = weights / budgets[:, None]
    return ratios.max(axis=0) if reduction == "modmax" else ratios.mean(axis=0)


def multiknapsack_robust_max(
    gs: Sequence[SetFunctionHandle],
    knapsacks: KnapsackInput,
    eps: float,
    reduction: str = "both",
    tolerance: Optional[float] = None,
    max_iters: int = 60,
) -> Tuple[FrozenSet[int], ViolationReport]:
    """Bicriteria robust maximization under several knapsacks.

    The knapsacks are normalized and merged into one cost, elements that
    overflow some knapsack on their own are dropped, and each level c is
    covered greedily by gain per merged cost. A cover is accepted while its
    merged cost stays within the relaxed budget.

    With m knapsacks and l functions the declared violation is
    m·(ln(l/ε) + 1). It stays within l·ln(l/ε) whenever
    m <= l·ln(l/ε) / (ln(l/ε) + 1), which covers a single knapsack for
    l >= 2 and ε <= 0.1.

    Args:
        gs (Sequence[SetFunctionHandle]): The functions g_1, ..., g_l.
        knapsacks (KnapsackInput): Pairs (w_i, b_i) or a ``Knapsacks`` family.
        eps (float): Accuracy in (0, 1).
        reduction (str, optional): 'modmax', 'avg' or 'both'. Defaults to 'both'.
        tolerance (Optional[float]): Bisection tolerance.
        max_iters (int, optional): Bisection step limit. Defaults to 60.

    Returns:
        Tuple[FrozenSet[int], ViolationReport]: The set and its budget use.
        With 'both' the candidate with the larger min_i g_i wins, the smaller
        violation breaking ties.

    Raises:
        ValidationError: If a budget is not positive or eps is invalid.
        DomainError: If every g_i(V) is zero.
    """

    if reduction not in REDUCTIONS:
        raise ValidationError(f"reduction must be one of {REDUCTIONS}")
    n = _check_gs(gs)
    weights, budgets = _knapsack_pairs(knapsacks, n)
    if reduction == "both":
        candidates = [
            multiknapsack_robust_max(gs, knapsacks, eps, r, tolerance, max_iters)
            for r in ("modmax", "avg")
        ]
        return max(candidates, key=lambda c: (min_value(gs, c[0]), -c[1].violation))

    target = BicriteriaTarget(eps)
    count, m = len(gs), len(budgets)
    ratios = weights / budgets[:, None]
    merged = ratios.max(axis=0) if reduction == "modmax" else ratios.mean(axis=0)
    allowed = [j for j in range(n) if ratios[:, j].max() <= 1.0 + TOLERANCE]
    scale = m if reduction == "modmax" else 1
    allowance = scale * math.log(count / eps) + 1.0

    everything = frozenset(range(n))
    tops = [g.value(everything) for g in gs]
    if max(tops) <= TOLERANCE:
        raise DomainError("every function is zero on the ground set")
    hi = min(g.value(frozenset(allowed)) for g in gs)

    def attempt(c: float) -> Optional[FrozenSet[int]]:
        saturated = saturated_function(gs, [c] * count, [1.0 / count] * count)
        try:
            S = greedy_cover(saturated, (1.0 - eps / count) * c, merged, allowed)
        except InfeasibleError:
            return None
        return S if math.fsum(merged[j] for j in S) <= allowance + TOLERANCE else None

    if hi <= TOLERANCE:
        best, level = frozenset(), 0.0
    else:
        tol = 1e-9 * hi if tolerance is None else tolerance
        best, level = _bisect(attempt, hi, tol, max_iters)
        best = best or frozenset()

    used = tuple(
        math.fsum(weights[i, j] for j in best) / budgets[i] for i in range(m)
    )
    report = ViolationReport(
        ratios=used,
        violation=max(used),
        bound=target.knapsack_factor(count, m),
        level=level,
        reduction=reduction,
    )
    return best, report
