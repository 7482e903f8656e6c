"""Robust submodular cover and robust submodular knapsack.

The cover problem minimizes max_i f_i(X) subject to g_j(X) >= c_j for every
j; the knapsack problem maximizes min_j g_j(X) subject to f_i(X) <= b_i.
Both are solved with majorization of the f side, and each can be obtained
from a solver of the other through a bisection on the scalar budget or
target (``dual_convert``).
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, FrozenSet, Optional, Sequence, Tuple

from robsub.bounds import supergradient
from robsub.core import (
    SetFunctionHandle,
    average_function,
    combine,
    common_ground_set,
    kappa_factor,
    max_value,
    min_value,
    saturated_function,
    total_curvature,
    worst_case_curvature,
)
from robsub.errors import DomainError, InfeasibleError, ValidationError
from robsub.families import integer_valued
from robsub.robust_max import BicriteriaTarget, greedy_cover, multiknapsack_robust_max
from robsub.robust_min import EACertificate, clustered_sqrt_certificate
from robsub.settings import TOLERANCE
from robsub.utils import harmonic

logger = logging.getLogger(__name__)

METHODS = ("mmin", "aa", "ea")
DIRECTIONS = ("scsk->scsc", "scsc->scsk")

Trace = Tuple[Tuple[FrozenSet[int], float], ...]
KnapsackSolver = Callable[
    [Sequence[SetFunctionHandle], Sequence[SetFunctionHandle], Sequence[float]],
    FrozenSet[int],
]


@dataclass(frozen=True)
class BicriteriaSolution:
    """Result of a cover or knapsack solver.

    Attributes:
        selected (FrozenSet[int]): The chosen set.
        objective (float): max_i f_i for cover problems, min_j g_j for knapsack problems.
        f_values (Tuple[float, ...]): f_i(selected).
        g_values (Tuple[float, ...]): g_j(selected).
        sigma (float): max_i f_i / b_i floored at 1; 1 when there are no budgets.
        rho (float): min_j g_j / c_j over positive targets, capped at 1; 1 when
            there are no targets.
        calls (int): Number of inner solver calls.
        method (str): Solver tag.
        bound (Optional[Tuple[float, float]]): Declared (objective factor,
            constraint factor) when one is proven.
        trace (Trace): Accepted outer iterates and their objectives.
    """

    selected: FrozenSet[int]
    objective: float
    f_values: Tuple[float, ...]
    g_values: Tuple[float, ...]
    sigma: float
    rho: float
    calls: int
    method: str
    bound: Optional[Tuple[float, float]] = None
    trace: Trace = ()


def _bicriteria(
    problem: str,
    fs: Sequence[SetFunctionHandle],
    gs: Sequence[SetFunctionHandle],
    S: FrozenSet[int],
    calls: int,
    method: str,
    budgets: Optional[Sequence[float]] = None,
    targets: Optional[Sequence[float]] = None,
    bound: Optional[Tuple[float, float]] = None,
    trace: Trace = (),
) -> BicriteriaSolution:
    f_values = tuple(f.value(S) for f in fs)
    g_values = tuple(g.value(S) for g in gs)
    sigma = 1.0
    if budgets is not None:
        sigma = max([1.0] + [v / b for v, b in zip(f_values, budgets)])
    rho = 1.0
    if targets is not None:
        rho = min([1.0] + [v / c for v, c in zip(g_values, targets) if c > 0])
    objective = max(f_values) if problem == "scsc" else min(g_values)
    logger.info(
        "%s %s: objective %.6g, sigma %.3g, rho %.3g", problem, method, objective, sigma, rho
    )
    return BicriteriaSolution(
        selected=S,
        objective=objective,
        f_values=f_values,
        g_values=g_values,
        sigma=sigma,
        rho=rho,
        calls=calls,
        method=method,
        bound=bound,
        trace=trace,
    )


def _check_sides(fs: Sequence[SetFunctionHandle], gs: Sequence[SetFunctionHandle]) -> int:
    if not fs or not gs:
        raise ValidationError("both function lists must be nonempty")
    return common_ground_set(list(fs) + list(gs)).n


def _positive(values: Sequence[float], count: int, name: str) -> Tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if len(values) != count:
        raise ValidationError(f"expected {count} {name}, got {len(values)}")
    if any(not math.isfinite(v) or v <= 0 for v in values):
        raise ValidationError(f"{name} must be positive")
    return values


def _checked_targets(gs: Sequence[SetFunctionHandle], targets: Sequence[float]) -> Tuple[float, ...]:
    targets = tuple(float(c) for c in targets)
    if len(targets) != len(gs):
        raise ValidationError(f"expected {len(gs)} targets, got {len(targets)}")
    everything = frozenset(range(gs[0].n))
    for i, (g, c) in enumerate(zip(gs, targets)):
        if not math.isfinite(c) or c < 0:
            raise ValidationError("targets must be finite and nonnegative")
        if c > g.value(everything) + TOLERANCE:
            raise InfeasibleError(f"target {c} of g_{i} exceeds g_{i}(V)")
    return targets


def _certificates(
    fs: Sequence[SetFunctionHandle], certificates: Optional[Sequence[EACertificate]]
) -> Sequence[EACertificate]:
    if certificates is None:
        certificates = [clustered_sqrt_certificate(f) for f in fs]
    if len(certificates) != len(fs):
        raise ValidationError("expected one certificate per function")
    for f, cert in zip(fs, certificates):
        cert.verify(f)
    return certificates


def _majorized_knapsack(
    fs: Sequence[SetFunctionHandle],
    gs: Sequence[SetFunctionHandle],
    budgets: Sequence[float],
    eps: float,
    max_iters: int,
) -> Tuple[FrozenSet[int], Trace, int]:
    """Replaces each f_i by a supergradient and solves the knapsack subproblem.

    Grow supergradients at ∅ seed the loop, shrink supergradients at the
    current set follow, and a new set is kept only if min_j g_j improves.
    """

    anchor, variant = frozenset(), "grow"
    best, best_value = frozenset(), -math.inf
    trace = []
    calls = 0
    for _ in range(max_iters):
        bounds = [supergradient(f, anchor, variant) for f in fs]
        rooms = [budget - bound.offset for bound, budget in zip(bounds, budgets)]
        if min(rooms) <= TOLERANCE:
            break
        knapsacks = [(bound.weights, room) for bound, room in zip(bounds, rooms)]
        S, report = multiknapsack_robust_max(gs, knapsacks, eps, "both")
        calls += 1
        value = min_value(gs, S)
        logger.debug("knapsack subproblem %d: value %.6g, violation %.3g", calls, value, report.violation)
        if value <= best_value + TOLERANCE:
            break
        best, best_value = S, value
        trace.append((S, value))
        anchor, variant = S, "shrink"
    return best, tuple(trace), calls


def robust_scsk(
    fs: Sequence[SetFunctionHandle],
    gs: Sequence[SetFunctionHandle],
    budgets: Sequence[float],
    method: str = "mmin",
    eps: float = 0.1,
    certificates: Optional[Sequence[EACertificate]] = None,
    max_iters: int = 20,
) -> BicriteriaSolution:
    """Maximizes min_j g_j(X) subject to f_i(X) <= b_i.

    ``mmin`` inflates every budget by K(n, κ) and majorizes each f_i,
    ``aa`` majorizes the single normalized average sum_i f_i / (l·b_i) and
    ``ea`` replaces each constraint by the certificate knapsack w_i(X) <= b_i².

    Args:
        fs (Sequence[SetFunctionHandle]): Cost functions f_1, ..., f_l.
        gs (Sequence[SetFunctionHandle]): Utility functions g_1, ..., g_k.
        budgets (Sequence[float]): Positive budgets b_i.
        method (str, optional): 'mmin', 'aa' or 'ea'. Defaults to 'mmin'.
        eps (float, optional): Accuracy in (0, 1). Defaults to 0.1.
        certificates (Optional[Sequence[EACertificate]]): Used by 'ea';
            derived from clustered square-root functions when omitted.
        max_iters (int, optional): Outer iteration limit. Defaults to 20.

    Returns:
        BicriteriaSolution: ``bound`` holds (1 - ε, declared violation).

    Raises:
        ValidationError: If a budget is not positive or the method is unknown.
    """

    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}")
    n = _check_sides(fs, gs)
    budgets = _positive(budgets, len(fs), "budgets")
    target = BicriteriaTarget(eps)
    count, k = len(fs), len(gs)

    if method == "mmin":
        factor = kappa_factor(n, worst_case_curvature(fs))
        inflated = [factor * b for b in budgets]
        S, trace, calls = _majorized_knapsack(fs, gs, inflated, eps, max_iters)
        declared = factor * target.knapsack_factor(k, count)
    elif method == "aa":
        h = combine(fs, [1.0 / (count * b) for b in budgets])
        try:
            factor = kappa_factor(n, total_curvature(h))
        except DomainError:
            factor = 1.0
        S, trace, calls = _majorized_knapsack([h], gs, [factor], eps, max_iters)
        declared = count * factor * target.knapsack_factor(k, 1)
    else:
        certificates = _certificates(fs, certificates)
        knapsacks = [(cert.weights, b * b) for cert, b in zip(certificates, budgets)]
        S, _ = multiknapsack_robust_max(gs, knapsacks, eps, "both")
        calls = 1
        trace = ((S, min_value(gs, S)),)
        declared = None
        if all(cert.exact for cert in certificates):
            declared = math.sqrt(target.knapsack_factor(k, count))

    bound = None if declared is None else (target.objective_factor, declared)
    return _bicriteria("scsk", fs, gs, S, calls, method, budgets=budgets, bound=bound, trace=trace)


def robust_scsc(
    fs: Sequence[SetFunctionHandle],
    gs: Sequence[SetFunctionHandle],
    targets: Sequence[float],
    method: str = "aa",
    eps: float = 0.1,
    certificates: Optional[Sequence[EACertificate]] = None,
    max_iters: int = 20,
) -> BicriteriaSolution:
    """Minimizes max_i f_i(X) subject to g_j(X) >= c_j.

    ``aa`` covers sum_j min(g_j, c_j) up to sum_j c_j greedily, charging the
    supergradient weights of f_avg and re-anchoring at each new cover while
    f_avg decreases. ``mmin`` and ``ea`` bisect over a common budget with the
    matching ``robust_scsk`` method.

    Returns:
        BicriteriaSolution: For ``aa`` with integer-valued g_j and integer
        targets, ``bound`` holds (l·K(n, κ_avg)·H(max_v sum_j min(g_j(v), c_j)), 1);
        with fractional data no factor is declared. For the bisected methods it
        holds ((1 + ε)·σ, 1 - ε) with σ the declared knapsack violation.

    Raises:
        InfeasibleError: If some c_j exceeds g_j(V).
        ValidationError: If the method is unknown or a target is negative.
    """

    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}")
    n = _check_sides(fs, gs)
    targets = _checked_targets(gs, targets)
    if all(c <= 0 for c in targets):
        return _bicriteria("scsc", fs, gs, frozenset(), 0, method, targets=targets)

    if method != "aa":
        target = BicriteriaTarget(eps)

        declared = []

        def inner(fs_, gs_, budgets_):
            solution = robust_scsk(fs_, gs_, budgets_, method, eps, certificates, max_iters)
            declared.append(solution.bound)
            return solution.selected

        solution = dual_convert("scsk->scsc", fs, gs, targets, inner, eps, rho=target.objective_factor)
        bound = None
        if not declared:
            bound = (1.0, 1.0)
        elif all(b is not None for b in declared):
            sigma = max(b[1] for b in declared)
            bound = (sigma * (1.0 + eps), target.objective_factor)
        return replace(solution, method=method, bound=bound)

    favg = average_function(fs)
    active = [(g, c) for g, c in zip(gs, targets) if c > 0]
    cover = saturated_function([g for g, _ in active], [c for _, c in active])
    total = math.fsum(c for _, c in active)

    anchor, variant = frozenset(), "grow"
    best, best_value = None, math.inf
    trace = []
    calls = 0
    for _ in range(max_iters):
        costs = supergradient(favg, anchor, variant).weights
        S = greedy_cover(cover, total, cost=costs)
        calls += 1
        value = favg.value(S)
        if value >= best_value - TOLERANCE:
            break
        best, best_value = S, value
        trace.append((S, max_value(fs, S)))
        anchor, variant = S, "shrink"

    bound = None
    if all(integer_valued(g.spec) for g, _ in active) and all(c.is_integer() for _, c in active):
        try:
            factor = kappa_factor(n, total_curvature(favg))
        except DomainError:
            factor = 1.0
        peak = max(math.fsum(min(g.singletons[v], c) for g, c in active) for v in range(n))
        bound = (len(fs) * factor * harmonic(peak), 1.0)
    return _bicriteria(
        "scsc", fs, gs, best, calls, "aa", targets=targets, bound=bound, trace=tuple(trace)
    )


def call_bound(ratio: float, eps: float) -> int:
    """Bisection call limit ceil(log2(ratio / ε)), at least one."""
    return max(1, math.ceil(math.log2(ratio / eps)))


def dual_convert(
    direction: str,
    fs: Sequence[SetFunctionHandle],
    gs: Sequence[SetFunctionHandle],
    values: Sequence[float],
    inner: KnapsackSolver,
    eps: float,
    sigma: float = 1.0,
    rho: float = 1.0,
) -> BicriteriaSolution:
    """Solves one problem by bisection over calls to a solver of the other.

    For 'scsk->scsc' ``values`` are the cover targets c_j and ``inner`` is a
    knapsack solver called as inner(fs, g_j / c_j, [b] * l); a call succeeds
    when every normalized g_j reaches ``rho``. Elements with max_i f_i(v) = 0
    are free; when they meet every target they are returned without a call.
    Otherwise the budget b is bisected over [smallest positive max_i f_i(v),
    max_i f_i(V)] and the cheapest successful set is kept, V being the
    fallback.

    For 'scsc->scsk' ``values`` are the budgets b_i and ``inner`` is a cover
    solver called as inner(f_i / b_i, gs, [c] * k); a call succeeds when every
    normalized f_i stays within ``sigma``. The target c is bisected from the
    value of the best budget-feasible singleton, or ε·min_j g_j(V) when that
    value is zero, up to min_j g_j(V). The best successful set is kept, the
    singleton being the fallback.

    Bisection stops once hi - lo <= ε·lo, so at most
    ``call_bound(hi / lo, eps)`` calls are made.

    Args:
        direction (str): 'scsk->scsc' or 'scsc->scsk'.
        fs (Sequence[SetFunctionHandle]): The f functions.
        gs (Sequence[SetFunctionHandle]): The g functions.
        values (Sequence[float]): Targets or budgets, per direction.
        inner (KnapsackSolver): The solver of the other problem.
        eps (float): Accuracy in (0, 1).
        sigma (float, optional): Declared constraint factor of ``inner``.
        rho (float, optional): Declared objective factor of ``inner``.

    Returns:
        BicriteriaSolution: With the call count and the declared pair.

    Raises:
        ValidationError: If the direction is unknown or a budget is not positive.
        InfeasibleError: If some c_j exceeds g_j(V).
    """

    if direction not in DIRECTIONS:
        raise ValidationError(f"direction must be one of {DIRECTIONS}")
    BicriteriaTarget(eps)
    n = _check_sides(fs, gs)
    everything = frozenset(range(n))
    calls = 0

    if direction == "scsk->scsc":
        targets = _checked_targets(gs, values)
        active = [(g, c) for g, c in zip(gs, targets) if c > 0]
        if not active:
            return _bicriteria("scsc", fs, gs, frozenset(), 0, "dual", targets=targets)
        normalized = [combine([g], [1.0 / c]) for g, c in active]
        prices = [max(f.singletons[v] for f in fs) for v in range(n)]
        free = frozenset(v for v in range(n) if prices[v] <= TOLERANCE)
        if min_value(normalized, free) >= 1.0 - TOLERANCE:
            logger.info("scsk->scsc: %d free elements meet every target", len(free))
            return _bicriteria(
                "scsc", fs, gs, free, 0, "dual", targets=targets, bound=(1.0, 1.0)
            )
        lo = min(prices[v] for v in range(n) if v not in free)
        hi = max(f.value(everything) for f in fs)
        best, best_cost = everything, max_value(fs, everything)

        def attempt(b: float) -> bool:
            nonlocal best, best_cost, calls
            S = inner(fs, normalized, [b] * len(fs))
            calls += 1
            if min_value(normalized, S) < rho - TOLERANCE:
                return False
            cost = max_value(fs, S)
            if cost < best_cost:
                best, best_cost = S, cost
            return True

        while hi - lo > eps * lo:
            mid = 0.5 * (lo + hi)
            if attempt(mid):
                hi = mid
            else:
                lo = mid
        if calls == 0:
            attempt(hi)
        logger.info("scsk->scsc bisection used %d calls", calls)
        return _bicriteria(
            "scsc", fs, gs, best, calls, "dual", targets=targets, bound=(sigma * (1.0 + eps), rho)
        )

    budgets = _positive(values, len(fs), "budgets")
    normalized = [combine([f], [1.0 / b]) for f, b in zip(fs, budgets)]
    hi = min(g.value(everything) for g in gs)
    singles = [
        frozenset((v,))
        for v in range(n)
        if max(f.singletons[v] for f in normalized) <= 1.0 + TOLERANCE
    ]
    best = max(singles, key=lambda S: min_value(gs, S), default=frozenset())
    best_value = min_value(gs, best)
    if hi <= TOLERANCE:
        logger.info("scsc->scsk: some g_j is zero on the ground set")
        return _bicriteria("scsk", fs, gs, best, 0, "dual", budgets=budgets, bound=(1.0, 1.0))
    lo = best_value if best_value > TOLERANCE else eps * hi

    def attempt(c: float) -> bool:
        nonlocal best, best_value, calls
        S = inner(normalized, gs, [c] * len(gs))
        calls += 1
        if max_value(normalized, S) > sigma + TOLERANCE:
            return False
        value = min_value(gs, S)
        if value > best_value:
            best, best_value = S, value
        return True

    while hi - lo > eps * lo:
        mid = 0.5 * (lo + hi)
        if attempt(mid):
            lo = mid
        else:
            hi = mid
    if calls == 0:
        attempt(hi)
    logger.info("scsc->scsk bisection used %d calls", calls)
    return _bicriteria(
        "scsk", fs, gs, best, calls, "dual", budgets=budgets, bound=((1.0 - eps) * rho, sigma)
    )
