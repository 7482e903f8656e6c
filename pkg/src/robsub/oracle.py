"""Exhaustive reference solvers for small instances.

Subsets are enumerated in Gray-code order so consecutive sets differ by one
element. Every enumeration is guarded by an ``OracleBudget``.
"""

import logging
import time
from dataclasses import dataclass
from typing import FrozenSet, Iterator, Optional, Sequence

from robsub.constraints import ConstraintFamily
from robsub.core import GroundSet, SetFunctionHandle, max_value, min_value
from robsub.errors import InfeasibleError, OracleBudgetError, ValidationError
from robsub.settings import ORACLE_MAX_SETS, ORACLE_TIMEOUT, TOLERANCE
from robsub.utils import sorted_tuple

logger = logging.getLogger(__name__)

PROBLEMS = ("P1", "P2", "P3", "P4")


@dataclass(frozen=True)
class OracleBudget:
    """Limits of one enumeration.

    Attributes:
        max_sets (int): Largest number of subsets that may be visited.
        timeout (float): Wall-clock limit in seconds.
    """

    max_sets: int = ORACLE_MAX_SETS
    timeout: float = ORACLE_TIMEOUT

    def __post_init__(self):
        if self.max_sets < 1 or self.timeout <= 0:
            raise ValidationError("oracle budget limits must be positive")


@dataclass(frozen=True)
class OracleResult:
    selected: FrozenSet[int]
    value: float
    examined: int


def enumerate_subsets(n: int, budget: Optional[OracleBudget] = None) -> Iterator[FrozenSet[int]]:
    """Yields all 2^n subsets of 0..n-1 in Gray-code order, starting at ∅.

    Raises:
        OracleBudgetError: If 2^n exceeds the budget or the timeout expires.
    """

    budget = budget or OracleBudget()
    if n < 0:
        raise ValidationError("n must be nonnegative")
    if 2**n > budget.max_sets:
        raise OracleBudgetError(
            f"2^{n} subsets exceed the oracle budget of {budget.max_sets}"
        )
    deadline = time.monotonic() + budget.timeout
    current = set()
    yield frozenset()
    for i in range(1, 2**n):
        bit = (i & -i).bit_length() - 1
        current ^= {bit}
        if i % 1024 == 0 and time.monotonic() > deadline:
            raise OracleBudgetError(f"oracle timed out after {budget.timeout}s")
        yield frozenset(current)


def enumerate_feasible(
    C: ConstraintFamily,
    ground_set: Optional[GroundSet] = None,
    budget: Optional[OracleBudget] = None,
) -> Iterator[FrozenSet[int]]:
    """Yields every feasible set of C in a deterministic order.

    Args:
        C (ConstraintFamily): The constraint.
        ground_set (Optional[GroundSet]): Checked against the size of C.
        budget (Optional[OracleBudget]): Enumeration limits.

    Raises:
        ValidationError: If the ground set size differs from C.
        OracleBudgetError: If the enumeration exceeds the budget.

    Examples:
        >>> from robsub.constraints import CardinalityLower
        >>> len(list(enumerate_feasible(CardinalityLower(3, 2))))
        4
    """

    if ground_set is not None and ground_set.n != C.n:
        raise ValidationError(f"ground set has {ground_set.n} elements, constraint {C.n}")
    for S in enumerate_subsets(C.n, budget):
        if C.is_feasible(S):
            yield S


def _size(fs: Sequence[SetFunctionHandle], gs: Sequence[SetFunctionHandle]) -> int:
    handles = list(fs) + list(gs)
    if not handles:
        raise ValidationError("the oracle needs at least one function")
    return handles[0].n


def brute_force_solve(
    problem: str,
    *,
    fs: Sequence[SetFunctionHandle] = (),
    gs: Sequence[SetFunctionHandle] = (),
    constraint: Optional[ConstraintFamily] = None,
    budgets: Optional[Sequence[float]] = None,
    targets: Optional[Sequence[float]] = None,
    budget: Optional[OracleBudget] = None,
) -> OracleResult:
    """Solves one of the four robust problems exactly by enumeration.

    P1 minimizes max_i f_i over C, P2 maximizes min_i g_i over C, P3 minimizes
    max_i f_i subject to g_i(X) >= c_i and P4 maximizes min_i g_i subject to
    f_i(X) <= b_i. Ties go to the lexicographically smallest sorted id tuple.

    Args:
        problem (str): One of 'P1', 'P2', 'P3', 'P4'.
        fs (Sequence[SetFunctionHandle]): The f functions (P1, P3, P4).
        gs (Sequence[SetFunctionHandle]): The g functions (P2, P3, P4).
        constraint (Optional[ConstraintFamily]): Required by P1 and P2.
        budgets (Optional[Sequence[float]]): b_i, required by P4.
        targets (Optional[Sequence[float]]): c_i, required by P3.
        budget (Optional[OracleBudget]): Enumeration limits.

    Returns:
        OracleResult: The optimal set, its objective and the number of sets
        examined.

    Raises:
        ValidationError: If the arguments do not match the problem.
        InfeasibleError: If no set satisfies the constraints.
        OracleBudgetError: If the enumeration exceeds the budget.
    """

    if problem not in PROBLEMS:
        raise ValidationError(f"problem must be one of {PROBLEMS}")
    if problem == "P1" and (not fs or constraint is None):
        raise ValidationError("P1 needs functions and a constraint")
    if problem == "P2" and (not gs or constraint is None):
        raise ValidationError("P2 needs functions and a constraint")
    if problem == "P3" and (not fs or not gs or targets is None or len(targets) != len(gs)):
        raise ValidationError("P3 needs f, g and one target per g")
    if problem == "P4" and (not fs or not gs or budgets is None or len(budgets) != len(fs)):
        raise ValidationError("P4 needs f, g and one budget per f")

    n = _size(fs, gs)
    if constraint is not None and constraint.n != n:
        raise ValidationError(f"constraint has size {constraint.n}, functions {n}")

    best_key = None
    best_set = None
    best_value = 0.0
    examined = 0
    for S in enumerate_subsets(n, budget):
        examined += 1
        if problem in ("P1", "P2") and not constraint.is_feasible(S):
            continue
        if problem == "P3":
            if any(g.value(S) < c - TOLERANCE for g, c in zip(gs, targets)):
                continue
        if problem == "P4":
            if any(f.value(S) > b + TOLERANCE for f, b in zip(fs, budgets)):
                continue
        if problem in ("P1", "P3"):
            value = max_value(fs, S)
            key = (value, sorted_tuple(S))
        else:
            value = min_value(gs, S)
            key = (-value, sorted_tuple(S))
        if best_key is None or key < best_key:
            best_key, best_set, best_value = key, S, value

    if best_set is None:
        raise InfeasibleError(f"{problem} instance has no feasible set")
    logger.debug("%s oracle examined %d sets, optimum %.6g", problem, examined, best_value)
    return OracleResult(best_set, best_value, examined)
