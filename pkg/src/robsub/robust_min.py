"""Robust submodular minimization: min over X in C of max_i f_i(X).

Four solver families share one result type:

* majorization-minimization (``mmin_robust_submin``) over supergradients,
* the average approximation (``aa_submin``) minimizing the mean function,
* the continuous relaxation (``cr_submin``) of the Lovász extensions with
  chain rounding,
* the ellipsoidal reduction (``ea_submin``) driven by modular certificates.
"""

import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from robsub.bounds import Chain, ModularBound, lovasz, supergradient
from robsub.constraints import ConstraintFamily, CoveringFamily, covering_polytope
from robsub.core import (
    SetFunctionHandle,
    average_function,
    common_ground_set,
    kappa_factor,
    max_value,
    total_curvature,
    worst_case_curvature,
)
from robsub.errors import (
    DomainError,
    InfeasibleError,
    RoundingError,
    UnsupportedError,
    ValidationError,
)
from robsub.families import ClusteredSqrt
from robsub.oracle import OracleBudget, enumerate_feasible
from robsub.settings import TOLERANCE
from robsub.utils import as_set, sorted_tuple

logger = logging.getLogger(__name__)

STRATEGIES = ("modmax", "avg", "both", "exhaustive")
SOLVERS = ("subgradient", "cutting_plane")

Trace = Tuple[Tuple[FrozenSet[int], float], ...]


@dataclass(frozen=True)
class RobustSolution:
    """Result of a robust minimization solver.

    Attributes:
        selected (FrozenSet[int]): The chosen feasible set.
        values (Tuple[float, ...]): f_i(selected) for every function.
        worst (float): max_i f_i(selected).
        trace (Trace): Accepted iterates with their worst values.
        method (str): Solver tag.
        bound (Optional[float]): A-priori approximation factor, when one is proven.
        continuous_value (Optional[float]): Relaxation optimum (continuous relaxation only).
        surrogate_value (Optional[float]): Worst curve-normalized surrogate (ellipsoidal only).
    """

    selected: FrozenSet[int]
    values: Tuple[float, ...]
    worst: float
    trace: Trace
    method: str
    bound: Optional[float] = None
    continuous_value: Optional[float] = None
    surrogate_value: Optional[float] = None

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _solution(
    fs: Sequence[SetFunctionHandle],
    S: FrozenSet[int],
    trace: Iterable[FrozenSet[int]],
    method: str,
    **extra,
) -> RobustSolution:
    values = tuple(f.value(S) for f in fs)
    logger.info("%s selected %d elements, worst %.6g", method, len(S), max(values))
    return RobustSolution(
        selected=S,
        values=values,
        worst=max(values),
        trace=tuple((X, max_value(fs, X)) for X in trace),
        method=method,
        **extra,
    )


def _check_problem(fs: Sequence[SetFunctionHandle], C: ConstraintFamily) -> None:
    ground_set = common_ground_set(fs)
    if C.n != ground_set.n:
        raise ValidationError(f"constraint has size {C.n}, ground set {ground_set.n}")


def _inner_factor(strategy: str, count: int, C: ConstraintFamily) -> float:
    return 1.0 if strategy == "exhaustive" else count * C.alpha


def inner_minmax_modular(
    bounds: Sequence[ModularBound],
    C: ConstraintFamily,
    strategy: str = "both",
    budget: Optional[OracleBudget] = None,
) -> FrozenSet[int]:
    """Approximately minimizes max_i (offset_i + w_i(X)) over C.

    ``modmax`` minimizes the per-element maximum weight, ``avg`` the mean
    weight, ``both`` keeps the better of the two under the true affine
    maximum and ``exhaustive`` enumerates the feasible sets.

    Args:
        bounds (Sequence[ModularBound]): Affine functions sharing a ground set.
        C (ConstraintFamily): The constraint.
        strategy (str, optional): Reduction to use. Defaults to "both".
        budget (Optional[OracleBudget]): Limits of the exhaustive strategy.

    Returns:
        FrozenSet[int]: A feasible set.

    Raises:
        ValidationError: If no bounds are given, sizes disagree or the
            strategy is unknown.
        OracleBudgetError: If exhaustive enumeration exceeds its budget.
    """

    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}")
    if not bounds:
        raise ValidationError("at least one modular bound is required")
    if any(len(b.weights) != C.n for b in bounds):
        raise ValidationError("every bound needs one weight per ground element")

    weights = np.array([b.weights for b in bounds], dtype=float)
    offsets = [b.offset for b in bounds]

    def affine_max(S: FrozenSet[int]) -> float:
        idx = sorted(S)
        return max(o + math.fsum(row[idx]) for o, row in zip(offsets, weights))

    if strategy == "exhaustive":
        best = min(
            enumerate_feasible(C, budget=budget),
            key=lambda S: (affine_max(S), sorted_tuple(S)),
        )
        return best

    candidates: List[FrozenSet[int]] = []
    if strategy in ("modmax", "both"):
        candidates.append(C.min_modular(np.clip(weights.max(axis=0), 0.0, None)))
    if strategy in ("avg", "both"):
        candidates.append(C.min_modular(np.clip(weights.mean(axis=0), 0.0, None)))
    return min(candidates, key=affine_max)


def mmin_robust_submin(
    fs: Sequence[SetFunctionHandle],
    C: ConstraintFamily,
    strategy: str = "both",
    max_iters: int = 50,
    rel_tol: float = 1e-6,
    budget: Optional[OracleBudget] = None,
) -> RobustSolution:
    """Majorization-minimization for the robust minimization problem.

    Starts from grow supergradients at ∅ and continues from shrink
    supergradients at the current iterate. A candidate is accepted only
    when the worst value strictly decreases by more than ``rel_tol``.

    Returns:
        RobustSolution: The final iterate. ``bound`` is l·α·K(|X|, κ) with κ
        the worst-case curvature, or K(|X|, κ) for the exhaustive strategy.
    """

    _check_problem(fs, C)
    start = [supergradient(f, frozenset(), "grow") for f in fs]
    X = inner_minmax_modular(start, C, strategy, budget)
    best = max_value(fs, X)
    trace = [X]
    logger.debug("mmin iteration 0: worst %.6g", best)

    for it in range(1, max_iters):
        if best <= TOLERANCE:
            break
        bounds = [supergradient(f, X, "shrink") for f in fs]
        Y = inner_minmax_modular(bounds, C, strategy, budget)
        value = max_value(fs, Y)
        if value >= best - rel_tol * best:
            break
        X, best = Y, value
        trace.append(X)
        logger.debug("mmin iteration %d: worst %.6g", it, best)

    kappa = worst_case_curvature(fs)
    bound = _inner_factor(strategy, len(fs), C) * kappa_factor(max(len(X), 1), kappa)
    return _solution(fs, X, trace, "mmin", bound=bound)


def aa_submin(
    fs: Sequence[SetFunctionHandle],
    C: ConstraintFamily,
    strategy: str = "both",
    max_iters: int = 50,
    budget: Optional[OracleBudget] = None,
) -> RobustSolution:
    """Average approximation: MMin on f_avg, reported under max_i f_i."""

    _check_problem(fs, C)
    favg = average_function(fs)
    inner = mmin_robust_submin([favg], C, strategy, max_iters, budget=budget)
    try:
        kappa = total_curvature(favg)
    except DomainError:
        kappa = 0.0
    factor = len(fs) * _inner_factor(strategy, 1, C)
    bound = factor * kappa_factor(max(len(inner.selected), 1), kappa)
    return _solution(fs, inner.selected, (X for X, _ in inner.trace), "aa", bound=bound)


def _max_lovasz(fs: Sequence[SetFunctionHandle], x: np.ndarray) -> Tuple[float, np.ndarray]:
    best_value, best_grad = -math.inf, None
    for f in fs:
        value, grad = lovasz(f, x)
        if value > best_value:
            best_value, best_grad = value, grad
    return best_value, best_grad


def _project(x: np.ndarray, covering: CoveringFamily, sweeps: int, tol: float) -> np.ndarray:
    """Cyclic projections onto the violated covering halfspaces, clipped to the box."""
    x = np.clip(x, 0.0, 1.0)
    blocks = [(np.array(sorted(W), dtype=np.intp), b) for W, b in covering.constraints]
    for _ in range(sweeps):
        for idx, b in blocks:
            deficit = b - x[idx].sum()
            if deficit > 0:
                x[idx] += deficit / idx.size
                np.clip(x, 0.0, 1.0, out=x)
        if covering.max_violation(x) <= tol:
            break
    return x


def _relax_subgradient(
    fs: Sequence[SetFunctionHandle],
    covering: CoveringFamily,
    max_iters: int,
    sweeps: int,
    tol: float,
) -> Tuple[np.ndarray, float]:
    n = fs[0].n
    x = _project(np.ones(n), covering, sweeps, tol)
    value, grad = _max_lovasz(fs, x)
    best_x, best_value = x.copy(), value
    norm = float(np.linalg.norm(grad))
    scale = value / norm if norm > 0 else 0.0
    for t in range(1, max_iters + 1):
        if norm <= 0.0:
            break
        x = _project(x - (scale / math.sqrt(t)) * grad / norm, covering, sweeps, tol)
        value, grad = _max_lovasz(fs, x)
        norm = float(np.linalg.norm(grad))
        if value < best_value:
            best_x, best_value = x.copy(), value
    return best_x, best_value


def _relax_cutting_plane(
    fs: Sequence[SetFunctionHandle],
    covering: CoveringFamily,
    max_iters: int,
    tol: float,
) -> Tuple[np.ndarray, float]:
    """Kelley's method on max_i f̂_i with the LPs solved by HiGHS."""
    n = fs[0].n
    cover_rows = []
    cover_rhs = []
    for W, b in covering.constraints:
        row = np.zeros(n + 1)
        row[sorted(W)] = -1.0
        cover_rows.append(row)
        cover_rhs.append(-float(b))
    objective = np.zeros(n + 1)
    objective[n] = 1.0
    box = [(0.0, 1.0)] * n + [(None, None)]

    x = np.ones(n)
    value, grad = _max_lovasz(fs, x)
    best_x, best_value = x.copy(), value
    cuts = []
    for _ in range(max_iters):
        cut = np.append(grad, -1.0)
        cuts.append(cut)
        result = linprog(
            objective,
            A_ub=np.array(cuts + cover_rows),
            b_ub=np.array([0.0] * len(cuts) + cover_rhs),
            bounds=box,
            method="highs",
        )
        if result.status != 0:
            raise InfeasibleError(f"relaxation LP failed: {result.message}")
        x = np.clip(result.x[:n], 0.0, 1.0)
        lower = float(result.x[n])
        value, grad = _max_lovasz(fs, x)
        if value < best_value:
            best_x, best_value = x.copy(), value
        if best_value - lower <= tol * max(1.0, abs(lower)):
            break
    return best_x, best_value


def round_chain(
    fs: Sequence[SetFunctionHandle], x: Sequence[float], C: ConstraintFamily
) -> FrozenSet[int]:
    """Rounds a fractional point to a feasible set.

    Takes the shortest prefix of x sorted in decreasing order that contains
    a feasible set, then prunes it with the modular oracle, charging
    max_i f_i({j}) inside the prefix and a prohibitive weight outside.

    Raises:
        RoundingError: If no prefix contains a feasible set.
    """

    order = Chain.from_vector(x).order
    prefix = set()
    if not C.contains_feasible_subset(prefix):
        for j in order:
            prefix.add(j)
            if C.contains_feasible_subset(prefix):
                break
        else:
            raise RoundingError("no prefix of the rounding chain contains a feasible set")
    inside = [max(f.singletons[j] for f in fs) for j in range(C.n)]
    outside = 1.0 + math.fsum(inside[j] for j in prefix)
    weights = [inside[j] if j in prefix else outside for j in range(C.n)]
    S = C.min_modular(weights)
    if not S <= prefix:
        raise RoundingError("pruning left the rounding prefix")
    return S


def cr_submin(
    fs: Sequence[SetFunctionHandle],
    covering: Optional[CoveringFamily],
    C: ConstraintFamily,
    solver: str = "subgradient",
    max_iters: int = 300,
    sweeps: int = 200,
    tol: float = 1e-7,
) -> RobustSolution:
    """Continuous relaxation with chain rounding.

    Minimizes max_i f̂_i(x) over the covering polytope, either by projected
    subgradient descent with steps c/√t or by an exact cutting-plane method,
    and rounds the best point with ``round_chain``.

    Args:
        fs (Sequence[SetFunctionHandle]): The functions.
        covering (Optional[CoveringFamily]): Covering description; the
            built-in one of C when None.
        C (ConstraintFamily): The constraint.
        solver (str, optional): "subgradient" or "cutting_plane".
        max_iters (int, optional): Iteration limit. Defaults to 300.
        sweeps (int, optional): Projection sweeps per step. Defaults to 200.
        tol (float, optional): Covering violation tolerance. Defaults to 1e-7.

    Returns:
        RobustSolution: ``continuous_value`` holds the relaxation value and
        ``bound`` the rounding factor max_W |W| - b_W + 1.

    Raises:
        UnsupportedError: If no covering description is available.
        RoundingError: If the covering description does not match C.
    """

    _check_problem(fs, C)
    if solver not in SOLVERS:
        raise ValidationError(f"solver must be one of {SOLVERS}")
    covering = covering_polytope(C, covering)
    if solver == "subgradient":
        x, continuous = _relax_subgradient(fs, covering, max_iters, sweeps, tol)
    else:
        x, continuous = _relax_cutting_plane(fs, covering, max_iters, tol)
    logger.debug("relaxation value %.6g after %s", continuous, solver)
    S = round_chain(fs, x, C)
    return _solution(
        fs, S, (S,), "cr", bound=float(covering.factor), continuous_value=continuous
    )


@dataclass(frozen=True)
class EACertificate:
    """Modular weights w with sqrt(w(X)) <= f(X) for every X.

    Attributes:
        weights (Tuple[float, ...]): Nonnegative weight per element.
        curvature (float): Curvature of the certified function, in [0, 1].
        exact (bool): Whether f(X) = sqrt(w(X)) holds everywhere.
    """

    weights: Tuple[float, ...]
    curvature: float = 0.0
    exact: bool = False

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ValidationError("certificate weights must be finite and nonnegative")
        if not 0.0 <= self.curvature <= 1.0:
            raise ValidationError("certificate curvature must lie in [0, 1]")
        object.__setattr__(self, "weights", weights)

    def sqrt_value(self, S: Iterable[int]) -> float:
        return math.sqrt(math.fsum(self.weights[j] for j in as_set(S)))

    def surrogate(self, f: SetFunctionHandle, S: Iterable[int]) -> float:
        """Curve-normalized value (1 - κ)·sqrt(w(S)) + κ·sum_{j in S} f({j})."""
        S = as_set(S)
        singles = math.fsum(f.singletons[j] for j in S)
        return (1.0 - self.curvature) * self.sqrt_value(S) + self.curvature * singles

    def verify(self, f: SetFunctionHandle, samples: int = 200, seed: int = 0) -> None:
        """Samples sets and checks the certificate inequality (and equality if exact).

        Raises:
            ValidationError: If the certificate is violated.
        """

        if len(self.weights) != f.n:
            raise ValidationError(f"certificate has {len(self.weights)} weights, expected {f.n}")
        rng = np.random.default_rng(seed)
        checked = [frozenset(), frozenset(range(f.n))]
        checked += [frozenset((j,)) for j in range(f.n)]
        for _ in range(samples):
            mask = rng.random(f.n) < rng.random()
            checked.append(frozenset(np.flatnonzero(mask).tolist()))
        for S in checked:
            lhs, rhs = self.sqrt_value(S), f.value(S)
            slack = 1e-9 * max(1.0, rhs)
            if lhs > rhs + slack:
                raise ValidationError(f"certificate exceeds f on {sorted(S)}: {lhs} > {rhs}")
            if self.exact and abs(lhs - rhs) > slack:
                raise ValidationError(f"certificate flagged exact but differs on {sorted(S)}")

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "curvature": self.curvature, "exact": self.exact}

    @classmethod
    def from_dict(cls, data: dict) -> "EACertificate":
        return cls(
            weights=tuple(data["weights"]),
            curvature=float(data.get("curvature", 0.0)),
            exact=bool(data.get("exact", False)),
        )


def clustered_sqrt_certificate(f: SetFunctionHandle) -> EACertificate:
    """Certificate of a clustered square-root function whose blocks cover V.

    The block weights certify sqrt(w(X)) <= sum_C sqrt(w(X ∩ C)); with a
    single block the certificate is exact.

    Raises:
        UnsupportedError: If f is not a clustered square-root function or its
            blocks miss an element.
    """

    spec = f.spec
    if not isinstance(spec, ClusteredSqrt):
        raise UnsupportedError(f"no certificate is known for {spec.kind} functions")
    if not spec.covers(f.n):
        raise UnsupportedError("the clusters do not cover the ground set")
    try:
        kappa = total_curvature(f)
    except DomainError:
        kappa = 0.0
    exact = len(spec.clusters) == 1
    return EACertificate(spec.weights, kappa, exact)


def ea_submin(
    fs: Sequence[SetFunctionHandle],
    certificates: Sequence[EACertificate],
    C: ConstraintFamily,
    strategy: str = "both",
    verify: bool = True,
    budget: Optional[OracleBudget] = None,
) -> RobustSolution:
    """Ellipsoidal reduction: min-max of sqrt(w_i(X)) solved as min-max of w_i(X).

    Returns:
        RobustSolution: ``bound`` is sqrt(l·α) (sqrt(1) for the exhaustive
        strategy) when every certificate is exact, otherwise None.

    Raises:
        ValidationError: If a certificate is malformed or violated.
    """

    _check_problem(fs, C)
    if len(certificates) != len(fs):
        raise ValidationError("expected one certificate per function")
    if verify:
        for f, cert in zip(fs, certificates):
            cert.verify(f)
    bounds = [
        ModularBound(0.0, cert.weights, frozenset(), "upper") for cert in certificates
    ]
    S = inner_minmax_modular(bounds, C, strategy, budget)
    bound = None
    if all(cert.exact for cert in certificates):
        bound = math.sqrt(_inner_factor(strategy, len(fs), C))
    surrogate = max(cert.surrogate(f, S) for f, cert in zip(fs, certificates))
    return _solution(fs, S, (S,), "ea", bound=bound, surrogate_value=surrogate)


def ea_aa_submin(
    fs: Sequence[SetFunctionHandle],
    certificates: Sequence[EACertificate],
    C: ConstraintFamily,
    strategy: str = "both",
    verify: bool = True,
) -> RobustSolution:
    """Ellipsoidal reduction applied to f_avg with the averaged certificate.

    Since sqrt(w_i) <= f_i, the weights sum_i w_i / l^2 certify f_avg.
    """

    _check_problem(fs, C)
    if len(certificates) != len(fs):
        raise ValidationError("expected one certificate per function")
    if verify:
        for f, cert in zip(fs, certificates):
            cert.verify(f)
    count = len(fs)
    merged = np.sum([cert.weights for cert in certificates], axis=0) / count**2
    favg = average_function(fs)
    inner = ea_submin([favg], [EACertificate(tuple(merged.tolist()))], C, strategy, verify=False)
    return _solution(fs, inner.selected, (inner.selected,), "ea_aa")
