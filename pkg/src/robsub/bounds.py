"""Modular lower and upper bounds of submodular functions.

Subgradients are read off permutation chains and are tight on every prefix.
Supergradients are anchored at a set X, are tight there and dominate the
function everywhere. The Lovász extension evaluates the subgradient of the
chain induced by sorting a fractional vector.
"""

import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np

from robsub.core import SetFunctionHandle
from robsub.errors import DomainError, ValidationError
from robsub.utils import as_set

DIRECTIONS = ("lower", "upper")
VARIANTS = ("grow", "shrink")


@dataclass(frozen=True)
class Chain:
    """A permutation σ of the ground set, read as the chain of its prefixes.

    Attributes:
        order (Tuple[int, ...]): σ(1), ..., σ(n).
    """

    order: Tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(j) for j in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValidationError("a chain must be a permutation of 0..n-1")
        object.__setattr__(self, "order", order)

    @property
    def n(self) -> int:
        return len(self.order)

    def prefix(self, i: int) -> FrozenSet[int]:
        """S_i = {σ(1), ..., σ(i)}."""
        if not 0 <= i <= self.n:
            raise DomainError(f"prefix length must lie in 0..{self.n}, got {i}")
        return frozenset(self.order[:i])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "Chain":
        """Sorts by decreasing value, breaking ties by ascending element id."""
        x = np.asarray(x, dtype=float)
        return cls(tuple(np.lexsort((np.arange(x.size), -x)).tolist()))

    @classmethod
    def from_set(cls, Y: Iterable[int], n: int) -> "Chain":
        """Places Y first; each block is in ascending id order."""
        Y = as_set(Y)
        rest = [j for j in range(n) if j not in Y]
        return cls(tuple(sorted(Y)) + tuple(rest))


@dataclass(frozen=True)
class ModularBound:
    """The modular function m(Y) = offset + sum_{j in Y} weights[j].

    Attributes:
        offset (float): The constant term.
        weights (Tuple[float, ...]): One weight per element.
        anchor (FrozenSet[int]): A set on which the bound is tight.
        direction (str): 'lower' for subgradients, 'upper' for supergradients.
    """

    offset: float
    weights: Tuple[float, ...]
    anchor: FrozenSet[int]
    direction: str

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "anchor", as_set(self.anchor))

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def value(self, Y: Iterable[int]) -> float:
        return self.offset + math.fsum(self.weights[j] for j in as_set(Y))


def subgradient_chain(
    f: SetFunctionHandle, chain: Chain, anchor: Optional[Iterable[int]] = None
) -> ModularBound:
    """Lower bound h with h(σ(i)) = f(σ(i) | S_{i-1}).

    Args:
        f (SetFunctionHandle): The function.
        chain (Chain): The permutation.
        anchor (Optional[Iterable[int]]): Recorded tight set; the bound is tight
            on every prefix. Defaults to the empty set.

    Returns:
        ModularBound: A 'lower' bound with zero offset.

    Raises:
        ValidationError: If the chain length differs from the ground set size.
    """

    if chain.n != f.n:
        raise ValidationError(f"chain has {chain.n} elements, expected {f.n}")
    order = np.asarray(chain.order, dtype=np.intp)
    values = f.chain_values(order)
    gains = np.diff(np.concatenate(([0.0], values)))
    weights = np.empty(f.n)
    weights[order] = gains
    return ModularBound(0.0, tuple(weights.tolist()), as_set(anchor or ()), "lower")


def subgradient_at(f: SetFunctionHandle, Y: Iterable[int]) -> ModularBound:
    """Subgradient tight at Y, built from the chain that lists Y first."""
    Y = f.ground_set.check(Y)
    return subgradient_chain(f, Chain.from_set(Y, f.n), anchor=Y)


def supergradient(f: SetFunctionHandle, X: Iterable[int], variant: str) -> ModularBound:
    """Modular upper bound of f that is tight at X.

    The 'grow' variant charges f(j | X \\ {j}) inside X and f({j}) outside;
    'shrink' charges f(j | V \\ {j}) inside X and f(j | X) outside.

    Raises:
        ValidationError: If ``variant`` is unknown.
        DomainError: If X holds ids outside the ground set.
    """

    if variant not in VARIANTS:
        raise ValidationError(f"supergradient variant must be one of {VARIANTS}")
    X = f.ground_set.check(X)
    fX = f.value(X)
    weights = np.empty(f.n)
    for j in range(f.n):
        if variant == "grow":
            w = fX - f.value(X - {j}) if j in X else f.singletons[j]
        else:
            w = f.top_gains[j] if j in X else f.value(X | {j}) - fX
        weights[j] = max(0.0, w)
    offset = fX - math.fsum(weights[j] for j in X)
    return ModularBound(offset, tuple(weights.tolist()), X, "upper")


def lovasz(
    f: SetFunctionHandle, x: Sequence[float], chain: Optional[Chain] = None
) -> Tuple[float, np.ndarray]:
    """Evaluates the Lovász extension and a subgradient at x in [0, 1]^n.

    Args:
        f (SetFunctionHandle): The function.
        x (Sequence[float]): The point.
        chain (Optional[Chain]): An ordering of x by decreasing value to use
            instead of the default id tie-break.

    Returns:
        Tuple[float, np.ndarray]: The value h·x and the subgradient h.

    Raises:
        DomainError: If x has the wrong length or leaves [0, 1]^n.
    """

    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise DomainError(f"expected a vector of length {f.n}")
    if not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0:
        raise DomainError("the Lovász extension is evaluated on [0, 1]^n")
    if chain is None:
        chain = Chain.from_vector(x)
    elif np.any(np.diff(x[list(chain.order)]) > 0):
        raise DomainError("the chain does not sort x in decreasing order")
    h = subgradient_chain(f, chain).vector
    return float(h @ x), h
