"""Generic cumulant recursion over an abstract model algebra.

A *model algebra* supplies a state type closed under addition, exact rational
scaling, and the diamond product.  Running the cumulant recursion

    K[1] = leaf state,    K[n+1] = 1/2 * sum_{k=1..n} K[k] <> K[n+1-k]

over such an algebra produces the model's evaluated expansion states, from
which n! * K[n] recovers the n-th conditional cumulant.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Dict, TypeVar

State = TypeVar("State")

HALF = Fraction(1, 2)


class ModelAlgebra(ABC):
    """Interface for diamond-closed state families.

    Implementations must make ``diamond`` commutative and ``add``/``scale``
    exact linear structure over the rationals (states may embed floats when
    the model itself is grid-discretized).
    """

    @abstractmethod
    def zero(self) -> Any:
        """The additive zero state."""

    @abstractmethod
    def add(self, s1: Any, s2: Any) -> Any:
        """State addition."""

    @abstractmethod
    def scale(self, s: Any, q: Fraction) -> Any:
        """Scalar multiple of a state."""

    @abstractmethod
    def diamond(self, s1: Any, s2: Any) -> Any:
        """Diamond product of two states (commutative)."""


def cumulant_states(algebra: ModelAlgebra, first: Any, n_max: int) -> Dict[int, Any]:
    """Run the cumulant recursion up to order ``n_max``.

    Args:
        algebra: the model algebra.
        first: the order-1 state (conditional expectation of the terminal value).
        n_max: highest order (>= 1).

    Returns:
        dict order -> state for orders 1..n_max.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    states: Dict[int, Any] = {1: first}
    for n in range(1, n_max):
        acc = algebra.zero()
        for k in range(1, n + 1):
            acc = algebra.add(acc, algebra.diamond(states[k], states[n + 1 - k]))
        states[n + 1] = algebra.scale(acc, HALF)
    return states
