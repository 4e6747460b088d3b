"""Second Wiener chaos: kernel calculus on a discretized simplex.

A double stochastic integral A = I_2(f) with kernel f supported on the
simplex {0 <= w < v <= T} closes under the diamond product through the
one-variable contraction

    (f ~o~ g)(r, s) = int_{max(r,s)}^T [ f(r,v) g(s,v) + g(r,v) f(s,v) ] dv

(the new martingale kernel) and the full contraction <f, g> over the simplex
(the deterministic part).  States carry both pieces on a uniform grid with
left-point quadrature, so running the cumulant recursion and reading off
n! * scalar gives the cumulants of A.

The third cumulant equals 3 <f, f ~o~ f>: the factor 3 = 3!/2 comes from the
recursion (two equal cross terms at order 3), as the constant-kernel check
kappa_3 = 1 vs <f, f ~o~ f> = 1/3 pins down; dropping it is a known trap.

Cumulants admit an independent spectral route: symmetrizing f to a kernel
operator G, kappa_n = 2^{n-1} (n-1)! tr(G^n).  Both routes are implemented
and deliberately kept separate (the tests play them against each other).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, List

import numpy as np

__all__ = [
    "Chaos2State",
    "Chaos2Algebra",
    "chaos2_diamond",
    "chaos2_cumulants",
    "eigenvalue_cumulants",
    "constant_kernel",
    "kernel_from_function",
]

from fractions import Fraction

from .base import ModelAlgebra, cumulant_states


@dataclass(frozen=True)
class Chaos2State:
    """Kernel-plus-scalar state on the discretized simplex.

    ``kernel[i, j]`` approximates f(w_i, w_j) at left points w_i = i h,
    h = T / M, and is strictly upper triangular (support w < v); ``scalar``
    is the accumulated deterministic part at the evaluation time.
    """

    kernel: np.ndarray
    scalar: float
    T: float

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("kernel must be a square matrix")
        if not np.allclose(k, np.triu(k, 1)):
            raise ValueError("kernel must be strictly upper triangular (w < v)")
        object.__setattr__(self, "kernel", np.triu(k, 1))

    @property
    def M(self) -> int:
        return self.kernel.shape[0]

    @property
    def h(self) -> float:
        return self.T / self.M

    def _check_grid(self, other: "Chaos2State") -> None:
        if self.M != other.M or abs(self.T - other.T) > 1e-12:
            raise ValueError(
                f"grid mismatch: ({self.M}, T={self.T}) vs ({other.M}, T={other.T})"
            )


def constant_kernel(T: float, M: int, value: float = 1.0) -> Chaos2State:
    """State with f == value on the simplex (zero deterministic part)."""
    k = np.triu(np.full((M, M), float(value)), 1)
    return Chaos2State(kernel=k, scalar=0.0, T=T)


def kernel_from_function(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray], T: float, M: int
) -> Chaos2State:
    """Sample f(w, v) at left points on the strict upper triangle."""
    w = np.arange(M) * (T / M)
    W, V = np.meshgrid(w, w, indexing="ij")
    k = np.where(W < V, fn(W, V), 0.0)
    k = np.triu(np.asarray(k, dtype=float), 1)
    return Chaos2State(kernel=k, scalar=0.0, T=T)


def chaos2_diamond(s1: Chaos2State, s2: Chaos2State) -> Chaos2State:
    """Diamond of two chaos states on matching grids.

    Kernel: the symmetrized one-variable contraction restricted to the strict
    upper triangle; scalar: the full simplex inner product <f, g> by
    left-point quadrature.
    """
    s1._check_grid(s2)
    F, G = s1.kernel, s2.kernel
    h = s1.h
    mixed = h * (F @ G.T + G @ F.T)
    kernel = np.triu(mixed, 1)
    scalar = float(h * h * np.sum(F * G))
    return Chaos2State(kernel=kernel, scalar=scalar, T=s1.T)


class Chaos2Algebra(ModelAlgebra):
    """Model algebra over chaos states sharing one fixed grid."""

    def __init__(self, T: float, M: int):
        self.T, self.M_ = T, M

    def zero(self) -> Chaos2State:
        return Chaos2State(kernel=np.zeros((self.M_, self.M_)), scalar=0.0, T=self.T)

    def add(self, s1: Chaos2State, s2: Chaos2State) -> Chaos2State:
        s1._check_grid(s2)
        return Chaos2State(
            kernel=s1.kernel + s2.kernel, scalar=s1.scalar + s2.scalar, T=s1.T
        )

    def scale(self, s: Chaos2State, q: Fraction) -> Chaos2State:
        return Chaos2State(kernel=s.kernel * float(q), scalar=s.scalar * float(q), T=s.T)

    def diamond(self, s1: Chaos2State, s2: Chaos2State) -> Chaos2State:
        return chaos2_diamond(s1, s2)


def chaos2_cumulants(f: Chaos2State, n_max: int) -> List[float]:
    """Cumulants of I_2(f) via the recursion: entry n-1 holds kappa_n = n! * scalar.

    kappa_1 is 0 (the integral is centered); kappa_2 approximates the squared
    simplex norm of f at first order in the grid step.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    algebra = Chaos2Algebra(T=f.T, M=f.M)
    first = Chaos2State(kernel=f.kernel, scalar=0.0, T=f.T)
    states = cumulant_states(algebra, first, n_max)
    return [factorial(n) * states[n].scalar for n in range(1, n_max + 1)]


def eigenvalue_cumulants(f: Chaos2State, n_max: int) -> List[float]:
    """Spectral route: kappa_n = 2^{n-1} (n-1)! tr(G^n), G the symmetrized kernel.

    The symmetrization G(w, v) = f(min, max) / 2 extends f off the simplex;
    on the grid the operator is h * G_mat and its trace powers come from the
    eigenvalues.  Fully independent of the diamond recursion.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    G = 0.5 * (f.kernel + f.kernel.T)
    eig = np.linalg.eigvalsh(G * f.h)
    out = []
    for n in range(1, n_max + 1):
        if n == 1:
            out.append(0.0)
        else:
            out.append(2.0 ** (n - 1) * factorial(n - 1) * float(np.sum(eig**n)))
    return out
