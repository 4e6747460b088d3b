"""Affine forward-variance calculus: kernels, tree loadings, Riccati solver.

In the affine forward-variance model

    dX_t   = -(1/2) v_t dt + sqrt(v_t) dZ_t,
    d xi_t(u) = kappa(u - t) sqrt(v_t) dW_t,      d<W,Z>_t = rho dt,

every diamond tree with price leaves X and averaged-variance leaves zeta has
the convolution form  integral xi_t(u) h(T-u) du  for an h assembled from
the kernel: leaf loadings are (z, w) = (1, 0) for X and (0, kappa_bar) for
zeta, an internal subtree with function h loads as (0, kappa * h) (the
convolution), and joining two nodes multiplies out

    h = z1 z2 + rho (z1 w2 + z2 w1) + w1 w2 .

The joint exponent  a X_t + c zeta_t(T) + integral xi_t(u) g(T-u) du  closes
with g solving the convolution Riccati integral equation

    g(tau) = b - a/2 + (1 - rho^2) a^2 / 2
             + [rho a + c kappa_bar(tau) + (kappa * g)(tau)]^2 / 2 ,

discretized here by product integration: g is piecewise linear on a uniform
tau-grid and the kernel moments over each subinterval are integrated in
closed form, which keeps first-order accuracy through the power-law
singularity at tau = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .algebra import Forest, Tree
from .errors import DomainError, SolverError

__all__ = [
    "KernelSpec",
    "ForwardVarianceCurve",
    "HFunction",
    "RiccatiSolution",
    "kappa_bar",
    "kernel_convolve",
    "tree_h",
    "tree_value",
    "solve_riccati",
    "riccati_residual",
    "heston_ode_reference",
    "mgf_value",
    "spx_expansion_value",
]

PRICE_LEAF_LABELS = frozenset({"X", "Y"})
ZETA_LEAF_LABELS = frozenset({"zeta"})

GROWTH_BOUND = 1.0e3
NEWTON_TOL = 1.0e-12
NEWTON_MAX_ITER = 50


# ---------------------------------------------------------------------------
# Kernels and curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """Volatility kernel: exponential nu e^{-lam tau} or power-law
    nu tau^{alpha-1} / Gamma(alpha) with alpha in (1/2, 1)."""

    kind: str
    nu: float
    lam: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exp", "power"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.kind == "exp" and not self.lam > 0:
            raise ValueError("exponential kernel needs lam > 0")
        if self.kind == "power" and not 0.5 < self.alpha < 1.0:
            raise ValueError("power-law kernel needs alpha in (1/2, 1)")

    @staticmethod
    def exponential(nu: float, lam: float) -> "KernelSpec":
        return KernelSpec(kind="exp", nu=nu, lam=lam)

    @staticmethod
    def power_law(nu: float, alpha: float) -> "KernelSpec":
        return KernelSpec(kind="power", nu=nu, alpha=alpha)

    def kappa(self, tau):
        """Pointwise kernel value (vectorized); infinite at 0 for power law."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "exp":
            return self.nu * np.exp(-self.lam * tau)
        with np.errstate(divide="ignore"):
            return self.nu * tau ** (self.alpha - 1.0) / math.gamma(self.alpha)

    def integral(self, tau):
        """Exact antiderivative integral_0^tau kappa(u) du (vectorized)."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "exp":
            return (self.nu / self.lam) * (1.0 - np.exp(-self.lam * tau))
        return self.nu * tau**self.alpha / math.gamma(self.alpha + 1.0)

    def moments(self, grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Closed-form (m0, m1) per subinterval of an increasing grid.

        m0[i] = integral_{grid[i]}^{grid[i+1]} kappa(s) ds and m1[i] the same
        with an extra factor s; exactness here is what lets the product
        integration keep first order through the power-law singularity.
        """
        lo, hi = grid[:-1], grid[1:]
        if self.kind == "exp":
            e_lo, e_hi = np.exp(-self.lam * lo), np.exp(-self.lam * hi)
            m0 = (self.nu / self.lam) * (e_lo - e_hi)
            m1 = self.nu * (
                (lo / self.lam + 1.0 / self.lam**2) * e_lo
                - (hi / self.lam + 1.0 / self.lam**2) * e_hi
            )
            return m0, m1
        a = self.alpha
        m0 = self.nu * (hi**a - lo**a) / math.gamma(a + 1.0)
        m1 = self.nu * (hi ** (a + 1) - lo ** (a + 1)) / (math.gamma(a) * (a + 1))
        return m0, m1


def kappa_bar(kernel: KernelSpec, tau, delta: float):
    """Exact integral of the kernel over [tau, tau + delta] (vectorized)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    return kernel.integral(tau + delta) - kernel.integral(tau)


@dataclass(frozen=True)
class ForwardVarianceCurve:
    """Nonnegative curve u -> xi_0(u); flat or linearly interpolated samples."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1 or times.size < 1:
            raise ValueError("times and values must be matching 1-d arrays")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("forward variance must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @staticmethod
    def flat(xi0: float) -> "ForwardVarianceCurve":
        if not xi0 >= 0:
            raise ValueError("forward variance must be nonnegative")
        return ForwardVarianceCurve(np.array([0.0]), np.array([float(xi0)]))

    @staticmethod
    def sampled(times, values) -> "ForwardVarianceCurve":
        return ForwardVarianceCurve(np.asarray(times), np.asarray(values))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.times.size == 1:
            return np.full_like(u, self.values[0])
        return np.interp(u, self.times, self.values)


# ---------------------------------------------------------------------------
# Product-integration convolution weights
# ---------------------------------------------------------------------------


def _conv_weights(kernel: KernelSpec, grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Weights (A, B): (kappa * v)(grid[j]) = sum_{i<j} v[j-1-i] A[i] + v[j-i] B[i]
    for piecewise-linear v on the uniform grid."""
    dtau = grid[1] - grid[0]
    m0, m1 = kernel.moments(grid)
    B = (grid[1:] * m0 - m1) / dtau
    A = m0 - B
    return A, B


def kernel_convolve(kernel: KernelSpec, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """(kappa * v)(tau_j) on the grid for piecewise-linear v, exact kernel moments."""
    values = np.asarray(values, dtype=float)
    A, B = _conv_weights(kernel, grid)
    n = grid.size
    out = np.zeros(n)
    convA = np.convolve(A, values)  # index j-1 holds sum_{i<=j-1} A[i] v[j-1-i]
    convB = np.convolve(B, values)
    # the B-part sum runs over i = 0..j-1; np.convolve at index j also carries
    # the i = j term B[j] v[0] whenever j < len(B), so strip it
    B_ext = np.append(B, 0.0)
    j = np.arange(1, n)
    out[1:] = convA[j - 1] + convB[j] - B_ext[j] * values[0]
    return out


# ---------------------------------------------------------------------------
# Tree loadings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HFunction:
    """Samples of the convolution-form weight h on a uniform tau-grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape:
            raise ValueError("grid/values shape mismatch")
        if not np.all(np.isfinite(values)):
            raise ValueError("h must be finite on the grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, tau):
        return np.interp(np.asarray(tau, dtype=float), self.grid, self.values)


def _leaf_loading(
    label: str, kernel: KernelSpec, delta: float, grid: np.ndarray
) -> Tuple[float, np.ndarray]:
    if label in PRICE_LEAF_LABELS:
        return 1.0, np.zeros_like(grid)
    if label in ZETA_LEAF_LABELS:
        return 0.0, kappa_bar(kernel, grid, delta)
    raise ValueError(f"unsupported leaf label {label!r}")


def _node_loading(
    tree: Tree, kernel: KernelSpec, rho: float, delta: float, grid: np.ndarray
) -> Tuple[float, np.ndarray]:
    """(z, w): dZ- and dW-loadings (per sqrt(v)) of the node's martingale part."""
    if tree.label is not None:
        return _leaf_loading(tree.label, kernel, delta, grid)
    h = _tree_h_values(tree, kernel, rho, delta, grid)
    return 0.0, kernel_convolve(kernel, h, grid)


def _tree_h_values(
    tree: Tree, kernel: KernelSpec, rho: float, delta: float, grid: np.ndarray
) -> np.ndarray:
    if tree.label is not None:
        raise ValueError("a single leaf is not a diamond tree (needs >= 2 leaves)")
    z1, w1 = _node_loading(tree.left, kernel, rho, delta, grid)
    z2, w2 = _node_loading(tree.right, kernel, rho, delta, grid)
    return z1 * z2 + rho * (z1 * w2 + z2 * w1) + w1 * w2


def tree_h(
    tree: Tree,
    kernel: KernelSpec,
    rho: float,
    delta: float,
    horizon: float,
    n_steps: int = 1024,
) -> HFunction:
    """Weight h with tree value = integral_t^T xi_t(u) h(T-u) du, tau = T-u.

    Base pairs: (X <> X) -> 1, (X <> zeta) -> rho kappa_bar, (zeta <> zeta)
    -> kappa_bar^2; an internal subtree enters through kappa * h_subtree.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    grid = np.linspace(0.0, horizon, n_steps + 1)
    return HFunction(grid=grid, values=_tree_h_values(tree, kernel, rho, delta, grid))


def tree_value(
    tree: Tree,
    kernel: KernelSpec,
    rho: float,
    delta: float,
    curve: ForwardVarianceCurve,
    t: float,
    T: float,
    n_steps: int = 1024,
    _h_cache: Optional[Dict[str, HFunction]] = None,
) -> float:
    """Quadrature of xi_t(u) h(T-u) over [t, T] on the h-grid (trapezoid)."""
    if not T > t:
        raise ValueError("need t < T")
    cache_key = tree.shape
    h = None if _h_cache is None else _h_cache.get(cache_key)
    if h is None:
        h = tree_h(tree, kernel, rho, delta, horizon=T - t, n_steps=n_steps)
        if _h_cache is not None:
            _h_cache[cache_key] = h
    xi = curve(T - h.grid)
    return float(np.trapezoid(xi * h.values, h.grid))


# ---------------------------------------------------------------------------
# Convolution Riccati solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiccatiSolution:
    """Solution samples of the convolution Riccati equation on a tau-grid."""

    grid: np.ndarray
    g: np.ndarray
    kernel: KernelSpec
    rho: float
    a: float
    b: float
    c: float
    delta: float
    solver_tolerance: float = field(default=float("nan"))

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def interpolator(self) -> Callable[[np.ndarray], np.ndarray]:
        return PchipInterpolator(self.grid, self.g)


def _riccati_march(
    kernel: KernelSpec,
    rho: float,
    a: float,
    b: float,
    c: float,
    delta: float,
    grid: np.ndarray,
) -> np.ndarray:
    C = b - 0.5 * a + 0.5 * (1.0 - rho * rho) * a * a
    q = rho * a + c * kappa_bar(kernel, grid, delta)
    A, B = _conv_weights(kernel, grid)
    n = grid.size
    g = np.empty(n)
    g[0] = C + 0.5 * q[0] ** 2  # boundary: convolution vanishes at tau = 0
    for j in range(1, n):
        # known part of (kappa * g)(tau_j); the i = 0 term carries g[j]
        P = float(np.dot(A[:j], g[j - 1 :: -1])) + float(
            np.dot(B[1:j], g[j - 1 : 0 : -1])
        )
        base = q[j] + P
        x = 2.0 * g[j - 1] - g[j - 2] if j >= 2 else g[0]
        fx = C + 0.5 * (base + B[0] * x) ** 2 - x
        converged = False
        for _ in range(NEWTON_MAX_ITER):
            if abs(fx) <= NEWTON_TOL * max(1.0, abs(x)):
                converged = True
                break
            dfx = B[0] * (base + B[0] * x) - 1.0
            if dfx == 0.0:
                break
            step = fx / dfx
            x_new = x - step
            f_new = C + 0.5 * (base + B[0] * x_new) ** 2 - x_new
            while abs(f_new) > abs(fx) and abs(step) > 1e-300:
                step *= 0.5
                x_new = x - step
                f_new = C + 0.5 * (base + B[0] * x_new) ** 2 - x_new
            x, fx = x_new, f_new
        if not converged and abs(fx) > NEWTON_TOL * max(1.0, abs(x)):
            raise SolverError(
                f"per-step solve failed to converge at step {j} "
                f"(tau = {grid[j]:.6g}, residual = {fx:.3e})"
            )
        if abs(x) > GROWTH_BOUND:
            raise DomainError(
                f"solution magnitude exceeded {GROWTH_BOUND:g} at tau = "
                f"{grid[j]:.6g}; weights (a, b, c) outside the small-argument domain"
            )
        g[j] = x
    return g


def solve_riccati(
    kernel: KernelSpec,
    rho: float,
    a: float,
    b: float,
    c: float,
    delta: float,
    horizon: float,
    n_steps: int,
) -> RiccatiSolution:
    """March the convolution Riccati equation on a uniform tau-grid.

    Per step, g(tau_j) solves a scalar quadratic (its own convolution weight
    appears inside the square) by damped Newton from a linear-extrapolation
    predictor.  ``solver_tolerance`` records the sup-gap against a
    half-resolution solve, a practical error estimate at first order.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if n_steps < 8:
        raise ValueError("n_steps must be >= 8")
    grid = np.linspace(0.0, horizon, n_steps + 1)
    g = _riccati_march(kernel, rho, a, b, c, delta, grid)
    half = _riccati_march(kernel, rho, a, b, c, delta, grid[::2])
    tolerance = float(np.max(np.abs(g[::2] - half)))
    return RiccatiSolution(
        grid=grid,
        g=g,
        kernel=kernel,
        rho=rho,
        a=a,
        b=b,
        c=c,
        delta=delta,
        solver_tolerance=tolerance,
    )


def riccati_residual(sol: RiccatiSolution, refine: int = 8) -> float:
    """Sup-norm defect of the solved g in the integral equation.

    The convolution is re-evaluated on a ``refine``-times finer grid against
    a monotone cubic interpolant of g, so the measure is independent of the
    solver's own quadrature.
    """
    interp = sol.interpolator()
    fine = np.linspace(0.0, sol.horizon, refine * (sol.grid.size - 1) + 1)
    conv_fine = kernel_convolve(sol.kernel, interp(fine), fine)
    conv = conv_fine[::refine]
    C = sol.b - 0.5 * sol.a + 0.5 * (1.0 - sol.rho**2) * sol.a**2
    q = sol.rho * sol.a + sol.c * kappa_bar(sol.kernel, sol.grid, sol.delta)
    defect = C + 0.5 * (q + conv) ** 2 - sol.g
    return float(np.max(np.abs(defect)))


def heston_ode_reference(
    kernel: KernelSpec,
    rho: float,
    a: float,
    b: float,
    grid: np.ndarray,
    rtol: float = 1e-12,
) -> np.ndarray:
    """Reference g for the exponential kernel with c = 0 via a stiff-safe ODE.

    For kappa = nu e^{-lam tau} the convolution psi = kappa * g satisfies
    psi' = nu g - lam psi with psi(0) = 0 and g = C + (rho a + psi)^2 / 2;
    an eighth-order integrator at tight tolerance serves as ground truth.
    """
    if kernel.kind != "exp":
        raise ValueError("ODE reference only covers the exponential kernel")
    C = b - 0.5 * a + 0.5 * (1.0 - rho * rho) * a * a

    def rhs(_tau, y):
        g = C + 0.5 * (rho * a + y[0]) ** 2
        return [kernel.nu * g - kernel.lam * y[0]]

    sol = solve_ivp(
        rhs,
        [0.0, float(grid[-1])],
        [0.0],
        method="DOP853",
        rtol=rtol,
        atol=1e-14,
        dense_output=True,
    )
    psi = sol.sol(grid)[0]
    return C + 0.5 * (rho * a + psi) ** 2


# ---------------------------------------------------------------------------
# Exponent evaluation
# ---------------------------------------------------------------------------


def mgf_value(
    sol: RiccatiSolution,
    x: float,
    curve: ForwardVarianceCurve,
    zeta: float,
    t: float,
    T: float,
) -> float:
    """a X_t + c zeta_t(T) + integral_t^T xi_t(u) g(T-u) du on the solved grid."""
    tau = T - t
    if tau <= 0:
        raise ValueError("need t < T")
    if tau > sol.horizon * (1 + 1e-12):
        raise ValueError(
            f"solution horizon {sol.horizon:g} shorter than requested window {tau:g}"
        )
    grid = sol.grid[sol.grid <= tau * (1 + 1e-12)]
    g = sol.g[: grid.size]
    if grid[-1] < tau * (1 - 1e-12):  # close the window off-grid
        g = np.append(g, sol.interpolator()(tau))
        grid = np.append(grid, tau)
    xi = curve(T - grid)
    integral = float(np.trapezoid(xi * g, grid))
    return sol.a * x + sol.c * zeta + integral


def spx_expansion_value(
    order: int,
    orders_forests: Dict[int, Forest],
    kernel: KernelSpec,
    rho: float,
    a: float,
    b: float,
    c: float,
    delta: float,
    curve: ForwardVarianceCurve,
    x: float,
    zeta: float,
    t: float,
    T: float,
    n_steps: int = 1024,
) -> float:
    """Truncated exponent: a X_t + c zeta_t(T) + sum of forest values.

    ``orders_forests`` maps order k to the two-leaf-type forest whose
    coefficients are polynomials in the symbols a, b, c; each tree value is
    the convolution-form quadrature, cached per tree shape.
    """
    if order < 2:
        raise ValueError("order must be >= 2")
    bindings = {"a": a, "b": b, "c": c}
    cache: Dict[str, HFunction] = {}
    total = a * x + c * zeta
    for k in sorted(orders_forests):
        if k > order:
            break
        for tree, poly in orders_forests[k]:
            coeff = poly.evaluate(bindings)
            if coeff == 0.0:
                continue
            total += float(coeff) * tree_value(
                tree, kernel, rho, delta, curve, t, T, n_steps=n_steps, _h_cache=cache
            )
    return total
