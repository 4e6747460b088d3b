"""Named cross-checking suites shared by the command line and the test suite.

Each suite compares an exact pipeline against an independent oracle (a Taylor
recursion, a classical ODE, an eigenvalue identity, or Monte Carlo) and
reports measured gaps next to their tolerances.  Exact rational checks carry
tolerance 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Sequence

import numpy as np

from .algebra import catalan, join, leaf, parse_poly, wedderburn_etherington
from .affine import (
    ForwardVarianceCurve,
    KernelSpec,
    heston_ode_reference,
    mgf_value,
    riccati_residual,
    solve_riccati,
    tree_value,
)
from .expansions import g_expansion, k_expansion, reorder, specialize, spx_g_expansion
from .mc import SimConfig, empirical_cumulants, empirical_mgf, simulate
from .models.bessel import bessel_laplace, bessel_laplace_series
from .models.brownian import stopped_bm_cgf
from .models.chaos2 import (
    chaos2_cumulants,
    constant_kernel,
    eigenvalue_cumulants,
    kernel_from_function,
)
from .models.levy import levy_alpha, levy_cgf
from .models.signature import cameron_martin_cgf_coeffs

__all__ = [
    "Check",
    "SuiteReport",
    "SUITES",
    "run_suite",
    "tan_taylor_coefficients",
    "log_cosh_taylor_coefficients",
]


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, object]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


# ---------------------------------------------------------------------------
# series oracles (independent of the tree recursions)


def tan_taylor_coefficients(order: int) -> Dict[int, Fraction]:
    """Odd Taylor coefficients of tan via term-by-term integration of f' = f^2 + 1."""
    coeffs: Dict[int, Fraction] = {1: Fraction(1)}
    degree = 1
    while degree < order:
        # derivative coefficient at even degree d: sum of products + [d == 0]
        new_degree = degree + 2
        c = Fraction(0)
        for i in range(1, new_degree - 1, 2):
            j = new_degree - 1 - i
            c += coeffs.get(i, Fraction(0)) * coeffs.get(j, Fraction(0))
        coeffs[new_degree] = c / new_degree
        degree = new_degree
    return {d: c for d, c in coeffs.items() if d <= order}


def log_cosh_taylor_coefficients(order: int) -> Dict[int, Fraction]:
    """Coefficients of x^{2n} in log cosh x, from tanh' = 1 - tanh^2."""
    tanh: Dict[int, Fraction] = {1: Fraction(1)}
    degree = 1
    while degree < 2 * order:
        new_degree = degree + 2
        c = Fraction(0)
        for i in range(1, new_degree - 1, 2):
            j = new_degree - 1 - i
            c -= tanh.get(i, Fraction(0)) * tanh.get(j, Fraction(0))
        tanh[new_degree] = c / new_degree
        degree = new_degree
    # log cosh = integral of tanh
    return {(d + 1) // 2: c / (d + 1) for d, c in tanh.items() if d + 1 <= 2 * order}


# ---------------------------------------------------------------------------
# suites


def suite_reorder(order: int = 8, kill_order: int = 10) -> SuiteReport:
    """Expansion engine: shape counts, coefficient sums, regrading, cancellations."""
    checks: List[Check] = []

    wedderburn = {1: 1, 2: 1, 3: 1, 4: 2, 5: 3, 6: 6, 7: 11, 8: 23}
    k = k_expansion(max(order, 9))
    bad = 0.0
    for n, want in wedderburn.items():
        if len(k.orders[n]) != want or wedderburn_etherington(n) != want:
            bad += 1
    checks.append(Check("shape counts n=1..8 vs branching numbers", bad, 0.0))

    bad = 0.0
    for n in range(1, 9):
        total = sum(
            (Fraction(2) ** n) * p.constant_value() for _, p in k.orders[n + 1]
        )
        if total != catalan(n):
            bad += 1
    checks.append(Check("scaled coefficient sums vs Catalan n<=8", bad, 0.0))

    two = k_expansion(order, alphabet=("Y", "QV"), symbols=("a", "b"))
    regraded = reorder(two)
    g = g_expansion(order)
    mismatches = float(
        sum(1 for n in range(2, order + 1) if regraded.orders[n] != g.orders[n])
    )
    checks.append(Check(f"regraded two-leaf expansion == joint orders 2..{order}", mismatches, 0.0))

    killed = specialize(g_expansion(kill_order), {"b": parse_poly("-a^2/2")})
    checks.append(
        Check(
            f"b = -a^2/2 cancels joint orders <= {kill_order}",
            0.0 if killed.is_zero() else 1.0,
            0.0,
        )
    )
    spx_killed = specialize(spx_g_expansion(8), {"a": 1, "b": 0, "c": 0})
    checks.append(
        Check(
            "(a,b,c) = (1,0,0) cancels price-exponent orders <= 8",
            0.0 if spx_killed.is_zero() else 1.0,
            0.0,
        )
    )
    return SuiteReport("reorder", checks)


def suite_levy(
    T: float = 0.5,
    order: int = 20,
    mc_paths: int = 0,
    mc_steps: int = 512,
    seed: int = 7,
) -> SuiteReport:
    """Planar area law: series vs tan Taylor oracle, closed form, optional MC."""
    checks: List[Check] = []
    alphas = levy_alpha(12)
    tan = tan_taylor_coefficients(13)
    # alpha_{2n} equals the tangent coefficient of degree 2n-1
    gap = max(abs(float(alphas[2 * n] - tan[2 * n - 1])) for n in range(1, 7))
    checks.append(Check("area coefficients vs tan series through order 12", gap, 0.0))

    partial = levy_cgf(T, order)
    closed = -math.log(math.cos(T))
    checks.append(
        Check(f"cgf partial sum at T={T:g} vs -log cos", abs(partial - closed), 1e-8)
    )

    if mc_paths > 0:
        cfg = SimConfig("LevyArea", {}, mc_paths, mc_steps, 1.0, seed=seed)
        k2 = empirical_cumulants(simulate(cfg), 2)[1]
        # left-point Euler shrinks the variance by exactly 1/n_steps
        bias = 1.0 / mc_steps
        checks.append(
            Check(
                f"MC variance at T=1 within 3 SE + step bias ({mc_paths} paths)",
                abs(k2.value - 1.0),
                3.0 * k2.std_error + bias,
            )
        )
    return SuiteReport("levy", checks)


def suite_cameron_martin(order: int = 10) -> SuiteReport:
    """Squared-norm exponent coefficients vs the log-cosh Taylor oracle."""
    got = cameron_martin_cgf_coeffs(order)
    d = log_cosh_taylor_coefficients(order)
    # -1/2 log cosh sqrt(2 lam): lambda^n coefficient is -d_n 2^n / 2
    want = {n: -d[n] * (2**n) / 2 for n in range(1, order + 1)}
    gap = max(abs(float(got[n] - want[n])) for n in range(1, order + 1))
    checks = [Check(f"cgf coefficients vs log-cosh oracle through {order}", gap, 0.0)]
    first = [got[1], got[2], got[3]]
    pinned = [Fraction(-1, 2), Fraction(1, 6), Fraction(-4, 45)]
    checks.append(
        Check(
            "leading coefficients are -1/2, 1/6, -4/45",
            0.0 if first == pinned else 1.0,
            0.0,
        )
    )
    return SuiteReport("cameron-martin", checks)


def suite_bessel(
    x: float = 1.0,
    T: float = 1.0,
    lams: Sequence[float] = (0.1, 0.5),
    deltas: Sequence[float] = (0.0, 1.0, 2.0),
    mc_paths: int = 0,
    seed: int = 7,
) -> SuiteReport:
    """Squared-radius Laplace transforms: series vs closed form, optional MC."""
    checks: List[Check] = []
    worst = 0.0
    for lam in lams:
        for delta in deltas:
            gap = abs(
                bessel_laplace_series(x, delta, lam, T) - bessel_laplace(x, delta, lam, T)
            )
            worst = max(worst, gap)
    checks.append(
        Check(
            f"series vs closed form over lam={tuple(lams)}, delta={tuple(deltas)}",
            worst,
            1e-8,
        )
    )
    if mc_paths > 0:
        worst_margin = -math.inf
        for delta in deltas:
            cfg = SimConfig("BESQ", {"x": x, "delta": delta}, mc_paths, 1, T, seed=seed)
            xs = simulate(cfg).column("X")
            for lam in lams:
                w = np.exp(-lam * xs)
                se = float(w.std(ddof=1) / math.sqrt(w.size))
                gap = abs(float(w.mean()) - bessel_laplace(x, delta, lam, T))
                worst_margin = max(worst_margin, gap - 3 * se)
        checks.append(
            Check(
                f"exact-sampler MC within 3 SE ({mc_paths} draws)",
                worst_margin,
                0.0,
            )
        )
    return SuiteReport("bessel", checks)


def suite_chaos2(
    sizes: Sequence[int] = (128, 256, 512),
    n_kernels: int = 5,
    seed: int = 0,
) -> SuiteReport:
    """Grid recursion vs Richardson limits and the eigenvalue oracle."""
    checks: List[Check] = []
    sizes = tuple(sizes)
    if len(sizes) != 3 or not all(2 * a == b for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be three doubling grid counts")
    targets = {2: 0.5, 3: 1.0, 4: 3.0}
    values = {
        M: chaos2_cumulants(constant_kernel(1.0, M), 4) for M in sizes
    }
    worst_slope = 0.0
    worst_extrap = 0.0
    for order, want in targets.items():
        e = [abs(values[M][order - 1] - want) for M in sizes]
        slope = math.log(e[0] / e[2]) / math.log(4.0)
        worst_slope = max(worst_slope, abs(slope - 1.0))
        rich = values[sizes[2]][order - 1] + (
            values[sizes[2]][order - 1] - values[sizes[1]][order - 1]
        )
        worst_extrap = max(worst_extrap, abs(rich - want))
    checks.append(Check("flat-kernel Richardson slope within [0.7, 1.3]", worst_slope, 0.3))
    checks.append(Check("flat-kernel extrapolated cumulants vs 1/2, 1, 3", worst_extrap, 5e-3))

    worst = 0.0
    for i in range(n_kernels):
        rng = np.random.default_rng(seed + i)
        coeffs = rng.uniform(-1.0, 1.0, size=(3, 3))

        def fn(s, u, c=coeffs):
            out = np.zeros_like(s)
            for p in range(3):
                for q in range(3):
                    out = out + c[p, q] * np.cos(np.pi * p * s) * np.cos(np.pi * q * u)
            return out

        coarse = kernel_from_function(fn, 1.0, sizes[0])
        fine = kernel_from_function(fn, 1.0, sizes[1])
        rec_c = chaos2_cumulants(coarse, 3)
        rec_f = chaos2_cumulants(fine, 3)
        eig_c = eigenvalue_cumulants(coarse, 3)
        for order in (2, 3):
            band = max(abs(rec_f[order - 1] - rec_c[order - 1]), 1e-12)
            gap = abs(rec_c[order - 1] - eig_c[order - 1])
            worst = max(worst, gap / band)
    checks.append(
        Check(
            f"recursion vs eigenvalue oracle within refinement band ({n_kernels} kernels)",
            worst,
            1.0,
        )
    )
    return SuiteReport("chaos2", checks)


def suite_heston_riccati(n_steps: int = 4096) -> SuiteReport:
    """Convolution solver vs the classical ODE, residuals, short-time slopes."""
    checks: List[Check] = []
    kern = KernelSpec.exponential(nu=0.3, lam=1.0)
    sol = solve_riccati(kern, -0.7, 0.25, 0.1, 0.0, 0.1, horizon=1.0, n_steps=n_steps)
    ref = heston_ode_reference(kern, -0.7, 0.25, 0.1, sol.grid)
    checks.append(
        Check(
            f"exponential-kernel solve vs ODE oracle at {n_steps} steps",
            float(np.max(np.abs(sol.g - ref))),
            1e-6,
        )
    )
    for alpha in (0.6, 0.75):
        pk = KernelSpec.power_law(nu=0.4, alpha=alpha)
        psol = solve_riccati(pk, -0.7, 0.25, 0.1, 0.1, 0.1, horizon=1.0, n_steps=2048)
        res = riccati_residual(psol)
        checks.append(
            Check(
                f"power-law alpha={alpha} residual vs 10x solver tolerance",
                res,
                10.0 * psol.solver_tolerance,
            )
        )
    alpha = 0.6
    pk = KernelSpec.power_law(nu=0.4, alpha=alpha)
    crv = ForwardVarianceCurve.flat(0.04)
    y = leaf("Y")
    cherry = join(y, y)
    worst = 0.0
    for k, tree in ((3, join(y, cherry)), (4, join(cherry, cherry))):
        vals = [
            tree_value(tree, pk, -0.7, 0.1, crv, 0.0, T, n_steps=2048)
            for T in (0.05, 0.1, 0.2)
        ]
        target = 1 + (k - 2) * alpha
        for hi, lo in ((1, 0), (2, 1)):
            slope = math.log(vals[hi] / vals[lo]) / math.log(2.0)
            worst = max(worst, abs(slope - target) / target)
    checks.append(Check("short-time tree slopes within 2% of 1+(k-2)a", worst, 0.02))
    return SuiteReport("heston-riccati", checks)


def suite_mc_cross(
    seed: int = 7, paths: int = 200_000, steps: int = 256
) -> SuiteReport:
    """Every simulator against its exact counterpart, in standard-error units."""
    checks: List[Check] = []

    cfg = SimConfig("BMdrift", {"mu": 0.3, "sigma": 1.5}, paths, 1, 2.0, seed=seed)
    est = empirical_cumulants(simulate(cfg), 4)
    truth = {1: 0.6, 2: 4.5, 3: 0.0, 4: 0.0}
    z = max(abs(e.value - truth[e.order]) / e.std_error for e in est)
    checks.append(Check("drifted-BM cumulants 1..4 (SE units)", z, 3.0))

    cfg = SimConfig("BESQ", {"x": 0.7, "delta": 2.0}, paths, 1, 1.0, seed=seed)
    xs = simulate(cfg).column("X")
    w = np.exp(-0.5 * xs)
    z = abs(float(w.mean()) - bessel_laplace(0.7, 2.0, 0.5, 1.0)) / float(
        w.std(ddof=1) / math.sqrt(w.size)
    )
    checks.append(Check("squared-radius exact sampler vs transform (SE units)", z, 3.0))

    cfg = SimConfig("LevyArea", {}, paths, steps, 1.0, seed=seed)
    k2 = empirical_cumulants(simulate(cfg), 2)[1]
    z = abs(k2.value - (1.0 - 1.0 / steps)) / k2.std_error
    checks.append(Check("planar-area variance vs exact Euler law (SE units)", z, 3.0))

    cfg = SimConfig("StoppedBM", {"start": 0.2}, paths, steps, 8.0, seed=seed)
    xs = simulate(cfg).column("X")
    w = np.exp(0.4 * xs)
    se_log = float(w.std(ddof=1) / math.sqrt(w.size) / w.mean())
    z = abs(math.log(float(w.mean())) - stopped_bm_cgf(0.2, 0.4)) / se_log
    checks.append(Check("stopped-BM exponent vs closed form (SE units)", z, 3.0))

    kern = KernelSpec.exponential(nu=0.3, lam=1.0)
    sol = solve_riccati(kern, -0.7, 0.25, 0.1, 0.0, 0.1, horizon=1.0, n_steps=2048)
    mv = mgf_value(sol, 0.0, ForwardVarianceCurve.flat(0.04), 0.0, 0.0, 1.0)
    cfg = SimConfig(
        "Heston",
        {"xi0": 0.04, "nu": 0.3, "lam": 1.0, "rho": -0.7},
        paths,
        steps,
        1.0,
        seed=seed,
    )
    est_mgf = empirical_mgf(simulate(cfg), (0.25, 0.1, 0.0))
    z = abs(math.log(est_mgf.value) - mv) / (est_mgf.std_error / est_mgf.value)
    checks.append(Check("stochastic-volatility MGF vs solver (SE units)", z, 3.0))

    state = constant_kernel(1.0, 64)
    kap = chaos2_cumulants(state, 3)
    cfg = SimConfig("Chaos2", {"kernel": state.kernel}, paths, 64, 1.0, seed=seed)
    est = empirical_cumulants(simulate(cfg), 3)
    z = max(abs(e.value - kap[e.order - 1]) / e.std_error for e in est[1:])
    checks.append(Check("second-chaos cumulants vs grid recursion (SE units)", z, 3.0))

    return SuiteReport("mc-cross", checks)


SUITES: Dict[str, Callable[..., SuiteReport]] = {
    "reorder": suite_reorder,
    "levy": suite_levy,
    "cameron-martin": suite_cameron_martin,
    "bessel": suite_bessel,
    "chaos2": suite_chaos2,
    "heston-riccati": suite_heston_riccati,
    "mc-cross": suite_mc_cross,
}


def run_suite(name: str, **kwargs) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**kwargs)
