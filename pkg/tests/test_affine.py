"""Forward-variance kernels, convolution-form tree values, and the Riccati solver."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from diamond_forests.affine import (
    ForwardVarianceCurve,
    HFunction,
    KernelSpec,
    heston_ode_reference,
    kappa_bar,
    mgf_value,
    riccati_residual,
    solve_riccati,
    spx_expansion_value,
    tree_h,
    tree_value,
)
from diamond_forests.algebra import join, leaf
from diamond_forests.errors import DomainError
from diamond_forests.expansions import k_expansion, spx_g_expansion

EXP = KernelSpec.exponential(nu=0.3, lam=1.0)
POW = KernelSpec.power_law(nu=0.4, alpha=0.6)

Y = leaf("Y")
Z = leaf("zeta")


# ---------------------------------------------------------------------------
# kernels and kappa_bar


def test_kernel_validation():
    with pytest.raises(ValueError):
        KernelSpec.exponential(nu=-1.0, lam=1.0)
    with pytest.raises(ValueError):
        KernelSpec.exponential(nu=1.0, lam=0.0)
    with pytest.raises(ValueError):
        KernelSpec.power_law(nu=1.0, alpha=0.5)
    with pytest.raises(ValueError):
        KernelSpec.power_law(nu=1.0, alpha=1.0)


@pytest.mark.parametrize("kern", [EXP, POW], ids=["exp", "power"])
def test_kappa_bar_matches_quadrature(kern):
    for tau in (0.0, 0.3, 1.7):
        for delta in (0.05, 0.5):
            want, err = quad(kern.kappa, tau, tau + delta, points=[tau])
            got = kappa_bar(kern, tau, delta)
            assert abs(got - want) <= 1e-9 + 10 * err


def test_kappa_bar_closed_forms_at_zero():
    delta = 0.25
    assert kappa_bar(EXP, 0.0, delta) == pytest.approx(
        (0.3 / 1.0) * (1.0 - math.exp(-delta)), abs=1e-15
    )
    assert kappa_bar(POW, 0.0, delta) == pytest.approx(
        0.4 * delta**0.6 / math.gamma(1.6), abs=1e-15
    )


@pytest.mark.parametrize("kern", [EXP, POW], ids=["exp", "power"])
def test_kappa_bar_small_window_limit(kern):
    # kappa_bar(tau)/delta -> kappa(tau) as the window shrinks
    tau = 0.4
    for delta in (1e-4, 1e-6):
        assert kappa_bar(kern, tau, delta) / delta == pytest.approx(
            kern.kappa(tau), rel=1e-3
        )


def test_curve_validation_and_interpolation():
    with pytest.raises(ValueError):
        ForwardVarianceCurve.flat(-0.1)
    with pytest.raises(ValueError):
        ForwardVarianceCurve.sampled([0.0, 1.0], [0.04, -0.01])
    crv = ForwardVarianceCurve.sampled([0.0, 1.0, 2.0], [0.04, 0.06, 0.02])
    assert crv(0.5) == pytest.approx(0.05)
    assert crv(2.0) == pytest.approx(0.02)
    flat = ForwardVarianceCurve.flat(0.04)
    assert flat(123.0) == 0.04


# ---------------------------------------------------------------------------
# tree loadings


def grid_of(h: HFunction) -> np.ndarray:
    return np.asarray(h.grid)


def test_tree_h_base_cases():
    T = 1.2
    delta = 0.1
    hxx = tree_h(join(Y, Y), EXP, rho=-0.7, delta=delta, horizon=T)
    assert np.allclose(hxx.values, 1.0)

    hxz = tree_h(join(Y, Z), EXP, rho=-0.7, delta=delta, horizon=T)
    want = -0.7 * np.array([kappa_bar(EXP, tau, delta) for tau in grid_of(hxz)])
    assert np.allclose(hxz.values, want, atol=1e-14)

    hzz = tree_h(join(Z, Z), EXP, rho=-0.7, delta=delta, horizon=T)
    want = np.array([kappa_bar(EXP, tau, delta) ** 2 for tau in grid_of(hzz)])
    assert np.allclose(hzz.values, want, atol=1e-14)


def test_tree_h_rejects_unknown_leaf():
    with pytest.raises(ValueError):
        tree_h(join(leaf("QV"), Y), EXP, rho=0.0, delta=0.1, horizon=1.0)


def test_heston_ladder_tree_closed_form():
    # X <> (X <> X) with an exponential kernel: (rho nu / lam)(1 - e^{-lam tau})
    tree = join(Y, join(Y, Y))
    h = tree_h(tree, EXP, rho=-0.7, delta=0.1, horizon=1.0, n_steps=512)
    tau = grid_of(h)
    want = (-0.7 * 0.3 / 1.0) * (1.0 - np.exp(-1.0 * tau))
    assert np.max(np.abs(h.values - want)) <= 1e-12


def test_rough_double_cherry_closed_form():
    # (X <> X) <> (X <> X) with a power-law kernel: nu^2 tau^{2 alpha} / Gamma(1+alpha)^2
    tree = join(join(Y, Y), join(Y, Y))
    h = tree_h(tree, POW, rho=-0.7, delta=0.1, horizon=1.0, n_steps=512)
    tau = grid_of(h)
    want = (0.4**2) * tau ** (2 * 0.6) / math.gamma(1.6) ** 2
    assert np.max(np.abs(h.values - want)) <= 1e-12


def test_cherry_value_is_curve_integral():
    # (X <> X)_t(T) = integral of the forward curve
    crv = ForwardVarianceCurve.sampled([0.0, 0.5, 1.0], [0.04, 0.05, 0.03])
    got = tree_value(join(Y, Y), EXP, -0.7, 0.1, crv, t=0.0, T=1.0, n_steps=2048)
    xs = np.linspace(0.0, 1.0, 4097)
    want = np.trapezoid([crv(u) for u in xs], xs)
    assert got == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("kern", [EXP, POW], ids=["exp", "power"])
def test_convolution_closure_across_decompositions(kern):
    # Every tree in the joint expansion has a loading; identical canonical trees
    # reached through different join orders give identical values.
    result = spx_g_expansion(6)
    seen = {}
    for forest in result.orders.values():
        for tree, _ in forest:
            if tree.leaves < 2:
                continue
            v = tree_value(tree, kern, -0.5, 0.2, ForwardVarianceCurve.flat(0.04),
                           t=0.0, T=0.8, n_steps=512)
            seen[tree] = v
    assert len(seen) >= 10
    # rebuild selected trees from permuted child orders
    for tree, v in seen.items():
        if tree.left.is_leaf():
            continue
        rejoined = join(tree.right, tree.left)  # same canonical tree
        assert rejoined == tree
        v2 = tree_value(rejoined, kern, -0.5, 0.2, ForwardVarianceCurve.flat(0.04),
                        t=0.0, T=0.8, n_steps=512)
        assert v2 == pytest.approx(v, abs=1e-10)


def test_short_time_scaling_slopes():
    # k-leaf trees scale like T^{1 + (k-2) alpha} for the power-law kernel
    alpha = 0.6
    kern = KernelSpec.power_law(nu=0.4, alpha=alpha)
    crv = ForwardVarianceCurve.flat(0.04)
    cherry = join(Y, Y)
    trees = {3: join(Y, cherry), 4: join(cherry, cherry)}
    for k, tree in trees.items():
        vals = [
            tree_value(tree, kern, -0.7, 0.1, crv, t=0.0, T=T, n_steps=2048)
            for T in (0.05, 0.1, 0.2)
        ]
        slopes = [
            math.log(vals[1] / vals[0]) / math.log(2.0),
            math.log(vals[2] / vals[1]) / math.log(2.0),
        ]
        target = 1 + (k - 2) * alpha
        for s in slopes:
            assert abs(s - target) <= 0.02 * target


# ---------------------------------------------------------------------------
# Riccati solver


def test_riccati_boundary_value_exact():
    a, b, c, rho, delta = 0.3, -0.2, 0.15, -0.6, 0.25
    for kern in (EXP, POW):
        sol = solve_riccati(kern, rho, a, b, c, delta, horizon=1.0, n_steps=64)
        kb0 = kappa_bar(kern, 0.0, delta)
        want = b + 0.5 * a * (a - 1.0) + rho * a * c * kb0 + 0.5 * c**2 * kb0**2
        assert sol.g[0] == pytest.approx(want, abs=1e-14)


def test_riccati_zero_fixed_point():
    sol = solve_riccati(EXP, -0.7, 0.0, 0.0, 0.0, 0.1, horizon=2.0, n_steps=128)
    assert np.max(np.abs(sol.g)) == 0.0


def test_riccati_matches_heston_ode():
    a, b, rho = 0.25, 0.1, -0.7
    sol = solve_riccati(EXP, rho, a, b, 0.0, 0.1, horizon=1.0, n_steps=4096)
    ref = heston_ode_reference(EXP, rho, a, b, sol.grid)
    assert np.max(np.abs(sol.g - ref)) <= 1e-6


def test_riccati_heston_ode_other_parameters():
    kern = KernelSpec.exponential(nu=0.8, lam=2.5)
    a, b, rho = -0.4, 0.05, 0.3
    sol = solve_riccati(kern, rho, a, b, 0.0, 0.1, horizon=1.5, n_steps=4096)
    ref = heston_ode_reference(kern, rho, a, b, sol.grid)
    assert np.max(np.abs(sol.g - ref)) <= 1e-6


@pytest.mark.parametrize("alpha", [0.6, 0.75])
def test_riccati_residual_within_tolerance_band(alpha):
    kern = KernelSpec.power_law(nu=0.4, alpha=alpha)
    sol = solve_riccati(kern, -0.7, 0.25, 0.1, 0.1, 0.1, horizon=1.0, n_steps=2048)
    res = riccati_residual(sol)
    assert res <= 10.0 * sol.solver_tolerance


def test_riccati_residual_exponential():
    sol = solve_riccati(EXP, -0.7, 0.25, 0.1, 0.0, 0.1, horizon=1.0, n_steps=2048)
    assert riccati_residual(sol) <= 10.0 * sol.solver_tolerance


def test_riccati_grid_convergence_power_law():
    # at least first-order convergence in the step size for the singular kernel
    kern = KernelSpec.power_law(nu=0.4, alpha=0.6)
    args = (kern, -0.7, 0.25, 0.1, 0.1, 0.1)
    fine = solve_riccati(*args, horizon=1.0, n_steps=8192)

    def gap(n):
        sol = solve_riccati(*args, horizon=1.0, n_steps=n)
        stride = 8192 // n
        return float(np.max(np.abs(sol.g - fine.g[::stride])))

    g256, g512, g1024 = gap(256), gap(512), gap(1024)
    assert g512 < g256
    assert g1024 < g512
    order = math.log(g256 / g1024) / math.log(4.0)
    assert order >= 1.0


def test_riccati_blowup_raises_domain_error():
    with pytest.raises(DomainError):
        solve_riccati(EXP, 0.0, 40.0, 40.0, 0.0, 0.1, horizon=2.0, n_steps=256)


def test_riccati_rejects_tiny_grids_and_bad_rho():
    with pytest.raises(ValueError):
        solve_riccati(EXP, 0.0, 0.1, 0.0, 0.0, 0.1, horizon=1.0, n_steps=4)
    with pytest.raises(ValueError):
        solve_riccati(EXP, 1.5, 0.1, 0.0, 0.0, 0.1, horizon=1.0, n_steps=64)


# ---------------------------------------------------------------------------
# MGF assembly and the truncated exponent


def heston_params():
    kern = KernelSpec.exponential(nu=0.3, lam=1.0)
    crv = ForwardVarianceCurve.flat(0.04)
    return kern, crv, 0.25, 0.1, 0.0, -0.7, 0.1


def test_mgf_value_trivial_and_horizon_guard():
    kern, crv, *_ = heston_params()
    sol = solve_riccati(kern, -0.7, 0.0, 0.0, 0.0, 0.1, horizon=1.0, n_steps=64)
    assert mgf_value(sol, x=0.7, curve=crv, zeta=0.3, t=0.0, T=1.0) == 0.0
    with pytest.raises(ValueError):
        mgf_value(sol, x=0.0, curve=crv, zeta=0.0, t=0.0, T=2.0)


def test_mgf_value_flat_curve_exponential():
    kern, crv, a, b, c, rho, delta = heston_params()
    sol = solve_riccati(kern, rho, a, b, c, delta, horizon=1.0, n_steps=4096)
    got = mgf_value(sol, x=0.0, curve=crv, zeta=0.0, t=0.0, T=1.0)
    # flat curve: the exponent is xi0 * integral of g
    want = 0.04 * np.trapezoid(sol.g, sol.grid)
    assert got == pytest.approx(want, abs=1e-15)
    # and a nonzero state enters linearly
    shifted = mgf_value(sol, x=0.3, curve=crv, zeta=2.0, t=0.0, T=1.0)
    assert shifted == pytest.approx(want + a * 0.3 + c * 2.0, abs=1e-15)


def test_expansion_order_two_flat_curve():
    kern, crv, a, b, c, rho, delta = heston_params()
    orders = spx_g_expansion(4).orders
    got = spx_expansion_value(2, orders, kern, rho, a, b, c, delta, crv,
                              x=0.0, zeta=0.0, t=0.0, T=1.0)
    assert got == pytest.approx((0.5 * a * (a - 1.0) + b) * 0.04 * 1.0, rel=1e-12)


def test_expansion_martingale_binding_kills_every_order():
    kern, crv, *_ = heston_params()
    orders = spx_g_expansion(8).orders
    for K in (2, 3, 4, 5, 6, 7, 8):
        got = spx_expansion_value(K, orders, kern, -0.7, 1.0, 0.0, 0.0, 0.1, crv,
                                  x=0.4, zeta=0.2, t=0.0, T=1.0)
        assert got == pytest.approx(1.0 * 0.4, abs=1e-15)


def test_expansion_rough_order_four_term():
    # order-4 contribution carries the double cherry with weight
    # (1/2)(a(a-1)/2 + b)^2 against the squared-kernel loading
    a, b, rho, delta = 0.2, 0.05, -0.3, 0.1
    crv = ForwardVarianceCurve.flat(0.04)
    orders = spx_g_expansion(4).orders
    v4 = spx_expansion_value(4, orders, POW, rho, a, b, 0.0, delta, crv,
                             x=0.0, zeta=0.0, t=0.0, T=1.0, n_steps=4096)
    v3 = spx_expansion_value(3, orders, POW, rho, a, b, 0.0, delta, crv,
                             x=0.0, zeta=0.0, t=0.0, T=1.0, n_steps=4096)
    term4 = v4 - v3
    base = 0.5 * a * (a - 1.0) + b
    double_cherry = 0.5 * base**2 * tree_value(
        join(join(Y, Y), join(Y, Y)), POW, rho, delta, crv, 0.0, 1.0, n_steps=4096
    )
    ladder = join(Y, join(Y, join(Y, Y)))
    chain4 = a**2 * base * tree_value(ladder, POW, rho, delta, crv, 0.0, 1.0,
                                      n_steps=4096)
    assert term4 == pytest.approx(double_cherry + chain4, rel=1e-10)


def test_expansion_converges_to_solver_value():
    kern, crv, a, b, c, rho, delta = heston_params()
    orders = spx_g_expansion(8).orders
    sol = solve_riccati(kern, rho, a, b, c, delta, horizon=1.0, n_steps=4096)
    mv = mgf_value(sol, x=0.0, curve=crv, zeta=0.0, t=0.0, T=1.0)
    gaps = []
    for K in (2, 4, 6, 8):
        ev = spx_expansion_value(K, orders, kern, rho, a, b, c, delta, crv,
                                 x=0.0, zeta=0.0, t=0.0, T=1.0, n_steps=4096)
        gaps.append(abs(ev - mv))
    assert gaps[1] < 1e-2 * gaps[0]
    assert gaps[2] < 1e-2 * gaps[1]
    assert gaps[3] <= 2e-13


def test_univariate_expansion_value_matches_binding():
    # at b = a/2 and c = 0 the quadratic base weight a(a-1)/2 + b collapses to
    # a^2/2, so order k of the joint exponent is a^k times the plain cumulant
    # forest of the same order
    kern, crv, *_ = heston_params()
    a = 0.3
    uni = k_expansion(6).orders
    joint = spx_g_expansion(6).orders
    vu = 0.0
    for K, forest in uni.items():
        if K < 2:
            continue
        for tree, poly in forest:
            coeff = poly.evaluate({})
            vu += a**K * coeff * tree_value(tree, kern, 0.0, 0.1, crv, 0.0, 1.0,
                                            n_steps=1024)
    vj = spx_expansion_value(6, joint, kern, 0.0, a, 0.5 * a, 0.0, 0.1, crv,
                             x=0.0, zeta=0.0, t=0.0, T=1.0, n_steps=1024)
    assert vj == pytest.approx(vu, rel=1e-9)
