"""Monte Carlo simulators vs exact laws, and estimator calibration."""

import math
import warnings

import numpy as np
import pytest

from diamond_forests.affine import (
    ForwardVarianceCurve,
    KernelSpec,
    mgf_value,
    solve_riccati,
)
from diamond_forests.errors import DomainError
from diamond_forests.mc import (
    BLOCK_PATHS,
    SimConfig,
    empirical_cumulants,
    empirical_mgf,
    simulate,
)
from diamond_forests.models.bessel import bessel_laplace
from diamond_forests.models.brownian import stopped_bm_cgf
from diamond_forests.models.chaos2 import chaos2_cumulants, kernel_from_function


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig("Banana", {}, 1000, 1, 1.0, 0)
    with pytest.raises(ValueError):
        SimConfig("BMdrift", {}, 50, 1, 1.0, 0)
    with pytest.raises(ValueError):
        SimConfig("BMdrift", {}, 1000, 0, 1.0, 0)
    with pytest.raises(ValueError):
        SimConfig("BMdrift", {}, 1000, 1, -1.0, 0)
    with pytest.raises(ValueError):
        SimConfig("BMdrift", {}, 1000, 1, 1.0, -3)
    with pytest.raises(ValueError):
        simulate(SimConfig("BESQ", {"x": 1.0}, 1000, 1, 1.0, 0))  # missing delta


def test_bm_drift_matches_law():
    cfg = SimConfig("BMdrift", {"mu": 0.3, "sigma": 1.5}, 200_000, 1, 2.0, seed=11)
    est = empirical_cumulants(simulate(cfg), 4)
    truth = {1: 0.6, 2: 4.5, 3: 0.0, 4: 0.0}
    for e in est:
        assert abs(e.value - truth[e.order]) <= 3 * e.std_error


def test_seed_determinism_and_batch_invariance(monkeypatch):
    cfg = SimConfig("BMdrift", {}, 2 * BLOCK_PATHS + 123, 1, 1.0, seed=7)
    monkeypatch.setenv("DIAMOND_FORESTS_THREADS", "1")
    serial = simulate(cfg).column("X")
    monkeypatch.setenv("DIAMOND_FORESTS_THREADS", "3")
    threaded = simulate(cfg).column("X")
    assert np.array_equal(serial, threaded)
    other = simulate(SimConfig("BMdrift", {}, cfg.n_paths, 1, 1.0, seed=8))
    assert not np.array_equal(serial, other.column("X"))


def test_besq_exact_sampler_against_transform():
    cfg = SimConfig("BESQ", {"x": 0.7, "delta": 2.0}, 400_000, 1, 1.0, seed=5)
    x = simulate(cfg).column("X")
    for lam in (0.1, 0.5):
        w = np.exp(-lam * x)
        se = w.std(ddof=1) / math.sqrt(w.size)
        assert abs(w.mean() - bessel_laplace(0.7, 2.0, lam, 1.0)) <= 3 * se


def test_besq_zero_dimension_absorbs():
    cfg = SimConfig("BESQ", {"x": 0.8, "delta": 0.0}, 400_000, 1, 1.0, seed=6)
    x = simulate(cfg).column("X")
    p0 = float((x == 0.0).mean())
    want = math.exp(-0.8 / 2.0)
    assert abs(p0 - want) <= 3 * math.sqrt(want * (1 - want) / x.size)
    assert np.all(x >= 0.0)


def test_levy_area_variance_with_euler_bias():
    # left-point Euler gives Var = T^2 (1 - 1/n) exactly; refinement halves the gap
    k2 = {}
    for n in (128, 256):
        cfg = SimConfig("LevyArea", {}, 200_000, n, 1.0, seed=9)
        est = empirical_cumulants(simulate(cfg), 2)
        k2[n] = est[1]
        assert abs(est[1].value - (1.0 - 1.0 / n)) <= 3 * est[1].std_error
    band = 3 * math.hypot(k2[128].std_error, k2[256].std_error)
    assert abs(k2[128].value - k2[256].value) <= band


def test_stopped_bm_matches_exact_cgf():
    cfg = SimConfig("StoppedBM", {"start": 0.2}, 150_000, 256, 8.0, seed=3)
    x = simulate(cfg).column("X")
    assert set(np.unique(x)) <= {-1.0, 1.0}
    for u in (0.4, -1.0):
        w = np.exp(u * x)
        se_log = w.std(ddof=1) / math.sqrt(w.size) / w.mean()
        assert abs(math.log(w.mean()) - stopped_bm_cgf(0.2, u)) <= 3 * se_log


def test_heston_mgf_cross_consistency():
    kern = KernelSpec.exponential(nu=0.3, lam=1.0)
    crv = ForwardVarianceCurve.flat(0.04)
    a, b, rho = 0.25, 0.1, -0.7
    sol = solve_riccati(kern, rho, a, b, 0.0, 0.1, horizon=1.0, n_steps=2048)
    mv = mgf_value(sol, 0.0, crv, 0.0, 0.0, 1.0)
    cfg = SimConfig(
        "Heston",
        {"xi0": 0.04, "nu": 0.3, "lam": 1.0, "rho": -0.7},
        120_000,
        256,
        1.0,
        seed=17,
    )
    s = simulate(cfg)
    est = empirical_mgf(s, (a, b, 0.0))
    se_log = est.std_error / est.value
    assert abs(math.log(est.value) - mv) <= 3 * se_log
    qv = s.column("QV")
    assert abs(qv.mean() - 0.04) <= 3 * qv.std(ddof=1) / math.sqrt(qv.size)


def test_heston_zeta_channel_cross_consistency():
    # weight on the post-horizon variance swap exercises the zeta column
    kern = KernelSpec.exponential(nu=0.3, lam=1.0)
    crv = ForwardVarianceCurve.flat(0.04)
    a, b, c = 0.25, 0.1, 0.8
    sol = solve_riccati(kern, -0.7, a, b, c, 0.1, horizon=1.0, n_steps=2048)
    mv = mgf_value(sol, 0.0, crv, zeta=0.04 * 0.1, t=0.0, T=1.0)
    cfg = SimConfig(
        "Heston",
        {"xi0": 0.04, "nu": 0.3, "lam": 1.0, "rho": -0.7, "window": 0.1},
        120_000,
        256,
        1.0,
        seed=17,
    )
    est = empirical_mgf(simulate(cfg), (a, b, c))
    se_log = est.std_error / est.value
    assert abs(math.log(est.value) - mv) <= 3 * se_log


def test_chaos2_simulator_matches_recursion():
    F = kernel_from_function(
        lambda s, u: 1.0 + 0.3 * np.cos(np.pi * s) * np.cos(2 * np.pi * u), 1.0, 64
    )
    kappas = chaos2_cumulants(F, 4)
    cfg = SimConfig("Chaos2", {"kernel": F.kernel}, 400_000, 64, 1.0, seed=21)
    est = empirical_cumulants(simulate(cfg), 4)
    for e in est:
        assert abs(e.value - kappas[e.order - 1]) <= 3.5 * max(e.std_error, 1e-12)


def test_chaos2_kernel_validation():
    cfg = SimConfig("Chaos2", {"kernel": np.eye(4)}, 1000, 4, 1.0, seed=0)
    with pytest.raises(DomainError):
        simulate(cfg)
    cfg = SimConfig("Chaos2", {"kernel": np.ones((2, 3))}, 1000, 2, 1.0, seed=0)
    with pytest.raises(DomainError):
        simulate(cfg)


def test_cumulant_estimator_coverage_on_normals():
    hits = total = 0
    truth = {1: 0.0, 2: 1.0, 3: 0.0, 4: 0.0}
    for seed in range(100):
        x = np.random.Generator(np.random.Philox(key=[seed, 0])).standard_normal(4000)
        for e in empirical_cumulants(x, 4):
            total += 1
            hits += abs(e.value - truth[e.order]) <= 3 * e.std_error
    assert hits / total > 0.99


def test_centered_chi_square_cumulants_through_order_six():
    # (chi^2_1 - 1)/2 has kappa_n = (n-1)!/2: the second-chaos constant kernel law
    rng = np.random.Generator(np.random.Philox(key=[42, 0]))
    y = (rng.standard_normal(400_000) ** 2 - 1.0) / 2.0
    want = {1: 0.0, 2: 0.5, 3: 1.0, 4: 3.0, 5: 12.0, 6: 60.0}
    for e in empirical_cumulants(y, 6, bootstrap_resamples=100):
        assert abs(e.value - want[e.order]) <= 3.5 * e.std_error
        assert e.method == ("bootstrap" if e.order >= 5 else "k-statistic")


def test_constant_samples_give_exact_zero_cumulants():
    est = empirical_cumulants(np.full(500, 2.5), 4)
    assert est[0].value == 2.5
    for e in est[1:]:
        assert e.value == 0.0


def test_estimator_input_guards():
    with pytest.raises(DomainError):
        empirical_cumulants(np.zeros(40), 5)
    with pytest.raises(ValueError):
        empirical_cumulants(np.zeros(1000), 7)
    with pytest.raises(ValueError):
        empirical_cumulants(np.zeros((10, 10)), 2)


def test_empirical_mgf_values_and_guards():
    zero = empirical_mgf({"X": np.arange(200.0)}, (0.0, 0.0, 0.0))
    assert zero.value == 1.0 and zero.std_error == 0.0
    cfg = SimConfig("BMdrift", {"mu": 0.1, "sigma": 1.0}, 200_000, 1, 1.0, seed=2)
    s = simulate(cfg)
    a = 0.3
    est = empirical_mgf(s, (a, 0.0, 0.0))
    want = math.exp(a * 0.1 + 0.5 * a * a)
    assert abs(est.value - want) <= 3 * est.std_error
    with pytest.raises(DomainError):
        empirical_mgf(s, (0.0, 1.0, 0.0))  # no QV column for plain BM


def test_empirical_mgf_tail_warning():
    bad = np.concatenate([np.zeros(9_990), np.full(10, 50.0)])
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        est = empirical_mgf({"X": bad}, (1.0, 0.0, 0.0))
    assert est.tail_warning and est.tail_share > 0.2
    assert any("MGF" in str(w.message) for w in rec)
