"""Monte Carlo simulators and cumulant estimators for the exact models.

Sampling is organized in fixed-size path blocks, each driven by its own
counter-based generator keyed by ``(seed, block_index)``.  The block layout
depends only on the run configuration, never on how many workers execute the
blocks, so results are bit-identical under any parallel schedule.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import DomainError

__all__ = [
    "BLOCK_PATHS",
    "THREADS_ENV",
    "MODELS",
    "SimConfig",
    "Samples",
    "CumulantEstimate",
    "MgfEstimate",
    "simulate",
    "empirical_cumulants",
    "empirical_mgf",
]

BLOCK_PATHS = 1 << 16
THREADS_ENV = "DIAMOND_FORESTS_THREADS"
MODELS = ("BMdrift", "LevyArea", "BESQ", "Heston", "StoppedBM", "Chaos2")


@dataclass(frozen=True)
class SimConfig:
    """A fully deterministic simulation request (seed fixes the output)."""

    model: str
    params: Mapping[str, object]
    n_paths: int
    n_steps: int
    horizon: float
    seed: int

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.n_paths < 100:
            raise ValueError("n_paths must be >= 100")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def param(self, name: str, default: Optional[float] = None) -> float:
        if name in self.params:
            return float(self.params[name])  # type: ignore[arg-type]
        if default is None:
            raise ValueError(f"model {self.model} needs parameter {name!r}")
        return default


@dataclass(frozen=True)
class Samples:
    """Named columns of terminal functionals, one row per path."""

    columns: Dict[str, np.ndarray]
    config: SimConfig

    @property
    def n(self) -> int:
        return next(iter(self.columns.values())).size

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(
                f"samples of {self.config.model} carry columns "
                f"{sorted(self.columns)}, not {name!r}"
            )
        return self.columns[name]

    def single_column(self) -> np.ndarray:
        if len(self.columns) == 1:
            return next(iter(self.columns.values()))
        raise KeyError(
            f"samples carry several columns {sorted(self.columns)}; pick one"
        )


@dataclass(frozen=True)
class CumulantEstimate:
    order: int
    value: float
    std_error: float
    method: str  # "k-statistic" or "bootstrap"


@dataclass(frozen=True)
class MgfEstimate:
    value: float
    std_error: float
    tail_share: float
    tail_warning: bool


# ---------------------------------------------------------------------------
# block RNG and per-model kernels


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, block]))


def _sim_bm_drift(cfg: SimConfig, rng: np.random.Generator, m: int) -> Dict[str, np.ndarray]:
    mu = cfg.param("mu", 0.0)
    sigma = cfg.param("sigma", 1.0)
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    T = cfg.horizon
    z = rng.standard_normal(m)
    return {"X": mu * T + sigma * math.sqrt(T) * z}


def _sim_levy_area(cfg: SimConfig, rng: np.random.Generator, m: int) -> Dict[str, np.ndarray]:
    n = cfg.n_steps
    dt = cfg.horizon / n
    sdt = math.sqrt(dt)
    x = np.zeros(m)
    y = np.zeros(m)
    a = np.zeros(m)
    for _ in range(n):
        z = rng.standard_normal((2, m))
        dx = sdt * z[0]
        dy = sdt * z[1]
        a += x * dy - y * dx
        x += dx
        y += dy
    return {"A": a}


def _sim_besq(cfg: SimConfig, rng: np.random.Generator, m: int) -> Dict[str, np.ndarray]:
    x0 = cfg.param("x")
    delta = cfg.param("delta")
    if x0 < 0 or delta < 0:
        raise DomainError("squared Bessel needs x >= 0 and delta >= 0")
    T = cfg.horizon
    # terminal law: 2T * Gamma(delta/2 + N) with N ~ Poisson(x / (2T));
    # matches the (1+2*lam*T)^(-delta/2) exp(-lam x/(1+2*lam*T)) transform
    pois = rng.poisson(x0 / (2.0 * T), m)
    shape = 0.5 * delta + pois
    return {"X": 2.0 * T * rng.standard_gamma(shape)}


def _sim_heston(cfg: SimConfig, rng: np.random.Generator, m: int) -> Dict[str, np.ndarray]:
    xi0 = cfg.param("xi0")
    nu = cfg.param("nu")
    lam = cfg.param("lam")
    rho = cfg.param("rho")
    window = cfg.param("window", 0.1)
    if xi0 < 0 or nu < 0 or lam <= 0 or window <= 0:
        raise DomainError("need xi0 >= 0, nu >= 0, lam > 0, window > 0")
    if not -1.0 <= rho <= 1.0:
        raise DomainError("rho must lie in [-1, 1]")
    n = cfg.n_steps
    dt = cfg.horizon / n
    sdt = math.sqrt(dt)
    rho_perp = math.sqrt(max(0.0, 1.0 - rho * rho))
    v = np.full(m, xi0)
    x = np.zeros(m)
    qv = np.zeros(m)
    for _ in range(n):
        z = rng.standard_normal((2, m))
        dw = sdt * z[0]
        db = rho * dw + rho_perp * sdt * z[1]
        vp = np.maximum(v, 0.0)
        sv = np.sqrt(vp)
        x += -0.5 * vp * dt + sv * db
        qv += vp * dt
        v += lam * (xi0 - vp) * dt + nu * sv * dw
    vT = np.maximum(v, 0.0)
    # forward variance after the horizon reverts exponentially toward xi0,
    # so the length-`window` swap value is an affine function of terminal v
    zeta = xi0 * window + (vT - xi0) * (1.0 - math.exp(-lam * window)) / lam
    return {"X": x, "QV": qv, "zeta": zeta}


def _sim_stopped_bm(cfg: SimConfig, rng: np.random.Generator, m: int) -> Dict[str, np.ndarray]:
    start = cfg.param("start", 0.0)
    if not -1.0 <= start <= 1.0:
        raise DomainError("start must lie in [-1, 1]")
    n = cfg.n_steps
    dt = cfg.horizon / n
    sdt = math.sqrt(dt)
    x = np.full(m, start)
    val = np.zeros(m)
    alive = np.ones(m, dtype=bool)
    for _ in range(n):
        z = rng.standard_normal(m)
        u = rng.random((2, m))
        xn = x + sdt * z
        inside = (np.abs(x) < 1.0) & (np.abs(xn) < 1.0)
        # bridge crossing probabilities within the step
        p_up = np.where(inside, np.exp(-2.0 * (1.0 - x) * (1.0 - xn) / dt), 0.0)
        p_dn = np.where(inside, np.exp(-2.0 * (1.0 + x) * (1.0 + xn) / dt), 0.0)
        hit_up = alive & ((xn >= 1.0) | (u[0] < p_up))
        hit_dn = alive & ~hit_up & ((xn <= -1.0) | (u[1] < p_dn))
        val[hit_up] = 1.0
        val[hit_dn] = -1.0
        alive &= ~(hit_up | hit_dn)
        x = np.where(alive, xn, x)
    # paths still alive at the horizon are attributed to the nearer barrier;
    # with barriers at +-1 the unstopped mass decays like exp(-pi^2 T / 8)
    val[alive] = np.where(x[alive] >= 0.0, 1.0, -1.0)
    return {"X": val}


def _sim_chaos2(cfg: SimConfig, rng: np.random.Generator, m: int) -> Dict[str, np.ndarray]:
    kernel = np.asarray(cfg.params["kernel"], dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise DomainError("chaos kernel must be a square matrix")
    if not np.all(np.isfinite(kernel)):
        raise DomainError("chaos kernel must be finite")
    if np.any(np.tril(kernel) != 0.0):
        raise DomainError("chaos kernel must be strictly upper triangular")
    M = kernel.shape[0]
    h = cfg.horizon / M
    sh = math.sqrt(h)
    out = np.empty(m)
    chunk = max(1, min(m, (1 << 21) // max(M, 1)))
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        db = sh * rng.standard_normal((hi - lo, M))
        out[lo:hi] = np.einsum("ij,ij->i", db @ kernel.T, db)
    return {"X": out}


_SIMULATORS = {
    "BMdrift": _sim_bm_drift,
    "LevyArea": _sim_levy_area,
    "BESQ": _sim_besq,
    "Heston": _sim_heston,
    "StoppedBM": _sim_stopped_bm,
    "Chaos2": _sim_chaos2,
}


def _thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
        return max(1, cap)
    return max(1, min(4, os.cpu_count() or 1))


def simulate(cfg: SimConfig) -> Samples:
    """Run the configured model and return terminal samples, column per functional.

    The path space is split into blocks of ``BLOCK_PATHS``; block ``i`` uses the
    generator keyed ``(seed, i)``, so the result is independent of worker count.
    """
    kernel_fn = _SIMULATORS[cfg.model]
    n_blocks = (cfg.n_paths + BLOCK_PATHS - 1) // BLOCK_PATHS

    def run_block(i: int) -> Dict[str, np.ndarray]:
        m = min(BLOCK_PATHS, cfg.n_paths - i * BLOCK_PATHS)
        return kernel_fn(cfg, _block_rng(cfg.seed, i), m)

    workers = min(_thread_cap(), n_blocks)
    if workers == 1:
        parts = [run_block(i) for i in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_block, range(n_blocks)))
    names = parts[0].keys()
    columns = {k: np.concatenate([p[k] for p in parts]) for k in names}
    return Samples(columns=columns, config=cfg)


# ---------------------------------------------------------------------------
# estimators


def _as_array(samples, column: Optional[str]) -> np.ndarray:
    if isinstance(samples, Samples):
        data = samples.column(column) if column else samples.single_column()
    else:
        data = np.asarray(samples, dtype=float)
        if data.ndim != 1:
            raise ValueError("samples must be one-dimensional")
    return data


def _central_moments(x: np.ndarray, up_to: int) -> Dict[int, float]:
    d = x - x.mean()
    out: Dict[int, float] = {}
    p = d.copy()
    for r in range(2, up_to + 1):
        p = p * d
        out[r] = float(p.mean())
    return out


def _plugin_cumulants(x: np.ndarray, up_to: int) -> Dict[int, float]:
    """Cumulants from central moments (plug-in, no small-sample correction)."""
    m = _central_moments(x, max(up_to, 2))
    k: Dict[int, float] = {1: float(x.mean()), 2: m[2]}
    if up_to >= 3:
        k[3] = m[3]
    if up_to >= 4:
        k[4] = m[4] - 3 * m[2] ** 2
    if up_to >= 5:
        k[5] = m[5] - 10 * m[3] * m[2]
    if up_to >= 6:
        k[6] = m[6] - 15 * m[4] * m[2] - 10 * m[3] ** 2 + 30 * m[2] ** 3
    if up_to >= 8:
        k[8] = (
            m[8]
            - 28 * m[6] * m[2]
            - 56 * m[5] * m[3]
            - 35 * m[4] ** 2
            + 420 * m[4] * m[2] ** 2
            + 560 * m[3] ** 2 * m[2]
            - 630 * m[2] ** 4
        )
    return k


def _k_statistics(x: np.ndarray, up_to: int) -> Dict[int, float]:
    n = x.size
    m = _central_moments(x, max(up_to, 2))
    k: Dict[int, float] = {1: float(x.mean())}
    k[2] = n / (n - 1) * m[2]
    if up_to >= 3:
        k[3] = n * n / ((n - 1) * (n - 2)) * m[3]
    if up_to >= 4:
        k[4] = (
            n * n * ((n + 1) * m[4] - 3 * (n - 1) * m[2] ** 2)
            / ((n - 1) * (n - 2) * (n - 3))
        )
    return k


def _k_statistic_variances(x: np.ndarray, up_to: int) -> Dict[int, float]:
    """Large-sample sampling variances of k1..k4 with cumulants plugged in."""
    n = x.size
    hi = 8 if up_to >= 4 else (6 if up_to >= 3 else 4)
    kap = _plugin_cumulants(x, hi)
    k2, k3, k4 = kap[2], kap.get(3, 0.0), kap.get(4, 0.0)
    out = {1: k2 / n, 2: k4 / n + 2 * k2**2 / (n - 1)}
    if up_to >= 3:
        out[3] = (
            kap[6] / n
            + 9 * k2 * k4 / (n - 1)
            + 9 * k3**2 / (n - 1)
            + 6 * n * k2**3 / ((n - 1) * (n - 2))
        )
    if up_to >= 4:
        out[4] = (
            kap[8] / n
            + 16 * k2 * kap[6] / (n - 1)
            + 48 * k3 * kap[5] / (n - 1)
            + 34 * k4**2 / (n - 1)
            + 72 * n * k2**2 * k4 / ((n - 1) * (n - 2))
            + 144 * n * k2 * k3**2 / ((n - 1) * (n - 2))
            + 24 * n * (n + 1) * k2**4 / ((n - 1) * (n - 2) * (n - 3))
        )
    return out


def empirical_cumulants(
    samples,
    max_order: int,
    column: Optional[str] = None,
    bootstrap_resamples: int = 200,
    bootstrap_seed: int = 0,
) -> List[CumulantEstimate]:
    """Cumulant estimates with standard errors.

    Orders 1-4 use unbiased k-statistics with the classical large-sample
    variance formulas (higher cumulants plugged in from the same sample).
    Orders 5-6 use plug-in sample cumulants with a bootstrap standard error.
    """
    if not 1 <= max_order <= 6:
        raise ValueError("max_order must be between 1 and 6")
    x = _as_array(samples, column)
    n = x.size
    if n <= 10 * max_order:
        raise DomainError(
            f"need more than {10 * max_order} samples for order {max_order}, got {n}"
        )
    lo = min(max_order, 4)
    ks = _k_statistics(x, lo)
    vs = _k_statistic_variances(x, lo)
    out = [
        CumulantEstimate(r, ks[r], math.sqrt(max(vs[r], 0.0)), "k-statistic")
        for r in range(1, lo + 1)
    ]
    if max_order >= 5:
        point = _plugin_cumulants(x, max_order)
        rng = np.random.Generator(np.random.Philox(key=[bootstrap_seed, 0xB0075]))
        reps: Dict[int, List[float]] = {r: [] for r in range(5, max_order + 1)}
        for _ in range(bootstrap_resamples):
            idx = rng.integers(0, n, n)
            kb = _plugin_cumulants(x[idx], max_order)
            for r in reps:
                reps[r].append(kb[r])
        for r in range(5, max_order + 1):
            se = float(np.std(reps[r], ddof=1))
            out.append(CumulantEstimate(r, point[r], se, "bootstrap"))
    return out


def empirical_mgf(samples, weights: Tuple[float, float, float]) -> MgfEstimate:
    """Sample mean of exp(a*X + b*QV + c*zeta) with its standard error.

    Flags tail dominance (top 0.1% of paths carrying more than 20% of the
    mean), which signals that the plain average is no longer trustworthy.
    """
    a, b, c = (float(w) for w in weights)
    if isinstance(samples, Samples):
        cols = samples.columns
    else:
        cols = {k: np.asarray(v, dtype=float) for k, v in dict(samples).items()}
    exponent = None

    def accumulate(weight: float, name: str):
        nonlocal exponent
        if weight == 0.0:
            return
        if name not in cols:
            raise DomainError(f"weight on {name!r} but samples lack that column")
        term = weight * cols[name]
        exponent = term if exponent is None else exponent + term

    accumulate(a, "X")
    accumulate(b, "QV")
    accumulate(c, "zeta")
    if exponent is None:
        n = next(iter(cols.values())).size
        return MgfEstimate(1.0, 0.0, max(1, int(0.001 * n)) / n, False)
    w = np.exp(exponent)
    n = w.size
    value = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(n))
    top = max(1, int(0.001 * n))
    tail = float(np.sort(w)[-top:].sum() / (n * value))
    warning = tail > 0.20
    if warning:
        warnings.warn(
            f"top {top} samples carry {tail:.1%} of the MGF estimate; "
            "weights look too large for a plain average",
            RuntimeWarning,
            stacklevel=2,
        )
    return MgfEstimate(value, se, tail, warning)
