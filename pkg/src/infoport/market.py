"""Change-point market model and path simulation.

The risky asset's log-dynamics follow a diffusion whose drift and volatility
switch from a first to a second regime at a random time tau.  The price is the
stochastic exponential of the log-dynamics, so it stays strictly positive.
Simulation uses Euler-Maruyama on the log-dynamics with counter-based
per-path random streams, making results independent of how paths are
distributed over workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, NonFiniteState

__all__ = [
    "Coefficient",
    "CoefficientSpec",
    "ChangePointLaw",
    "MarketModel",
    "SimGrid",
    "PathBundle",
    "sample_change_point",
    "simulate_paths",
    "lipschitz_report",
    "paths_to_csv",
]


# ---------------------------------------------------------------------------
# coefficient functions


@dataclass(frozen=True)
class Coefficient:
    """A drift or volatility function of (time, state).

    Three representations: a constant, a time table with linear
    interpolation (state-independent), or a bilinear table over a
    time x state grid.
    """

    kind: str
    value: float = 0.0
    breakpoints: np.ndarray | None = None
    values: np.ndarray | None = None
    t_grid: np.ndarray | None = None
    x_grid: np.ndarray | None = None
    table: np.ndarray | None = None

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        return cls(kind="constant", value=float(value))

    @classmethod
    def time_table(cls, breakpoints, values) -> "Coefficient":
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        if bp.ndim != 1 or bp.shape != vals.shape or len(bp) < 2:
            raise ConfigError("breakpoints/values must be 1-d and equal length >= 2")
        if np.any(np.diff(bp) <= 0):
            raise ConfigError("breakpoints must be strictly increasing")
        return cls(kind="time_table", breakpoints=bp, values=vals)

    @classmethod
    def bilinear(cls, t_grid, x_grid, table) -> "Coefficient":
        tg = np.asarray(t_grid, dtype=float)
        xg = np.asarray(x_grid, dtype=float)
        tab = np.asarray(table, dtype=float)
        if tab.shape != (len(tg), len(xg)):
            raise ConfigError("table shape must be (len(t_grid), len(x_grid))")
        if np.any(np.diff(tg) <= 0) or np.any(np.diff(xg) <= 0):
            raise ConfigError("bilinear grids must be strictly increasing")
        return cls(kind="bilinear", t_grid=tg, x_grid=xg, table=tab)

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "time_table":
            v = float(np.interp(t, self.breakpoints, self.values))
            return np.full_like(x, v)
        # bilinear: interpolate the table row at time t, then in x
        row = np.array(
            [np.interp(t, self.t_grid, self.table[:, j]) for j in range(self.table.shape[1])]
        )
        return np.interp(x, self.x_grid, row)

    def depends_on_state(self) -> bool:
        return self.kind == "bilinear"


@dataclass(frozen=True)
class CoefficientSpec:
    """Regime-1 and regime-2 drift and volatility functions."""

    mu1: Coefficient
    mu2: Coefficient
    sigma1: Coefficient
    sigma2: Coefficient

    def validate(self, horizon: float, x_lo: float = -2.0, x_hi: float = 2.0) -> None:
        """Check volatility positivity on a probe grid."""
        ts = np.linspace(0.0, horizon, 17)
        xs = np.linspace(x_lo, x_hi, 33)
        for name, sig in (("sigma1", self.sigma1), ("sigma2", self.sigma2)):
            for t in ts:
                if np.any(sig(t, xs) <= 0.0):
                    raise ConfigError(f"{name} must be strictly positive")


# ---------------------------------------------------------------------------
# change-point law


@dataclass(frozen=True)
class ChangePointLaw:
    """Distribution of the regime-switch time tau, independent of the noise.

    Variants: exponential (optionally truncated to the horizon), uniform on
    (0, T), a point mass (possibly at infinity), or a discrete distribution.
    """

    kind: str
    rate: float = 0.0
    truncated: bool = False
    horizon: float = 0.0
    time: float = 0.0
    times: np.ndarray | None = None
    probs: np.ndarray | None = None

    @classmethod
    def exponential(cls, rate: float, truncated: bool = False, horizon: float = 0.0):
        if rate <= 0:
            raise ConfigError("exponential rate must be positive")
        if truncated and horizon <= 0:
            raise ConfigError("truncated exponential needs a positive horizon")
        return cls(kind="exponential", rate=float(rate), truncated=truncated,
                   horizon=float(horizon))

    @classmethod
    def uniform(cls, horizon: float):
        if horizon <= 0:
            raise ConfigError("uniform horizon must be positive")
        return cls(kind="uniform", horizon=float(horizon))

    @classmethod
    def point_mass(cls, time: float):
        if time < 0:
            raise ConfigError("point mass must be nonnegative")
        return cls(kind="point_mass", time=float(time))

    @classmethod
    def discrete(cls, times, probs):
        t = np.asarray(times, dtype=float)
        p = np.asarray(probs, dtype=float)
        if t.shape != p.shape or t.ndim != 1 or len(t) == 0:
            raise ConfigError("times/probs must be 1-d and equal length")
        if np.any(t < 0) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError("support must be >= 0 and probabilities sum to 1")
        order = np.argsort(t)
        return cls(kind="discrete", times=t[order], probs=p[order])

    # -- distribution functions -------------------------------------------

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "exponential":
            u = rng.random()
            if self.truncated:
                # inverse CDF of the law conditioned on tau <= T
                return -math.log1p(-u * (1.0 - math.exp(-self.rate * self.horizon))) / self.rate
            return rng.exponential(1.0 / self.rate)
        if self.kind == "uniform":
            return rng.random() * self.horizon
        if self.kind == "point_mass":
            rng.random()  # keep stream alignment across laws
            return self.time
        u = rng.random()
        idx = int(np.searchsorted(np.cumsum(self.probs), u, side="right"))
        return float(self.times[min(idx, len(self.times) - 1)])

    def cdf(self, t: float) -> float:
        """P(tau <= t)."""
        if t < 0:
            return 0.0
        if self.kind == "exponential":
            f = 1.0 - math.exp(-self.rate * t)
            if self.truncated:
                if t >= self.horizon:
                    return 1.0
                return f / (1.0 - math.exp(-self.rate * self.horizon))
            return f
        if self.kind == "uniform":
            return min(t / self.horizon, 1.0)
        if self.kind == "point_mass":
            return 1.0 if t >= self.time else 0.0
        return float(self.probs[self.times <= t].sum())

    def cdf_left(self, t: float) -> float:
        """P(tau < t); differs from cdf only at atoms."""
        if self.kind == "point_mass":
            return 1.0 if t > self.time else 0.0
        if self.kind == "discrete":
            return float(self.probs[self.times < t].sum())
        return self.cdf(t)

    def cum_hazard(self, t: float) -> float:
        """Integrated hazard of tau up to time t."""
        if t <= 0:
            return 0.0
        if self.kind in ("exponential", "uniform"):
            s = 1.0 - self.cdf(t)
            return math.inf if s <= 0.0 else -math.log(s)
        # atomic laws: sum of conditional jump probabilities
        total = 0.0
        if self.kind == "point_mass":
            ts, ps = np.array([self.time]), np.array([1.0])
        else:
            ts, ps = self.times, self.probs
        surv = 1.0
        for tj, pj in zip(ts, ps):
            if tj > t:
                break
            if surv > 0:
                total += pj / surv
            surv -= pj
        return total


# ---------------------------------------------------------------------------
# model and grid


@dataclass(frozen=True)
class MarketModel:
    coeffs: CoefficientSpec
    law: ChangePointLaw
    horizon: float
    s0: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.s0 <= 0:
            raise ConfigError("initial price must be positive")


@dataclass(frozen=True)
class SimGrid:
    n_steps: int
    horizon: float

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)


@dataclass(frozen=True)
class PathBundle:
    """Simulated paths on the grid.  All arrays are read-only after build.

    Shapes: tau (n,), dw (n, n_steps), s_tilde/s/regime (n, n_steps + 1).
    regime[i, k] is 1 iff t_k > tau_i, i.e. the second-regime coefficients
    were active on steps at and after k.
    """

    grid: SimGrid
    tau: np.ndarray
    dw: np.ndarray
    s_tilde: np.ndarray
    s: np.ndarray
    regime: np.ndarray
    quad_var: np.ndarray = field(repr=False, default=None)

    @property
    def n_paths(self) -> int:
        return len(self.tau)


# ---------------------------------------------------------------------------
# simulation


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    # Philox is counter-based: distinct keys give independent streams and the
    # draw for path i never depends on scheduling.
    return np.random.Generator(np.random.Philox(key=np.array([seed, path_index],
                                                             dtype=np.uint64)))


def sample_change_point(law: ChangePointLaw, rng: np.random.Generator) -> float:
    """Draw one change-point time from its law."""
    return law.sample(rng)


def _simulate_block(model: MarketModel, grid: SimGrid, lo: int, hi: int, seed: int):
    n = hi - lo
    n_steps = grid.n_steps
    dt = grid.dt
    sqdt = math.sqrt(dt)
    tau = np.empty(n)
    dw = np.empty((n, n_steps))
    for i in range(n):
        rng = _path_rng(seed, lo + i)
        tau[i] = sample_change_point(model.law, rng)
        dw[i] = rng.standard_normal(n_steps) * sqdt

    times = grid.times
    regime = (times[None, :] > tau[:, None]).astype(np.int8)
    s_tilde = np.zeros((n, n_steps + 1))
    qv = np.zeros((n, n_steps + 1))
    c = model.coeffs
    for k in range(n_steps):
        t = times[k]
        x = s_tilde[:, k]
        post = regime[:, k] == 1
        mu = np.where(post, c.mu2(t, x), c.mu1(t, x))
        sig = np.where(post, c.sigma2(t, x), c.sigma1(t, x))
        s_tilde[:, k + 1] = x + mu * dt + sig * dw[:, k]
        qv[:, k + 1] = qv[:, k] + sig * sig * dt
        if not np.all(np.isfinite(s_tilde[:, k + 1])):
            bad = int(np.argmax(~np.isfinite(s_tilde[:, k + 1])))
            raise NonFiniteState(lo + bad, k + 1)

    s = model.s0 * np.exp(s_tilde - 0.5 * qv)
    return tau, dw, s_tilde, s, regime, qv


def simulate_paths(model: MarketModel, grid: SimGrid, n_paths: int, seed: int,
                   workers: int = 1) -> PathBundle:
    """Euler-Maruyama simulation of the regime-switched log-dynamics.

    Deterministic given (seed, n_paths, grid); identical for any worker
    count because each path owns a counter-based stream and the per-path
    arithmetic never mixes paths.
    """
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1")
    if workers <= 1 or n_paths < 4 * workers:
        parts = [_simulate_block(model, grid, 0, n_paths, seed)]
    else:
        bounds = np.linspace(0, n_paths, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_block, model, grid, int(lo), int(hi), seed)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            parts = [f.result() for f in futures]

    tau, dw, s_tilde, s, regime, qv = (np.concatenate(a, axis=0) for a in zip(*parts))
    for arr in (tau, dw, s_tilde, s, regime, qv):
        arr.setflags(write=False)
    return PathBundle(grid=grid, tau=tau, dw=dw, s_tilde=s_tilde, s=s,
                      regime=regime, quad_var=qv)


# ---------------------------------------------------------------------------
# diagnostics and export


def _lipschitz_estimate(coeff: Coefficient, ts: np.ndarray, xs: np.ndarray) -> float:
    best = 0.0
    dx = np.diff(xs)
    for t in ts:
        vals = coeff(t, xs)
        best = max(best, float(np.max(np.abs(np.diff(vals)) / dx)))
    return best


def lipschitz_report(spec: CoefficientSpec, ts, xs) -> dict:
    """Empirical state-Lipschitz constants with a divergence flag.

    The flag trips when halving the state step roughly doubles the
    estimated constant, the signature of a jump in x.
    """
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if len(xs) < 2:
        raise ConfigError("need at least 2 state points")
    fine = np.sort(np.concatenate([xs, 0.5 * (xs[:-1] + xs[1:])]))
    report = {}
    for name in ("mu1", "mu2", "sigma1", "sigma2"):
        coeff = getattr(spec, name)
        k_coarse = _lipschitz_estimate(coeff, ts, xs)
        k_fine = _lipschitz_estimate(coeff, ts, fine)
        diverging = k_fine > 1.5 * k_coarse + 1e-12
        report[name] = {"K": k_fine, "diverging": bool(diverging)}
    return report


def paths_to_csv(bundle: PathBundle, path: str) -> None:
    """Write paths as rows (path, step, t, W, S_tilde, S, regime, tau)."""
    times = bundle.grid.times
    w = np.concatenate(
        [np.zeros((bundle.n_paths, 1)), np.cumsum(bundle.dw, axis=1)], axis=1
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "step", "t", "W", "S_tilde", "S", "regime", "tau"])
        for i in range(bundle.n_paths):
            for k in range(len(times)):
                writer.writerow([
                    i, k, repr(times[k]), repr(w[i, k]), repr(bundle.s_tilde[i, k]),
                    repr(bundle.s[i, k]), int(bundle.regime[i, k]), repr(bundle.tau[i]),
                ])
