"""Wealth processes, trading strategies, and replication checks.

The log-utility example with reciprocal loss and deterministic market
price of risk has a closed-form wealth surface F(z, t); its z-derivative
gives the trading strategy.  Other scenarios estimate the wealth path by
cross-sectional regression of the measure-changed terminal payoff on
functions of the observable state.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .dual_solver import DualSolution, Scenario
from .exceptions import ConfigError, IllConditioned, QuadratureFailure
from .information import DensityPath, FiltrationKind, MarketPriceOfRisk
from .market import PathBundle
from .preferences import UtilitySpec

__all__ = [
    "ValueReport",
    "ClosedFormExample",
    "WealthPath",
    "StrategyPath",
    "optimal_terminal_wealth",
    "value",
    "value_of_solution",
    "wealth_path_closed_form",
    "strategy_closed_form",
    "wealth_path_regression",
    "regression_strategy",
    "replicate",
    "orthogonality_check",
    "paths_csv",
]


@dataclass(frozen=True)
class ValueReport:
    value: float
    stderr: float
    kind: FiltrationKind | None = None
    stratum: int | None = None


@dataclass(frozen=True)
class WealthPath:
    x_hat: np.ndarray
    method: str


@dataclass(frozen=True)
class StrategyPath:
    pi_hat: np.ndarray
    method: str


def optimal_terminal_wealth(sol: DualSolution) -> np.ndarray:
    """Per-path optimal terminal wealth in original path order."""
    return sol.r_hat


def value(r_hat, utility: UtilitySpec, kind=None, stratum=None) -> ValueReport:
    """Sample mean of the utility of terminal wealth, with standard error."""
    u = np.asarray(utility.u(np.asarray(r_hat, dtype=float)), dtype=float)
    return ValueReport(
        value=float(np.mean(u)),
        stderr=float(np.std(u, ddof=1) / math.sqrt(len(u))) if len(u) > 1 else 0.0,
        kind=kind, stratum=stratum,
    )


def value_of_solution(sol: DualSolution) -> ValueReport:
    """Stratum-weighted value; weights are the empirical stratum masses,
    so this is just the overall sample mean."""
    return value(sol.r_hat, sol.scenario.utility, kind=sol.scenario.kind)


# ---------------------------------------------------------------------------
# closed-form example (log utility, reciprocal loss with scale 3)


class ClosedFormExample:
    """Wealth surface F(z, t) for deterministic market price of risk.

    Conditional on Z_t = z, the terminal density is z * exp(a + b*eta)
    with a = -v/2, b = -sqrt(v), v the remaining squared risk premium, and
    eta standard normal.  F and its z-derivative are Gaussian expectations
    evaluated by Gauss-Hermite quadrature; the order is validated at
    construction by doubling.
    """

    def __init__(self, lam_grid: np.ndarray, dt: float, lam_star: float,
                 y_hat: float, order: int = 64):
        lam_grid = np.asarray(lam_grid, dtype=float)
        if lam_grid.ndim != 1:
            raise ConfigError("need a 1-d deterministic risk-premium path")
        self.lam_star = float(lam_star)
        self.y_hat = float(y_hat)
        self.order = order
        steps = lam_grid ** 2 * dt
        # v[k] = remaining integral of Lambda^2 from t_k to T
        self.v = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
        nodes, weights = hermgauss(order)
        self.eta = nodes * math.sqrt(2.0)
        self.w = weights / math.sqrt(math.pi)
        nodes2, weights2 = hermgauss(2 * order)
        self._eta2 = nodes2 * math.sqrt(2.0)
        self._w2 = weights2 / math.sqrt(math.pi)
        self._validate()

    def a(self, k: int) -> float:
        return -0.5 * self.v[k]

    def b(self, k: int) -> float:
        return -math.sqrt(self.v[k])

    def _psi(self, z, k, eta, w, deriv=False):
        z = np.asarray(z, dtype=float)
        kernel = np.exp(self.a(k) + self.b(k) * eta)       # (q,)
        arg = 1.0 + 12.0 * self.lam_star * self.y_hat * z[..., None] * kernel
        if deriv:
            vals = 6.0 * self.lam_star * self.y_hat * kernel / np.sqrt(arg)
        else:
            vals = np.sqrt(arg)
        return vals @ w

    def psi(self, z, k: int):
        return self._psi(z, k, self.eta, self.w)

    def psi_prime(self, z, k: int):
        return self._psi(z, k, self.eta, self.w, deriv=True)

    def F(self, z, k: int):
        z = np.asarray(z, dtype=float)
        return (1.0 + self.psi(z, k)) / (2.0 * self.y_hat * z)

    def F_z(self, z, k: int):
        z = np.asarray(z, dtype=float)
        return (self.psi_prime(z, k) * z - (1.0 + self.psi(z, k))) \
            / (2.0 * self.y_hat * z ** 2)

    def _validate(self):
        if self.lam_star == 0.0:
            return
        probe = np.array([0.25, 1.0, 4.0])
        k = 0
        coarse = self._psi(probe, k, self.eta, self.w)
        fine = self._psi(probe, k, self._eta2, self._w2)
        rel = np.max(np.abs(coarse - fine) / np.maximum(np.abs(fine), 1e-300))
        if rel > 1e-6:
            raise QuadratureFailure(
                f"order {self.order} vs {2 * self.order} disagree by {rel:.2e}"
            )


def closed_form_example(sol: DualSolution, lam: MarketPriceOfRisk,
                        stratum: int = 0, order: int = 64) -> ClosedFormExample:
    """Build the wealth surface from a solved stratum.

    The market price of risk must be deterministic within the stratum;
    the first path's row is taken as the common deterministic path after
    an equality check.
    """
    st = sol.strata[stratum]
    rows = lam.lam[st.indices]
    if not np.allclose(rows, rows[0], rtol=0, atol=1e-12):
        raise ConfigError("market price of risk is not deterministic "
                          "within the stratum")
    dt = sol.scenario.grid.dt if sol.scenario.grid is not None \
        else sol.scenario.paths.grid.dt
    return ClosedFormExample(rows[0], dt, st.lambda_star, st.y_hat, order=order)


def wealth_path_closed_form(sol: DualSolution, example: ClosedFormExample,
                            dens: DensityPath, stratum: int = 0) -> WealthPath:
    st = sol.strata[stratum]
    z = dens.z[st.indices]
    x_hat = np.empty_like(z)
    for k in range(z.shape[1]):
        x_hat[:, k] = example.F(z[:, k], k)
    return WealthPath(x_hat=x_hat, method="closed-form")


def strategy_closed_form(sol: DualSolution, example: ClosedFormExample,
                         dens: DensityPath, lam: MarketPriceOfRisk,
                         stratum: int = 0) -> StrategyPath:
    st = sol.strata[stratum]
    z = dens.z[st.indices]
    lam_rows = lam.lam[st.indices]
    sig_rows = lam.sigma[st.indices]
    n_steps = lam_rows.shape[1]
    pi = np.empty((len(st.indices), n_steps))
    for k in range(n_steps):
        fz = example.F_z(z[:, k], k)
        pi[:, k] = -lam_rows[:, k] / sig_rows[:, k] * z[:, k] * fz
    return StrategyPath(pi_hat=pi, method="closed-form")


# ---------------------------------------------------------------------------
# regression wealth paths


def _design(z: np.ndarray, powers, extra_cols) -> np.ndarray:
    cols = [z ** p for p in powers]
    cols.extend(extra_cols)
    return np.column_stack(cols)


def _fit_slice(a: np.ndarray, y: np.ndarray, cond_cap: float = 1e12):
    # scale columns so the condition estimate reflects the basis, not units
    scale = np.linalg.norm(a, axis=0)
    scale[scale == 0] = 1.0
    a_s = a / scale
    s = np.linalg.svd(a_s, compute_uv=False)
    if s[0] / max(s[-1], 1e-300) > cond_cap:
        raise IllConditioned("regression basis nearly collinear")
    coef, *_ = np.linalg.lstsq(a_s, y, rcond=None)
    return coef / scale


def wealth_path_regression(sol: DualSolution, scenario: Scenario,
                           dens: DensityPath | None = None,
                           powers=(0, 1, 2, -1),
                           posterior=None) -> WealthPath:
    """Per-time-slice least squares of (Z_T / Z_t) * R_hat on functions
    of the observable state.

    Falls back to the sub-basis (0, 1, -1) when the design matrix of a
    slice is numerically collinear.  The time-0 value is pinned to the
    initial capital.
    """
    dens = dens or scenario.density
    if dens is None:
        raise ConfigError("scenario carries no density paths")
    z = dens.z
    r_hat = sol.r_hat
    n, m = z.shape
    x_hat = np.empty((n, m))
    x_hat[:, 0] = scenario.x
    z_last = z[:, -1]
    extra = []
    if posterior is not None:
        extra.append(posterior.p)
    if scenario.kind in (FiltrationKind.PROGRESSIVE_W,
                         FiltrationKind.PROGRESSIVE_S) \
            and scenario.paths is not None:
        extra.append(scenario.paths.regime.astype(float))
    for k in range(1, m):
        zk = z[:, k]
        y = z_last / zk * r_hat
        cols = [e[:, k] for e in extra]
        try:
            a = _design(zk, powers, cols)
            coef = _fit_slice(a, y)
            x_hat[:, k] = a @ coef
        except IllConditioned:
            a = _design(zk, (0, 1, -1), cols)
            coef = _fit_slice(a, y, cond_cap=np.inf)
            x_hat[:, k] = a @ coef
    return WealthPath(x_hat=x_hat, method="regression")


def regression_strategy(sol: DualSolution, scenario: Scenario,
                        lam: MarketPriceOfRisk,
                        dens: DensityPath | None = None,
                        powers=(0, 1, 2, -1)) -> StrategyPath:
    """Strategy from the analytic z-derivative of per-slice polynomial fits."""
    dens = dens or scenario.density
    z = dens.z
    r_hat = sol.r_hat
    n, m = z.shape
    z_last = z[:, -1]
    pi = np.empty((n, m - 1))
    for k in range(m - 1):
        zk = z[:, k]
        if k == 0:
            # degenerate slice (Z_0 = 1): derivative from the next slice's
            # fit evaluated at 1 would be equally arbitrary; fit slice 1's
            # target on slice-0-free info is impossible, so use the exact
            # conditional mean derivative estimated from slice 1
            zk = z[:, 1]
            y = z_last / zk * r_hat
        else:
            y = z_last / zk * r_hat
        a = _design(zk, powers, [])
        coef = _fit_slice(a, y, cond_cap=np.inf)
        z_eval = z[:, k]
        dfdz = np.zeros(n)
        for p, cp in zip(powers, coef):
            if p != 0:
                dfdz += cp * p * z_eval ** (p - 1)
        pi[:, k] = -lam.lam[:, k] / lam.sigma[:, k] * z_eval * dfdz
    return StrategyPath(pi_hat=pi, method="regression")


# ---------------------------------------------------------------------------
# replication and orthogonality


def replicate(strategy: StrategyPath, paths: PathBundle,
              sol: DualSolution, indices=None) -> dict:
    """Run the self-financing wealth recursion and compare with the target.

    Returns terminal values, per-path relative deviation from the optimal
    terminal wealth, and the pooled relative root-mean-square error.
    """
    r_hat = sol.r_hat
    if indices is not None:
        r_hat = r_hat[indices]
        ds = np.diff(paths.s_tilde[indices], axis=1)
    else:
        ds = np.diff(paths.s_tilde, axis=1)
    x0 = sol.scenario.x
    gains = np.sum(strategy.pi_hat * ds, axis=1)
    x_term = x0 + gains
    dev = (x_term - r_hat) / r_hat
    rmse = float(np.sqrt(np.mean((x_term - r_hat) ** 2)) / np.mean(r_hat))
    return {"terminal": x_term, "relative_deviation": dev, "rel_rmse": rmse}


def orthogonality_check(sol: DualSolution, scenario: Scenario,
                        lam: MarketPriceOfRisk,
                        dens: DensityPath | None = None,
                        perturb: float = 0.0) -> dict:
    """Correlation of the hedge residual with a family of test integrals.

    A strategy whose residual is pure noise should be uncorrelated with
    any integral of a predictable function against the innovation; the
    report carries the worst correlation over the test family.
    """
    dens = dens or scenario.density
    strat = regression_strategy(sol, scenario, lam, dens)
    pi = strat.pi_hat * (1.0 + perturb)
    ds = np.diff(scenario.paths.s_tilde, axis=1)
    resid = sol.r_hat - scenario.x - np.sum(pi * ds, axis=1)
    z = dens.z[:, :-1]
    tests = {
        "one": np.sum(dens.dw_hat, axis=1),
        "z": np.sum(z * dens.dw_hat, axis=1),
        "z2": np.sum(z ** 2 * dens.dw_hat, axis=1),
    }
    corrs = {}
    for name, t in tests.items():
        sr = np.std(resid)
        st = np.std(t)
        corrs[name] = 0.0 if sr == 0 or st == 0 else float(
            np.corrcoef(resid, t)[0, 1]
        )
    max_corr = max(abs(v) for v in corrs.values())
    return {"correlations": corrs, "max_abs_corr": max_corr,
            "residual_std": float(np.std(resid))}


def paths_csv(dens: DensityPath, wealth: WealthPath, strategy: StrategyPath,
              times: np.ndarray, out_path: str) -> None:
    """Write rows (path, step, t, Z, X_hat, pi_hat); pi blank at the horizon."""
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "step", "t", "Z", "X_hat", "pi_hat"])
        n, m = wealth.x_hat.shape
        for i in range(n):
            for k in range(m):
                pi_val = repr(strategy.pi_hat[i, k]) \
                    if k < strategy.pi_hat.shape[1] else ""
                writer.writerow([i, k, repr(float(times[k])),
                                 repr(dens.z[i, k]),
                                 repr(wealth.x_hat[i, k]), pi_val])
