"""Lagrangian dual of utility maximization under a shortfall constraint.

The primal problem maximizes expected utility of terminal wealth subject
to a budget constraint priced by the density Z_T and a loss benchmark
E[L(-X_T)] <= eps.  Its dual reduces to two nested scalar roots: for a
penalty lam, the budget multiplier y_hat(lam) matches the capital; the
outer root picks lam so the risk curve k(lam) hits the benchmark.  Both
curves are strictly monotone, so plain bracketed root finding is exact up
to the Monte Carlo sample, which is held fixed (common random numbers)
across every curve evaluation.

Models whose time-0 information already contains the change point solve
one such problem per change-point stratum; the reported multipliers are
then functions of the stratum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .exceptions import (
    BracketFailure,
    ConfigError,
    Infeasible,
    NonFinite,
    OutOfRange,
)
from .information import (
    DensityPath,
    FiltrationKind,
    VolCase,
    change_point_filter,
    density_path,
    market_price_of_risk,
)
from .market import MarketModel, PathBundle, SimGrid, simulate_paths
from .preferences import (
    CombinedLagrangian,
    LossSpec,
    UtilitySpec,
    lagrangian_inverse,
    loss_marginal_inverse_H,
)

__all__ = [
    "Scenario",
    "EpsBounds",
    "StratumSolution",
    "DualSolution",
    "budget_curve",
    "solve_budget_multiplier",
    "risk_curve",
    "estimate_eps_bounds",
    "solve_dual",
]

MAX_DOUBLINGS = 200


@dataclass
class Scenario:
    """A solvable problem instance bound to one fixed sample of densities.

    Either built from a market model (simulate, then transform to the
    requested filtration) or directly from terminal density samples for
    oracle-style tests.  eps may be given absolutely or as a quantile
    between the per-stratum feasibility bounds.
    """

    utility: UtilitySpec
    loss: LossSpec
    x: float
    eps: float | None = None
    eps_quantile: float | None = None
    kind: FiltrationKind = FiltrationKind.PROGRESSIVE_S
    model: MarketModel | None = None
    grid: SimGrid | None = None
    vol_case: VolCase | None = None
    n_paths: int = 10_000
    seed: int = 0
    n_strata: int = 4
    workers: int = 1
    solver_tol: float = 1e-10
    paths: PathBundle | None = field(default=None, repr=False)
    density: DensityPath | None = field(default=None, repr=False)
    z_samples: np.ndarray | None = field(default=None, repr=False)
    tau_samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.x <= 0:
            raise ConfigError("initial capital must be positive")
        if self.eps is None and self.eps_quantile is None:
            raise ConfigError("need eps or eps_quantile")
        if self.eps_quantile is not None and not 0.0 <= self.eps_quantile <= 1.0:
            raise ConfigError("eps_quantile must lie in [0, 1]")

    @classmethod
    def from_samples(cls, z_samples, utility, loss, x, **kw) -> "Scenario":
        z = np.asarray(z_samples, dtype=float)
        if np.any(z <= 0):
            raise ConfigError("density samples must be positive")
        sc = cls(utility=utility, loss=loss, x=x, **kw)
        sc.z_samples = z
        sc.n_paths = len(z)
        return sc

    def ensure_samples(self) -> None:
        """Simulate once and cache terminal densities; later calls reuse them."""
        if self.z_samples is not None:
            return
        if self.model is None or self.grid is None:
            raise ConfigError("scenario has neither samples nor a model")
        if self.paths is None:
            self.paths = simulate_paths(self.model, self.grid, self.n_paths,
                                        self.seed, workers=self.workers)
        if self.density is None:
            posterior = None
            if (self.kind is FiltrationKind.PRICE_ONLY
                    and (self.vol_case is None or self.vol_case.kind != "distinct")):
                posterior = change_point_filter(self.model, self.paths)
            lam = market_price_of_risk(self.model, self.paths, self.kind,
                                       vol_case=self.vol_case, posterior=posterior)
            self.density = density_path(lam, self.paths)
        self.z_samples = self.density.z[:, -1]
        self.tau_samples = self.paths.tau

    def strata(self) -> list[np.ndarray]:
        """Index cells on which the problem is solved separately.

        Non-enlarged models get one cell.  Initially enlarged models are
        cut into change-point quantile cells (one cell per atom for purely
        atomic laws with few atoms).
        """
        self.ensure_samples()
        n = len(self.z_samples)
        if not self.kind.initially_enlarged or self.tau_samples is None:
            return [np.arange(n)]
        tau = self.tau_samples
        uniq = np.unique(tau)
        if len(uniq) <= self.n_strata:
            return [np.nonzero(tau == v)[0] for v in uniq]
        edges = np.quantile(tau, np.linspace(0, 1, self.n_strata + 1)[1:-1])
        cell = np.searchsorted(edges, tau, side="right")
        return [np.nonzero(cell == j)[0] for j in range(self.n_strata)
                if np.any(cell == j)]


@dataclass(frozen=True)
class EpsBounds:
    eps_max: float
    eps_min: float
    c_star: float


@dataclass(frozen=True)
class StratumSolution:
    indices: np.ndarray
    weight: float
    eps: float
    lambda_star: float
    y_hat: float
    binding: bool
    budget_residual: float
    risk_residual: float
    bounds: EpsBounds
    r_hat: np.ndarray


@dataclass(frozen=True)
class DualSolution:
    scenario: Scenario
    strata: list

    def _single(self) -> StratumSolution:
        if len(self.strata) != 1:
            raise ConfigError("stratified solution; address strata directly")
        return self.strata[0]

    @property
    def lambda_star(self) -> float:
        return self._single().lambda_star

    @property
    def y_hat(self) -> float:
        return self._single().y_hat

    @property
    def binding(self) -> bool:
        return self._single().binding

    @property
    def bounds(self) -> EpsBounds:
        return self._single().bounds

    @property
    def r_hat(self) -> np.ndarray:
        """Optimal terminal wealth in original path order across strata."""
        n = sum(len(s.indices) for s in self.strata)
        out = np.empty(n)
        for s in self.strata:
            out[s.indices] = s.r_hat
        return out


# ---------------------------------------------------------------------------
# curves on a raw sample


def _budget(z: np.ndarray, cl: CombinedLagrangian, y: float) -> float:
    vals = z * lagrangian_inverse(cl, y * z)
    out = float(np.mean(vals))
    if not math.isfinite(out):
        raise NonFinite(f"budget curve overflowed at y={y}")
    return out


def budget_curve(scenario: Scenario, lam: float, y: float,
                 stratum: int = 0) -> float:
    """Mean of Z_T * I_lam(y Z_T) over the requested stratum's sample."""
    idx = scenario.strata()[stratum]
    cl = CombinedLagrangian(scenario.utility, scenario.loss, lam)
    return _budget(scenario.z_samples[idx], cl, y)


def _solve_y(z: np.ndarray, cl: CombinedLagrangian, x: float,
             tol: float) -> float:
    def f(y: float) -> float:
        return _budget(z, cl, y) - x

    lo = hi = 1.0
    f1 = f(1.0)
    if f1 > 0:          # budget too high: y must grow
        for _ in range(MAX_DOUBLINGS):
            hi *= 2.0
            if f(hi) < 0:
                break
        else:
            raise BracketFailure("budget multiplier upper bracket not found")
        lo = hi / 2.0
    elif f1 < 0:
        for _ in range(MAX_DOUBLINGS):
            lo *= 0.5
            if f(lo) > 0:
                break
        else:
            raise BracketFailure("budget multiplier lower bracket not found")
        hi = lo * 2.0
    else:
        return 1.0
    y = float(brentq(f, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=300))
    if abs(f(y)) > tol * x:
        raise BracketFailure(f"budget residual {f(y)} above tolerance at y={y}")
    return y


def solve_budget_multiplier(scenario: Scenario, lam: float,
                            stratum: int = 0) -> float:
    """The y with mean(Z_T * I_lam(y Z_T)) = x on the stratum sample."""
    idx = scenario.strata()[stratum]
    cl = CombinedLagrangian(scenario.utility, scenario.loss, lam)
    return _solve_y(scenario.z_samples[idx], cl, scenario.x, scenario.solver_tol)


def _risk(z: np.ndarray, scenario: Scenario, lam: float, y: float) -> float:
    cl = CombinedLagrangian(scenario.utility, scenario.loss, lam)
    r = lagrangian_inverse(cl, y * z)
    out = float(np.mean(scenario.loss.l(-r)))
    if not math.isfinite(out):
        raise NonFinite(f"risk curve overflowed at lam={lam}")
    return out


def risk_curve(scenario: Scenario, lam: float, stratum: int = 0) -> float:
    """Expected loss of the lam-penalized optimum, at its own budget root."""
    idx = scenario.strata()[stratum]
    z = scenario.z_samples[idx]
    cl = CombinedLagrangian(scenario.utility, scenario.loss, lam)
    y = _solve_y(z, cl, scenario.x, scenario.solver_tol)
    return _risk(z, scenario, lam, y)


def _eps_bounds(z: np.ndarray, scenario: Scenario) -> EpsBounds:
    loss = scenario.loss
    x = scenario.x
    cl0 = CombinedLagrangian(scenario.utility, loss, 0.0)
    y0 = _solve_y(z, cl0, x, scenario.solver_tol)
    eps_max = _risk(z, scenario, 0.0, y0)

    def phi(c: float) -> float:
        arg = c * z
        if np.any(arg >= loss.marginal_at_zero):
            raise OutOfRange(
                "loss marginal domain exceeded at sample quantile "
                f"{float(np.mean(arg >= loss.marginal_at_zero))}"
            )
        return float(np.mean(-z * loss_marginal_inverse_H(loss, arg))) - x

    # phi is strictly decreasing in c
    lo = hi = 1.0
    if phi(1.0) > 0:
        for _ in range(MAX_DOUBLINGS):
            hi *= 2.0
            if phi(hi) < 0:
                break
        else:
            raise BracketFailure("no upper bracket for the minimal-risk root")
        lo = hi / 2.0
    else:
        for _ in range(MAX_DOUBLINGS):
            lo *= 0.5
            if phi(lo) > 0:
                break
        else:
            raise BracketFailure("no lower bracket for the minimal-risk root")
        hi = lo * 2.0
    c_star = float(brentq(phi, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=300))
    eps_min = float(np.mean(loss.l(loss_marginal_inverse_H(loss, c_star * z))))
    return EpsBounds(eps_max=eps_max, eps_min=eps_min, c_star=c_star)


def estimate_eps_bounds(scenario: Scenario, stratum: int = 0) -> EpsBounds:
    """Loosest meaningful benchmark (unconstrained loss) and tightest
    attainable one (minimal expected loss at the given capital)."""
    idx = scenario.strata()[stratum]
    return _eps_bounds(scenario.z_samples[idx], scenario)


def _resolve_eps(scenario: Scenario, bounds: EpsBounds) -> float:
    if scenario.eps is not None:
        return scenario.eps
    q = scenario.eps_quantile
    return bounds.eps_min + q * (bounds.eps_max - bounds.eps_min)


def _solve_stratum(scenario: Scenario, idx: np.ndarray,
                   weight: float) -> StratumSolution:
    z = scenario.z_samples[idx]
    x = scenario.x
    tol = scenario.solver_tol
    bounds = _eps_bounds(z, scenario)
    eps = _resolve_eps(scenario, bounds)
    eps_tol = 1e-9 * max(1.0, abs(bounds.eps_min))
    if eps < bounds.eps_min - eps_tol:
        raise Infeasible(eps, bounds.eps_min)
    eps_solve = max(eps, bounds.eps_min)

    slack_tol = 1e-9 * max(1.0, abs(bounds.eps_max))
    if eps_solve >= bounds.eps_max - slack_tol:
        lam_star, binding = 0.0, False
    else:
        def k(lam: float) -> float:
            cl = CombinedLagrangian(scenario.utility, scenario.loss, lam)
            y = _solve_y(z, cl, x, tol)
            return _risk(z, scenario, lam, y) - eps_solve

        hi = 1.0
        for _ in range(80):
            if k(hi) < 0:
                break
            hi *= 2.0
        else:
            # the risk curve approaches its infimum like 1/lam; failing to
            # cross means the benchmark sits at the attainable boundary
            raise Infeasible(eps, bounds.eps_min)
        lam_star = float(brentq(k, 0.0, hi, xtol=1e-14, rtol=8.9e-16,
                                maxiter=300))
        binding = True

    cl = CombinedLagrangian(scenario.utility, scenario.loss, lam_star)
    y_hat = _solve_y(z, cl, x, tol)
    r_hat = lagrangian_inverse(cl, y_hat * z)
    budget_res = float(np.mean(z * r_hat)) - x
    risk_val = float(np.mean(scenario.loss.l(-r_hat)))
    risk_res = risk_val - eps_solve if binding else 0.0
    return StratumSolution(
        indices=idx, weight=weight, eps=eps, lambda_star=lam_star,
        y_hat=y_hat, binding=binding, budget_residual=budget_res,
        risk_residual=risk_res, bounds=bounds, r_hat=r_hat,
    )


def solve_dual(scenario: Scenario) -> DualSolution:
    """Full solve: feasibility bounds, outer penalty root, budget root,
    per-path optimal terminal wealth.  One stratum per time-0 information
    cell."""
    scenario.ensure_samples()
    cells = scenario.strata()
    n = len(scenario.z_samples)
    strata = [_solve_stratum(scenario, idx, len(idx) / n) for idx in cells]
    return DualSolution(scenario=scenario, strata=strata)
