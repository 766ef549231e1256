"""Filtration-specific market price of risk, densities, and the filter.

Five information models share one simulated path set.  The full-information
models read the regime indicator directly; the price-only model estimates
the regime through a discrete Bayes recursion over the change-point law.
Each model yields a market-price-of-risk process and, through an exact
log-Euler exponential, a density (state-price) path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import (
    ConfigError,
    DegenerateLikelihood,
    NonFinite,
    UnsupportedEnlargement,
)
from .market import ChangePointLaw, MarketModel, PathBundle, SimGrid

__all__ = [
    "FiltrationKind",
    "VolCase",
    "MarketPriceOfRisk",
    "DensityPath",
    "ChangePointPosterior",
    "RegimeIntervals",
    "CompensatedJump",
    "market_price_of_risk",
    "change_point_filter",
    "density_path",
    "detect_regime_intervals",
    "compensated_jump",
    "density_to_csv",
]


class FiltrationKind(Enum):
    """The five information models, coarsest to finest is roughly
    PRICE_ONLY < PROGRESSIVE_* < INITIALLY_ENLARGED_*."""

    INITIALLY_ENLARGED_W = "init-w"
    INITIALLY_ENLARGED_S = "init-s"
    PROGRESSIVE_W = "prog-w"
    PROGRESSIVE_S = "prog-s"
    PRICE_ONLY = "price"

    @property
    def initially_enlarged(self) -> bool:
        return self in (FiltrationKind.INITIALLY_ENLARGED_W,
                        FiltrationKind.INITIALLY_ENLARGED_S)


@dataclass(frozen=True)
class VolCase:
    """How the two regime volatilities relate on the observation domain.

    "identical" means the price reveals nothing about the regime through
    its quadratic variation; "distinct" means the regime is revealed
    instantly; "semi_identical" carries a predicate on (t, price) marking
    the region where the volatilities agree.
    """

    kind: str
    region: object = None

    def __post_init__(self):
        if self.kind not in ("identical", "distinct", "semi_identical"):
            raise ConfigError(f"unknown volatility case {self.kind!r}")
        if self.kind == "semi_identical" and self.region is None:
            raise ConfigError("semi_identical needs a region predicate")


@dataclass(frozen=True)
class MarketPriceOfRisk:
    """Per-path drift/volatility ratio, left-point evaluated.

    lam[i, k] multiplies the step-k increment, so it uses information up
    to t_k only.  sigma holds the matching effective volatility.
    """

    kind: FiltrationKind
    lam: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class DensityPath:
    """State-price density Z along each path with its innovation increments."""

    kind: FiltrationKind
    z: np.ndarray
    dw_hat: np.ndarray


@dataclass(frozen=True)
class ChangePointPosterior:
    """Posterior change probabilities from price observations.

    p[i, k] = P(tau <= t_k | observations up to t_k).  g[i, k] is the
    predictable variant used as the regime weight on step k: the
    probability that the switch happened strictly before the step, given
    observations up to t_k only.
    """

    p: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class RegimeIntervals:
    """Per path, alternating boundary times of the agreement region.

    rho[i] lists grid times where (t, S_t) crosses in or out of the
    region, starting from time 0 state, padded with the horizon.
    """

    inside0: np.ndarray
    rho: list


@dataclass(frozen=True)
class CompensatedJump:
    """Jump indicator minus its compensator, a zero-mean martingale."""

    a: np.ndarray
    n: np.ndarray


# ---------------------------------------------------------------------------
# filter


def change_point_filter(model: MarketModel, paths: PathBundle,
                        grid: SimGrid | None = None) -> ChangePointPosterior:
    """Discrete Bayes recursion for P(tau <= t | price observations).

    Works on two collapsed masses: s (switch already happened) and u (not
    yet).  Between observations mass flows u -> s according to the prior
    hazard over the step; each observed increment then reweights the two
    masses by its Gaussian likelihood under the pre and post change drift.
    With a discretely supported prior on the grid this recursion is
    algebraically identical to exhaustive Bayes over tau values.
    """
    grid = grid or paths.grid
    law = model.law
    times = grid.times
    dt = grid.dt
    n, n_steps = paths.n_paths, grid.n_steps
    c = model.coeffs

    # the coefficients on step k are post-change iff tau < t_k (strict
    # snapping), so the regime mass flows by left-CDF buckets and atoms
    # sitting exactly on a grid point stay pre-change for one more step.
    cdf = np.array([law.cdf(t) for t in times])
    cdf_left = np.array([law.cdf_left(t) for t in times])

    p = np.empty((n, n_steps + 1))
    g = np.empty((n, n_steps + 1))
    s = np.full(n, cdf_left[0])          # P(tau < 0) = 0
    u = 1.0 - s

    def record(k, s, u):
        g[:, k] = s
        # P(tau <= t_k | obs): the atom at t_k still sits inside u, whose
        # tau-distribution is the prior restricted to [t_k, inf)
        atom = cdf[k] - cdf_left[k]
        surv = 1.0 - cdf_left[k]
        p[:, k] = s + (u * atom / surv if surv > 0 else 0.0)

    record(0, s, u)
    sqdt = np.sqrt(dt)
    for k in range(n_steps):
        t0 = times[k]
        x = paths.s_tilde[:, k]
        sig1 = c.sigma1(t0, x)
        sig2 = c.sigma2(t0, x)
        if np.any(sig1 <= 0) or np.any(sig2 <= 0):
            raise DegenerateLikelihood(f"volatility underflow at t={t0}")
        mu1 = c.mu1(t0, x)
        mu2 = c.mu2(t0, x)

        dx = paths.s_tilde[:, k + 1] - x
        ll_pre = -0.5 * ((dx - mu1 * dt) / (sig1 * sqdt)) ** 2 - np.log(sig1)
        ll_post = -0.5 * ((dx - mu2 * dt) / (sig2 * sqdt)) ** 2 - np.log(sig2)
        m = np.maximum(ll_pre, ll_post)
        s = s * np.exp(ll_post - m)
        u = u * np.exp(ll_pre - m)
        tot = s + u
        if np.any(tot <= 0) or not np.all(np.isfinite(tot)):
            raise DegenerateLikelihood("posterior mass vanished")
        s /= tot
        u /= tot

        # flow the prior mass of [t_k, t_{k+1}) from u to s; within u the
        # tau-distribution is still the restricted prior, so the hazard is
        # a deterministic scalar.
        surv = 1.0 - cdf_left[k]
        bucket = cdf_left[k + 1] - cdf_left[k]
        h = bucket / surv if surv > 0 else (1.0 if bucket > 0 else 0.0)
        s = s + u * h
        u = u * (1.0 - h)
        record(k + 1, s, u)

    return ChangePointPosterior(p=p, g=g)


# ---------------------------------------------------------------------------
# market price of risk


def _full_info_lambda(model: MarketModel, paths: PathBundle):
    times = paths.grid.times
    c = model.coeffs
    n, n_steps = paths.n_paths, paths.grid.n_steps
    lam = np.empty((n, n_steps))
    sig = np.empty((n, n_steps))
    for k in range(n_steps):
        t = times[k]
        x = paths.s_tilde[:, k]
        post = paths.regime[:, k] == 1
        mu = np.where(post, c.mu2(t, x), c.mu1(t, x))
        sg = np.where(post, c.sigma2(t, x), c.sigma1(t, x))
        lam[:, k] = mu / sg
        sig[:, k] = sg
    return lam, sig


def market_price_of_risk(model: MarketModel, paths: PathBundle,
                         kind: FiltrationKind,
                         vol_case: VolCase | None = None,
                         posterior: ChangePointPosterior | None = None,
                         correlated_tau: bool = False) -> MarketPriceOfRisk:
    """Effective drift over effective volatility for the chosen filtration.

    With an independent change point the four full-information models share
    one process; the price-only model mixes the regimes by the filtered
    switch probability where the volatilities agree and reads the regime
    off the intervals where they differ.
    """
    if correlated_tau:
        raise UnsupportedEnlargement("correlated change points are not supported")
    if kind is not FiltrationKind.PRICE_ONLY:
        lam, sig = _full_info_lambda(model, paths)
        return MarketPriceOfRisk(kind=kind, lam=lam, sigma=sig)

    vol_case = vol_case or VolCase("identical")
    if vol_case.kind == "distinct":
        lam, sig = _full_info_lambda(model, paths)
        return MarketPriceOfRisk(kind=kind, lam=lam, sigma=sig)

    if posterior is None:
        posterior = change_point_filter(model, paths)
    times = paths.grid.times
    c = model.coeffs
    n, n_steps = paths.n_paths, paths.grid.n_steps
    lam = np.empty((n, n_steps))
    sig = np.empty((n, n_steps))
    if vol_case.kind == "semi_identical":
        revealed = ~_inside_region(vol_case.region, paths)
    for k in range(n_steps):
        t = times[k]
        x = paths.s_tilde[:, k]
        mu1 = c.mu1(t, x)
        mu2 = c.mu2(t, x)
        sg = c.sigma1(t, x)
        gk = posterior.g[:, k]
        mu = (1.0 - gk) * mu1 + gk * mu2
        lam_k = mu / sg
        sig_k = np.array(sg)
        if vol_case.kind == "semi_identical":
            post = paths.regime[:, k] == 1
            mu_true = np.where(post, mu2, mu1)
            sg_true = np.where(post, c.sigma2(t, x), sg)
            rk = revealed[:, k]
            lam_k = np.where(rk, mu_true / sg_true, lam_k)
            sig_k = np.where(rk, sg_true, sig_k)
        lam[:, k] = lam_k
        sig[:, k] = sig_k
    return MarketPriceOfRisk(kind=kind, lam=lam, sigma=sig)


def _inside_region(region, paths: PathBundle) -> np.ndarray:
    times = paths.grid.times
    n, m = paths.s.shape
    inside = np.empty((n, m), dtype=bool)
    for k in range(m):
        inside[:, k] = np.asarray(region(times[k], paths.s[:, k]), dtype=bool)
    return inside


# ---------------------------------------------------------------------------
# density


def density_path(lam: MarketPriceOfRisk, paths: PathBundle,
                 kind: FiltrationKind | None = None) -> DensityPath:
    """Stochastic exponential of the market price of risk.

    Innovation increments are recovered from the observed log-dynamics
    increment; the log of Z is accumulated exactly, so Z stays positive.
    """
    kind = kind or lam.kind
    dt = paths.grid.dt
    ds = np.diff(paths.s_tilde, axis=1)
    dw_hat = (ds - lam.lam * lam.sigma * dt) / lam.sigma
    log_z_steps = -lam.lam * dw_hat - 0.5 * lam.lam ** 2 * dt
    log_z = np.concatenate(
        [np.zeros((paths.n_paths, 1)), np.cumsum(log_z_steps, axis=1)], axis=1
    )
    if not np.all(np.isfinite(log_z)):
        raise NonFinite("density path overflowed")
    return DensityPath(kind=kind, z=np.exp(log_z), dw_hat=dw_hat)


# ---------------------------------------------------------------------------
# regime intervals and compensated jump


def detect_regime_intervals(model: MarketModel, paths: PathBundle,
                            region) -> RegimeIntervals:
    """Grid times where (t, S_t) crosses the agreement-region boundary.

    Each path's list starts after its time-0 membership flag and ends
    with the horizon, mirroring the convention that undetected switches
    default to the terminal time.
    """
    inside = _inside_region(region, paths)
    horizon = paths.grid.horizon
    times = paths.grid.times
    rho = []
    for i in range(paths.n_paths):
        flips = np.nonzero(np.diff(inside[i].astype(np.int8)))[0] + 1
        seq = [float(times[k]) for k in flips]
        seq.append(horizon)
        rho.append(seq)
    return RegimeIntervals(inside0=inside[:, 0], rho=rho)


def compensated_jump(model: MarketModel, paths: PathBundle) -> CompensatedJump:
    """N_t = 1{tau <= t} minus the prior's integrated hazard up to t and tau.

    Uses the exact (unsnapped) change time, so N has mean zero at every
    grid time under the simulation measure.
    """
    times = paths.grid.times
    tau = paths.tau
    n = paths.n_paths
    a = np.empty((n, len(times)))
    for i in range(n):
        for k, t in enumerate(times):
            a[i, k] = model.law.cum_hazard(min(t, tau[i]))
    jump = (times[None, :] >= tau[:, None]).astype(float)
    return CompensatedJump(a=a, n=jump - a)


def density_to_csv(paths: PathBundle, lam: MarketPriceOfRisk, dens: DensityPath,
                   posterior: ChangePointPosterior | None, out_path: str) -> None:
    """Write rows (path, step, t, Lambda, Z, p); Lambda blank on the final step."""
    times = paths.grid.times
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "step", "t", "Lambda", "Z", "p"])
        for i in range(paths.n_paths):
            for k in range(len(times)):
                lam_val = repr(lam.lam[i, k]) if k < lam.lam.shape[1] else ""
                p_val = repr(posterior.p[i, k]) if posterior is not None else ""
                writer.writerow([i, k, repr(times[k]), lam_val,
                                 repr(dens.z[i, k]), p_val])
