"""Monetary value of information between two nested information models.

The indifference value c solves u(F, x) = u(G, x - c): the better informed
agent gives up c of the initial capital and is exactly as well off as the
coarser-informed one.  For the shifted reciprocal utility with reciprocal
loss the value function depends on the density only through E[sqrt(Z_T)],
giving a closed form; any other preference pair is handled by bisecting on
c with a full constrained solve at each trial capital.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dual_solver import Scenario, solve_dual
from .exceptions import Infeasible, NoRoot, OrderViolation
from .wealth import value_of_solution

__all__ = ["IndifferenceResult", "uiv_closed_form", "uiv_root_solve"]


@dataclass(frozen=True)
class IndifferenceResult:
    c: float
    stderr: float
    pair: tuple
    method: str
    stratum: int | None = None
    per_stratum: tuple = ()


def _sqrt_moment(z: np.ndarray):
    s = np.sqrt(z)
    return float(np.mean(s)), s


def uiv_closed_form(z_f, z_g, x: float, pair=(None, None),
                    strata_g=None) -> IndifferenceResult:
    """c = (1 - (mean sqrt(z_g) / mean sqrt(z_f))**2) * x.

    Valid for the shifted-reciprocal / reciprocal-loss preference pair,
    where the value function is 1 - (E sqrt(Z_T))^2 / x regardless of the
    risk benchmark.  The standard error comes from the delta method with
    the sample covariance of the two square-root moments (the samples
    share paths, so the covariance term matters).

    When the finer model knows the change point from time 0, the value is
    computed per change-point stratum and averaged with stratum weights.
    """
    z_f = np.asarray(z_f, dtype=float)
    z_g = np.asarray(z_g, dtype=float)
    n = len(z_f)
    mf, sf = _sqrt_moment(z_f)

    def one_cell(idx):
        sg_c = np.sqrt(z_g[idx])
        mg = float(np.mean(sg_c))
        ratio = mg / mf
        c = (1.0 - ratio ** 2) * x
        # delta method on (mg, mf); within a stratum sg pairs with the
        # matching sf entries
        m = len(idx)
        var_g = np.var(sg_c, ddof=1) / m
        var_f = np.var(sf, ddof=1) / n
        if m == n:
            cov = np.cov(sg_c, sf[idx], ddof=1)[0, 1] / n
        else:
            cov = 0.0
        grad_g = -2.0 * x * mg / mf ** 2
        grad_f = 2.0 * x * mg ** 2 / mf ** 3
        var_c = (grad_g ** 2 * var_g + grad_f ** 2 * var_f
                 + 2.0 * grad_g * grad_f * cov)
        return c, math.sqrt(max(var_c, 0.0))

    if strata_g is None:
        c, se = one_cell(np.arange(n))
        if c < -3.0 * se:
            raise OrderViolation(
                f"negative value {c} at {se} stderr: coarse/fine order looks "
                "reversed"
            )
        return IndifferenceResult(c=c, stderr=se, pair=pair, method="closed-form")

    cells = [one_cell(idx) for idx in strata_g]
    weights = [len(idx) / n for idx in strata_g]
    c = sum(w * cc for w, (cc, _) in zip(weights, cells))
    se = math.sqrt(sum((w * s) ** 2 for w, (_, s) in zip(weights, cells)))
    if c < -3.0 * se:
        raise OrderViolation(f"negative value {c} at {se} stderr")
    return IndifferenceResult(c=c, stderr=se, pair=pair, method="closed-form",
                              per_stratum=tuple(cc for cc, _ in cells))


def _value_at_capital(scenario: Scenario, capital: float):
    sc = replace(scenario, x=capital)
    # share the simulated sample: every evaluation must see the same paths
    sc.paths = scenario.paths
    sc.density = scenario.density
    sc.z_samples = scenario.z_samples
    sc.tau_samples = scenario.tau_samples
    return value_of_solution(solve_dual(sc))


def uiv_root_solve(scen_f: Scenario, scen_g: Scenario, x: float | None = None,
                   rel_tol: float = 1e-6) -> IndifferenceResult:
    """Bisection on c in [0, x) of u(F, x) = u(G, x - c).

    Each evaluation runs a full constrained solve at the reduced capital
    on the fine model's own fixed path set.  Benchmarks that become
    infeasible at small capital push the bracket upward from below.
    """
    x = scen_f.x if x is None else x
    scen_f.ensure_samples()
    scen_g.ensure_samples()
    target = _value_at_capital(scen_f, x)

    def h(c: float):
        try:
            rep = _value_at_capital(scen_g, x - c)
        except Infeasible:
            return None
        return rep.value - target.value

    lo, hi = 0.0, x * (1.0 - 1e-9)
    f_lo = h(lo)
    if f_lo is None or f_lo < 0:
        raise NoRoot(lo, hi, f_lo, None)
    f_hi = h(hi)
    # walk the upper end down until the solve succeeds and is below target
    shrink = 0
    while f_hi is None and shrink < 60:
        hi = lo + (hi - lo) * 0.5
        f_hi = h(hi)
        shrink += 1
    if f_hi is None or f_hi > 0:
        raise NoRoot(lo, hi, f_lo, f_hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = h(mid)
        if f_mid is None or f_mid < 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel_tol * max(x, 1.0):
            break
    c = 0.5 * (lo + hi)
    rep_g = _value_at_capital(scen_g, x - c)
    # convert value-scale noise to capital scale through the local slope
    dc = max(1e-4 * x, (hi - lo))
    slope = abs((_value_at_capital(scen_g, x - c - dc).value - rep_g.value) / dc)
    se = math.hypot(target.stderr, rep_g.stderr) / max(slope, 1e-300)
    return IndifferenceResult(c=c, stderr=se, pair=(scen_f.kind, scen_g.kind),
                              method="root-solve")
