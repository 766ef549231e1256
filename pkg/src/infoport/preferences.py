"""Utility and loss functions, their marginal inverses, and risk functionals.

The central object is the penalized objective u(x) - lam * loss(-x), whose
inverse marginal is what the dual solver evaluates on density samples.  The
two built-in pairings (log utility with a reciprocal loss, shifted negative
reciprocal utility with the same loss) admit closed-form inverses; anything
else goes through a bracketed root search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .exceptions import BracketFailure, ConfigError, OutOfRange, Unattainable

__all__ = [
    "UtilitySpec",
    "LossSpec",
    "CombinedLagrangian",
    "log_utility",
    "shifted_neg_reciprocal",
    "neg_reciprocal_loss",
    "exponential_loss",
    "marginal_inverse_I",
    "loss_marginal_inverse_H",
    "lagrangian_inverse",
    "shortfall_risk",
    "entropic_risk",
]


@dataclass(frozen=True)
class UtilitySpec:
    """A strictly increasing, strictly concave utility on (0, inf).

    `kind` is one of "log", "shifted_neg_reciprocal", "custom".  Custom
    specs must provide u, u_prime and may provide u_prime_inv; without it
    the marginal inverse falls back to the generic root search.
    """

    kind: str
    u: Callable[[np.ndarray], np.ndarray]
    u_prime: Callable[[np.ndarray], np.ndarray]
    u_prime_inv: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class LossSpec:
    """A strictly increasing, strictly convex loss on (-inf, 0).

    `marginal_at_zero` is the left limit of l' at 0, possibly +inf; the
    marginal inverse H is defined on (0, marginal_at_zero) and takes
    values in (-inf, 0).
    """

    kind: str
    l: Callable[[np.ndarray], np.ndarray]
    l_prime: Callable[[np.ndarray], np.ndarray]
    l_prime_inv: Callable[[np.ndarray], np.ndarray] | None = None
    marginal_at_zero: float = math.inf
    c: float = 0.0
    gamma: float = 0.0


def log_utility() -> UtilitySpec:
    return UtilitySpec(kind="log", u=np.log, u_prime=lambda x: 1.0 / x,
                       u_prime_inv=lambda y: 1.0 / y)


def shifted_neg_reciprocal() -> UtilitySpec:
    """u(x) = 1 - 1/x; marginal 1/x**2, inverse marginal y**-1/2."""
    return UtilitySpec(
        kind="shifted_neg_reciprocal",
        u=lambda x: 1.0 - 1.0 / np.asarray(x, dtype=float),
        u_prime=lambda x: np.asarray(x, dtype=float) ** -2.0,
        u_prime_inv=lambda y: np.asarray(y, dtype=float) ** -0.5,
    )


def neg_reciprocal_loss(c: float = 3.0) -> LossSpec:
    """l(x) = -c/x on (-inf, 0); marginal c/x**2 with left limit +inf at 0."""
    if c <= 0:
        raise ConfigError("loss scale c must be positive")
    return LossSpec(
        kind="neg_reciprocal",
        l=lambda x: -c / np.asarray(x, dtype=float),
        l_prime=lambda x: c / np.asarray(x, dtype=float) ** 2,
        l_prime_inv=lambda e: -np.sqrt(c / np.asarray(e, dtype=float)),
        marginal_at_zero=math.inf,
        c=c,
    )


def exponential_loss(gamma: float) -> LossSpec:
    """l(x) = exp(gamma x); pairs with the entropic risk functional."""
    if gamma <= 0:
        raise ConfigError("gamma must be positive")
    return LossSpec(
        kind="exponential",
        l=lambda x: np.exp(gamma * np.asarray(x, dtype=float)),
        l_prime=lambda x: gamma * np.exp(gamma * np.asarray(x, dtype=float)),
        l_prime_inv=lambda e: np.log(np.asarray(e, dtype=float) / gamma) / gamma,
        marginal_at_zero=gamma,
        gamma=gamma,
    )


@dataclass(frozen=True)
class CombinedLagrangian:
    """The penalized utility x -> u(x) - lam * loss(-x) for lam >= 0."""

    utility: UtilitySpec
    loss: LossSpec
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("multiplier must be nonnegative")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = self.utility.u(x)
        if self.lam > 0:
            out = out - self.lam * self.loss.l(-x)
        return out

    def marginal(self, x):
        """Derivative u'(x) + lam * l'(-x); strictly decreasing in x."""
        x = np.asarray(x, dtype=float)
        out = self.utility.u_prime(x)
        if self.lam > 0:
            out = out + self.lam * self.loss.l_prime(-x)
        return out


def marginal_inverse_I(utility: UtilitySpec, y):
    """Solve u'(x) = y for x > 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise OutOfRange("marginal utility argument must be positive")
    if utility.u_prime_inv is not None:
        return utility.u_prime_inv(y)
    cl = CombinedLagrangian(utility, neg_reciprocal_loss(), 0.0)
    return lagrangian_inverse(cl, y)


def loss_marginal_inverse_H(loss: LossSpec, e):
    """Solve l'(x) = e for x < 0, with e in (0, l'(0-))."""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0) or np.any(e >= loss.marginal_at_zero):
        raise OutOfRange(
            f"argument must lie in (0, {loss.marginal_at_zero})"
        )
    if loss.l_prime_inv is not None:
        return loss.l_prime_inv(e)

    def solve_one(ei: float) -> float:
        # l' is increasing on (-inf, 0): walk the bracket left until
        # l'(lo) < ei, right toward 0 until l'(hi) > ei.
        lo, hi = -1.0, -1e-12
        for _ in range(200):
            if loss.l_prime(lo) < ei:
                break
            lo *= 2.0
        else:
            raise BracketFailure("no lower bracket for loss marginal inverse")
        return brentq(lambda x: loss.l_prime(x) - ei, lo, hi, xtol=1e-15, rtol=1e-14)

    if e.ndim == 0:
        return solve_one(float(e))
    return np.array([solve_one(ei) for ei in e.ravel()]).reshape(e.shape)


def _lagrangian_inverse_generic(cl: CombinedLagrangian, y: np.ndarray) -> np.ndarray:
    def solve_one(yi: float) -> float:
        lo, hi = 1e-8, 1.0
        for _ in range(200):
            if cl.marginal(lo) > yi:
                break
            lo *= 0.5
        else:
            raise BracketFailure(f"no lower bracket at y={yi}")
        for _ in range(200):
            if cl.marginal(hi) < yi:
                break
            hi *= 2.0
        else:
            raise BracketFailure(f"no upper bracket at y={yi}")
        return brentq(lambda x: cl.marginal(x) - yi, lo, hi, xtol=1e-300, rtol=8.9e-16)

    out = np.array([solve_one(yi) for yi in np.atleast_1d(y).ravel()])
    return out.reshape(np.shape(y)) if np.ndim(y) else float(out[0])


def lagrangian_inverse(cl: CombinedLagrangian, y):
    """The unique x > 0 with u'(x) + lam * l'(-x) = y.

    Closed forms for the two built-in utility/loss pairings, generic
    bracketed root search otherwise.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise OutOfRange("y must be positive")
    lam, loss, util = cl.lam, cl.loss, cl.utility
    if lam == 0.0 and util.u_prime_inv is not None:
        return util.u_prime_inv(y)
    if loss.kind == "neg_reciprocal":
        c = loss.c
        if util.kind == "log":
            # 1/x + lam*c/x^2 = y  =>  x = (1 + sqrt(1 + 4*lam*c*y)) / (2y)
            return (1.0 + np.sqrt(1.0 + 4.0 * lam * c * y)) / (2.0 * y)
        if util.kind == "shifted_neg_reciprocal":
            # (1 + lam*c)/x^2 = y
            return np.sqrt((1.0 + lam * c) / y)
    return _lagrangian_inverse_generic(cl, y)


def shortfall_risk(samples, loss: LossSpec, eps: float) -> float:
    """Smallest cash add-on m with mean loss(-x - m) <= eps.

    The mean is strictly decreasing in m, so this is a monotone root
    problem; equality holds at the solution when the curve crosses eps.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ConfigError("empty sample set")

    inf_loss = float(loss.l(np.array([-1e12]))[0])
    if eps <= inf_loss:
        raise Unattainable(f"benchmark {eps} at or below the loss infimum")
    if loss.kind == "exponential":
        singular = False
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            singular = not math.isfinite(float(loss.l(np.array([0.0]))[0]))

    def g(m: float) -> float:
        arg = -x - m
        if singular and np.any(arg >= 0):
            return math.inf
        return float(np.mean(loss.l(arg))) - eps

    # g is strictly decreasing; bracket a sign change and hand to brentq.
    if singular:
        edge = -float(np.min(x))  # g -> +inf as m -> edge from above
        lo = edge + 1e-12 * max(1.0, abs(edge))
        while not (math.isfinite(g(lo)) and g(lo) > 0):
            gap = lo - edge
            if g(lo) <= 0:
                lo = edge + gap / 4.0
            else:
                lo = edge + gap * 4.0
            if gap < 1e-300 or gap > 1e300:
                raise Unattainable("could not bracket the shortfall root")
        hi, step = lo, 1e-9 * max(1.0, abs(lo))
    else:
        lo = 0.0
        for _ in range(400):
            if g(lo) > 0:
                break
            lo = lo * 2.0 - 1.0
        else:
            raise Unattainable("no lower bracket for the shortfall root")
        hi, step = lo, 1.0
    for _ in range(400):
        if g(hi) < 0:
            break
        hi += step
        step *= 2.0
    else:
        raise Unattainable(f"benchmark {eps} not attained by any cash add-on")
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16))


def entropic_risk(samples, gamma: float, eps: float) -> float:
    """(1/gamma) * (log mean exp(-gamma X) - log eps)."""
    if gamma <= 0 or eps <= 0:
        raise ConfigError("gamma and eps must be positive")
    x = np.asarray(samples, dtype=float)
    log_mean = logsumexp(-gamma * x) - math.log(x.size)
    return float((log_mean - math.log(eps)) / gamma)
