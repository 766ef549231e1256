import numpy as np
import pytest

from infoport import (
    ChangePointLaw,
    Coefficient,
    CoefficientSpec,
    MarketModel,
    SimGrid,
    simulate_paths,
)


def const_coeffs(mu1=0.08, mu2=0.02, sigma1=0.2, sigma2=0.2) -> CoefficientSpec:
    return CoefficientSpec(
        mu1=Coefficient.constant(mu1),
        mu2=Coefficient.constant(mu2),
        sigma1=Coefficient.constant(sigma1),
        sigma2=Coefficient.constant(sigma2),
    )


def make_model(mu1=0.08, mu2=0.02, sigma1=0.2, sigma2=0.2,
               law=None, horizon=1.0, s0=1.0) -> MarketModel:
    return MarketModel(
        coeffs=const_coeffs(mu1, mu2, sigma1, sigma2),
        law=law or ChangePointLaw.exponential(1.0),
        horizon=horizon,
        s0=s0,
    )


@pytest.fixture(scope="session")
def small_bundle():
    model = make_model()
    grid = SimGrid(n_steps=32, horizon=1.0)
    return model, grid, simulate_paths(model, grid, 2000, seed=7)


def lognormal_z(lam: float, t: float, n: int, seed: int) -> np.ndarray:
    """Terminal density samples for a constant market price of risk."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(n)
    return np.exp(-lam * np.sqrt(t) * g - 0.5 * lam * lam * t)
