"""Burr, Frechet and Pareto distributions with closed-form quantiles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Burr", "Frechet", "Pareto", "DistributionSpec", "quantile", "sample", "parse_distribution"]


def _check_q(q):
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise ValueError("quantile level must lie in (0, 1)")
    return q


def _positive(**params):
    for name, value in params.items():
        if not (value > 0 and np.isfinite(value)):
            raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class Burr:
    """Burr(eta, tau, lambda): ``1 - F(x) = (eta / (eta + x**tau))**lambda``."""

    eta: float
    tau: float
    lam: float

    def __post_init__(self):
        _positive(eta=self.eta, tau=self.tau, lam=self.lam)

    @property
    def true_evi(self) -> float:
        return 1.0 / (self.tau * self.lam)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return (self.eta / (self.eta + x ** self.tau)) ** self.lam

    def quantile(self, q):
        q = _check_q(q)
        return (self.eta * np.expm1(-np.log1p(-q) / self.lam)) ** (1.0 / self.tau)

    def __str__(self):
        return f"burr({self.eta:g},{self.tau:g},{self.lam:g})"


@dataclass(frozen=True)
class Frechet:
    """Frechet(alpha): ``F(x) = exp(-x**-alpha)``."""

    alpha: float

    def __post_init__(self):
        _positive(alpha=self.alpha)

    @property
    def true_evi(self) -> float:
        return 1.0 / self.alpha

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return -np.expm1(-x ** -self.alpha)

    def quantile(self, q):
        q = _check_q(q)
        return (-np.log(q)) ** (-1.0 / self.alpha)

    def __str__(self):
        return f"frechet({self.alpha:g})"


@dataclass(frozen=True)
class Pareto:
    """Standard Pareto: ``1 - F(x) = x**(-1/gamma)`` for ``x > 1``."""

    gamma: float

    def __post_init__(self):
        _positive(gamma=self.gamma)

    @property
    def true_evi(self) -> float:
        return self.gamma

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 1.0, np.maximum(x, 1.0) ** (-1.0 / self.gamma), 1.0)

    def quantile(self, q):
        q = _check_q(q)
        return (1.0 - q) ** (-self.gamma)

    def __str__(self):
        return f"pareto({self.gamma:g})"


DistributionSpec = Burr | Frechet | Pareto


def quantile(spec: DistributionSpec, q):
    """Value with non-exceedance probability ``q``."""
    return spec.quantile(q)


def sample(spec: DistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` inverse-transform draws from ``spec``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    u = rng.random(n)
    # Generator.random() lies in [0, 1); map a 0 draw to the open interval
    u = np.where(u > 0.0, u, np.finfo(float).tiny)
    return spec.quantile(u)


def parse_distribution(text: str) -> DistributionSpec:
    """Parse ``"burr(10,2,2)"``, ``"frechet(2)"`` or ``"pareto(0.5)"``."""
    name, _, rest = text.strip().lower().partition("(")
    if not rest.endswith(")"):
        raise ValueError(f"malformed distribution {text!r}")
    try:
        args = [float(a) for a in rest[:-1].split(",")]
    except ValueError:
        raise ValueError(f"malformed distribution {text!r}") from None
    ctor = {"burr": Burr, "frechet": Frechet, "pareto": Pareto}.get(name.strip())
    if ctor is None:
        raise ValueError(f"unknown distribution family {name!r}")
    try:
        return ctor(*args)
    except TypeError:
        raise ValueError(f"wrong number of parameters in {text!r}") from None
