"""Extreme value index estimators for randomly right-censored samples.

Every function takes an :class:`~censtail.sample.OrderedSample` and a
threshold index ``k`` (the threshold is the ``(n-k)``-th order statistic, so
``1 <= k <= n-1``). Functions raise :class:`EstimatorUndefined` where the
estimator has no value; :func:`estimator_path` turns those into markers.

All estimators depend on the data only through ratios of order statistics,
so they are invariant under rescaling ``z -> c*z``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateKaplanMeier, EstimatorUndefined
from .kaplan_meier import SurvivalTarget
from .sample import OrderedSample, check_k, uncensored_proportion

__all__ = [
    "Family",
    "Target",
    "KMWeights",
    "EstimatorSpec",
    "EstimatorPath",
    "DEFAULT_RHO_GRID",
    "hill_z",
    "hill_z_spacings",
    "censored_hill",
    "worms",
    "worms_km",
    "bayes_mdi",
    "bayes_mean",
    "bayes_mode",
    "ep_stat_H",
    "ep_stat_Ec",
    "ep_bias_reduced",
    "ep_shrinkage",
    "e_hat_km",
    "worms_bias_reduced",
    "worms_bias_reduced_beta",
    "worms_shrinkage",
    "evaluate",
    "estimator_path",
]

DEFAULT_RHO_GRID = (-0.5, -1.0, -1.5, -2.0, -3.0)
DEFAULT_OMEGA = 1.0

_fsum = math.fsum


class Target(enum.Enum):
    """Which extreme value index is estimated: of ``X`` or of ``C``."""

    GAMMA1 = "gamma1"
    GAMMA2 = "gamma2"

    @property
    def curve(self) -> SurvivalTarget:
        return SurvivalTarget.EVENT if self is Target.GAMMA1 else SurvivalTarget.CENSOR


class KMWeights(enum.Enum):
    """Which Kaplan-Meier value weights the log-spacing above rank ``n-j``.

    ``AT_RANK`` uses ``S(Z_{n-j+1,n})`` (the top spacing always gets weight
    zero because the curve is forced to 0 at the maximum). ``LEFT_LIMIT``
    uses ``S(Z_{n-j,n})``, the value of the right-continuous curve on the
    spacing itself; without censoring it turns both weighted estimators
    into the Hill estimator.
    """

    AT_RANK = "at-rank"
    LEFT_LIMIT = "left-limit"


# --------------------------------------------------------------------------
# tail helpers


def _tail(ordered: OrderedSample, k: int):
    """Indices ``n-k .. n-1`` of the top ``k`` observations (0-based)."""
    check_k(ordered.n, k)
    n = ordered.n
    return n - k, n


def _km_weights(ordered: OrderedSample, k: int, target: Target,
                weights: KMWeights = KMWeights.AT_RANK) -> np.ndarray:
    """``S(Z_{n-j+1,n}) / S(Z_{n-k,n})`` for the top ``k`` ranks, ascending.

    With ``LEFT_LIMIT`` the numerator is ``S(Z_{n-j,n})``.
    """
    lo, n = _tail(ordered, k)
    s = ordered.survival(target.curve).values
    den = s[lo - 1]
    if den <= 0.0:
        raise DegenerateKaplanMeier("degenerate Kaplan-Meier denominator")
    if KMWeights(weights) is KMWeights.LEFT_LIMIT:
        return s[lo - 1:n - 1] / den
    return s[lo:n] / den


def _excess_ratios(ordered: OrderedSample, k: int) -> np.ndarray:
    lo, n = _tail(ordered, k)
    return ordered.z[lo:n] / ordered.z[lo - 1]


# --------------------------------------------------------------------------
# first-order estimators


def hill_z(ordered: OrderedSample, k: int) -> float:
    """Hill estimator on the observed ``z``: mean of the top-``k`` log-excesses."""
    lo, n = _tail(ordered, k)
    logz = ordered.log_z
    return _fsum(logz[lo:n] - logz[lo - 1]) / k


def hill_z_spacings(ordered: OrderedSample, k: int) -> float:
    """Hill estimator written as weighted log-spacings ``(1/k) sum j * spacing_j``."""
    lo, n = _tail(ordered, k)
    logz = ordered.log_z
    j = np.arange(k, 0, -1, dtype=float)
    return _fsum(j * (logz[lo:n] - logz[lo - 1:n - 1])) / k


def _p_hat(ordered: OrderedSample, k: int) -> float:
    return uncensored_proportion(ordered, k)


def censored_hill(ordered: OrderedSample, k: int) -> float:
    """Hill estimate of ``Z`` divided by the top-``k`` uncensored proportion."""
    p = _p_hat(ordered, k)
    if p == 0.0:
        raise EstimatorUndefined("all top-k censored")
    return hill_z(ordered, k) / p


def worms(ordered: OrderedSample, k: int, target: Target = Target.GAMMA1,
          weights: KMWeights = KMWeights.AT_RANK) -> float:
    """Kaplan-Meier weighted log-spacings estimator.

    With ``target=GAMMA2`` the censoring curve is used instead, which
    estimates the tail index of the censoring variable.
    """
    target = Target(target)
    w = _km_weights(ordered, k, target, weights)
    lo, n = _tail(ordered, k)
    logz = ordered.log_z
    return _fsum(w * (logz[lo:n] - logz[lo - 1:n - 1]))


def worms_km(ordered: OrderedSample, k: int,
             weights: KMWeights = KMWeights.AT_RANK) -> float:
    """Kaplan-Meier weighted, uncensored-only log-excess estimator."""
    w = _km_weights(ordered, k, Target.GAMMA1, weights)
    lo, n = _tail(ordered, k)
    logz = ordered.log_z
    j = np.arange(k, 0, -1, dtype=float)
    return _fsum(w * ordered.delta[lo:n] / j * (logz[lo:n] - logz[lo - 1]))


# --------------------------------------------------------------------------
# Bayesian estimators


def bayes_mdi(ordered: OrderedSample, k: int) -> float:
    """Posterior mode under the maximal data information prior."""
    g = hill_z(ordered, k)
    kp = k * _p_hat(ordered, k)
    return 2.0 * k * g / (1.0 + kp + math.sqrt((1.0 + kp) ** 2 + 4.0 * k * g))


def bayes_mean(ordered: OrderedSample, k: int, a: float = 0.0, b: float = 0.0) -> float:
    """Posterior mean under a conjugate gamma(a, b) prior; a=b=0 is Jeffreys."""
    den = k * _p_hat(ordered, k) + a
    if den <= 0.0:
        raise EstimatorUndefined("nonpositive posterior denominator")
    return (k * hill_z(ordered, k) + b) / den


def bayes_mode(ordered: OrderedSample, k: int, a: float = 0.0, b: float = 0.0) -> float:
    """Posterior mode under a conjugate gamma(a, b) prior."""
    den = k * _p_hat(ordered, k) + a - 1.0
    if den <= 0.0:
        raise EstimatorUndefined("nonpositive posterior denominator")
    return (k * hill_z(ordered, k) + b) / den


# --------------------------------------------------------------------------
# extended-Pareto bias reduction of the censored Hill estimator


def ep_stat_H(ordered: OrderedSample, k: int, beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    r = _excess_ratios(ordered, k)
    return (1.0 - _fsum(r ** -beta) / k) / beta


def ep_stat_Ec(ordered: OrderedSample, k: int, beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    lo, n = _tail(ordered, k)
    r = _excess_ratios(ordered, k)
    return _fsum(r[ordered.delta[lo:n]] ** -beta) / k


def _check_rho(rho: float) -> None:
    if not rho < 0:
        raise ValueError(f"rho must be negative, got {rho}")


def _check_omega(omega: float) -> None:
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")


def _ep_parts(ordered: OrderedSample, k: int, rho_star: float):
    _check_rho(rho_star)
    g1 = censored_hill(ordered, k)
    gz = hill_z(ordered, k)
    if gz <= 0.0:
        raise EstimatorUndefined("Hill estimate is zero; second-order rescaling impossible")
    beta = -rho_star / gz
    bracket = ep_stat_H(ordered, k, beta) - g1 * ep_stat_Ec(ordered, k, beta)
    return g1, bracket


def _br_factor(gamma: float, rho: float) -> float:
    return gamma * (1.0 - rho) ** 2 * (1.0 - 2.0 * rho) / rho ** 3


def _shrink_factor(gamma: float, rho: float, omega: float, k: int, n: int) -> float:
    sigma2 = (k / n) ** (-2.0 * rho)
    return rho / (omega * gamma / (k * sigma2)
                  + rho ** 4 / (gamma * (1.0 - rho) ** 2 * (1.0 - 2.0 * rho)))


def ep_bias_reduced(ordered: OrderedSample, k: int, rho_star: float) -> float:
    """Censored Hill estimator corrected with the extended Pareto bias term.

    The second-order rate is supplied as ``rho_star < 0`` and converted to
    ``beta = -rho_star / hill_z``.
    """
    g1, bracket = _ep_parts(ordered, k, rho_star)
    return g1 - _br_factor(g1, rho_star) * bracket


def ep_shrinkage(ordered: OrderedSample, k: int, rho_star: float,
                 omega: float = DEFAULT_OMEGA) -> float:
    """:func:`ep_bias_reduced` with the correction penalised towards zero at small ``k``."""
    _check_omega(omega)
    g1, bracket = _ep_parts(ordered, k, rho_star)
    if bracket == 0.0:
        return g1
    return g1 - _shrink_factor(g1, rho_star, omega, k, ordered.n) * bracket


# --------------------------------------------------------------------------
# bias reduction of the Kaplan-Meier weighted estimator


def e_hat_km(ordered: OrderedSample, k: int, beta: float,
             target: Target = Target.GAMMA1,
             weights: KMWeights = KMWeights.AT_RANK) -> float:
    """Kaplan-Meier estimate of ``E[(X/t)^-beta | X > t]`` at ``t = Z_{n-k,n}``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    target = Target(target)
    w = _km_weights(ordered, k, target, weights)
    lo, n = _tail(ordered, k)
    r = ordered.z[lo - 1:n] / ordered.z[lo - 1]
    p = r ** -beta
    return 1.0 + _fsum(w * (p[1:] - p[:-1]))


def _worms_positive(ordered, k, target, weights) -> float:
    g = worms(ordered, k, target, weights)
    if g <= 0.0:
        raise EstimatorUndefined("nonpositive Kaplan-Meier weighted estimate")
    return g


def _brw_bracket(ordered, k, rho, target, weights):
    _check_rho(rho)
    target = Target(target)
    g = _worms_positive(ordered, k, target, weights)
    e = e_hat_km(ordered, k, -rho / g, target, weights)
    return g, e - 1.0 / (1.0 - rho)


def worms_bias_reduced(ordered: OrderedSample, k: int, rho1: float,
                       target: Target = Target.GAMMA1,
                       weights: KMWeights = KMWeights.AT_RANK) -> float:
    """Bias-reduced Kaplan-Meier weighted estimator for second-order rate ``rho1``."""
    g, bracket = _brw_bracket(ordered, k, rho1, target, weights)
    return g - _br_factor(g, rho1) * bracket


def worms_bias_reduced_beta(ordered: OrderedSample, k: int, beta: float,
                            target: Target = Target.GAMMA1,
                            weights: KMWeights = KMWeights.AT_RANK) -> float:
    """Same estimator parametrised by ``beta > 0`` instead of ``rho1``.

    Agrees with :func:`worms_bias_reduced` when ``beta = -rho1 / worms(k)``.
    """
    target = Target(target)
    g = _worms_positive(ordered, k, target, weights)
    bg = beta * g
    e = e_hat_km(ordered, k, beta, target, weights)
    return g + g * (1.0 + bg) ** 2 * (1.0 + 2.0 * bg) / bg ** 3 * (e - 1.0 / (1.0 + bg))


def worms_shrinkage(ordered: OrderedSample, k: int, rho1: float,
                    omega: float = DEFAULT_OMEGA,
                    target: Target = Target.GAMMA1,
                    weights: KMWeights = KMWeights.AT_RANK) -> float:
    """Penalised bias-reduced estimator.

    The bias correction of :func:`worms_bias_reduced` is multiplied by a
    factor in (0, 1) which tends to 0 as ``k`` decreases, so the estimate
    follows the plain Kaplan-Meier weighted estimator for small ``k``.
    ``omega`` scales the penalty.
    """
    _check_omega(omega)
    g, bracket = _brw_bracket(ordered, k, rho1, target, weights)
    if bracket == 0.0:
        return g
    return g - _shrink_factor(g, rho1, omega, k, ordered.n) * bracket


# --------------------------------------------------------------------------
# specs and paths


class Family(enum.Enum):
    HILL_Z = "hill-z"
    CENSORED_HILL = "censored-hill"
    WORMS = "worms"
    WORMS_KM = "worms-km"
    BAYES_MDI = "bayes-mdi"
    BAYES_MEAN = "bayes-mean"
    BAYES_MODE = "bayes-mode"
    EP = "ep"
    EP_SHRINK = "ep-shrink"
    BR_WORMS = "br-worms"
    BR_WORMS_SHRINK = "br-worms-shrink"


_NEEDS_RHO = {Family.EP, Family.EP_SHRINK, Family.BR_WORMS, Family.BR_WORMS_SHRINK}
_NEEDS_OMEGA = {Family.EP_SHRINK, Family.BR_WORMS_SHRINK}
_BAYES_AB = {Family.BAYES_MEAN, Family.BAYES_MODE}
_GAMMA2_OK = {Family.WORMS, Family.BR_WORMS, Family.BR_WORMS_SHRINK}
_KM_WEIGHTED = _GAMMA2_OK | {Family.WORMS_KM}


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator variant together with its tuning parameters.

    ``omega`` defaults to 1 for the penalised families; ``a`` and ``b``
    default to the Jeffreys choice 0.
    """

    family: Family
    rho: float | None = None
    omega: float | None = None
    a: float = 0.0
    b: float = 0.0
    target: Target = Target.GAMMA1
    km_weights: KMWeights = KMWeights.AT_RANK

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "target", Target(self.target))
        object.__setattr__(self, "km_weights", KMWeights(self.km_weights))
        if self.km_weights is not KMWeights.AT_RANK and self.family not in _KM_WEIGHTED:
            raise ValueError(f"{self.family.value} has no Kaplan-Meier weights")
        fam = self.family
        if fam in _NEEDS_RHO:
            if self.rho is None:
                raise ValueError(f"{fam.value} requires rho")
            _check_rho(self.rho)
        elif self.rho is not None:
            raise ValueError(f"{fam.value} takes no rho")
        if fam in _NEEDS_OMEGA:
            if self.omega is None:
                object.__setattr__(self, "omega", DEFAULT_OMEGA)
            _check_omega(self.omega)
        elif self.omega is not None:
            raise ValueError(f"{fam.value} takes no omega")
        if fam not in _BAYES_AB and (self.a != 0.0 or self.b != 0.0):
            raise ValueError(f"{fam.value} takes no prior parameters")
        if self.a < 0 or self.b < 0:
            raise ValueError("prior parameters a, b must be nonnegative")
        if self.target is Target.GAMMA2 and fam not in _GAMMA2_OK:
            raise ValueError(f"{fam.value} cannot estimate gamma2")

    @property
    def label(self) -> str:
        params = []
        if self.rho is not None:
            params.append(f"rho={self.rho:g}")
        if self.omega is not None:
            params.append(f"omega={self.omega:g}")
        if self.family in _BAYES_AB:
            params.append(f"a={self.a:g}")
            params.append(f"b={self.b:g}")
        if self.target is Target.GAMMA2:
            params.append("target=gamma2")
        if self.km_weights is not KMWeights.AT_RANK:
            params.append(f"weights={self.km_weights.value}")
        return self.family.value + (":" + ",".join(params) if params else "")

    @classmethod
    def parse(cls, text: str) -> "EstimatorSpec":
        """Inverse of :attr:`label`, e.g. ``"br-worms-shrink:rho=-2,omega=1"``."""
        name, _, rest = text.strip().partition(":")
        kwargs: dict = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq:
                raise ValueError(f"malformed estimator parameter {item!r}")
            if key == "target":
                kwargs[key] = Target(value.strip().lower())
            elif key == "weights":
                kwargs["km_weights"] = KMWeights(value.strip().lower())
            elif key in ("rho", "omega", "a", "b"):
                kwargs[key] = float(value)
            else:
                raise ValueError(f"unknown estimator parameter {key!r}")
        return cls(Family(name.strip().lower()), **kwargs)


def evaluate(ordered: OrderedSample, spec: EstimatorSpec, k: int) -> float:
    """Evaluate ``spec`` at threshold ``k``; raises if undefined."""
    f = spec.family
    if f is Family.HILL_Z:
        return hill_z(ordered, k)
    if f is Family.CENSORED_HILL:
        return censored_hill(ordered, k)
    if f is Family.WORMS:
        return worms(ordered, k, spec.target, spec.km_weights)
    if f is Family.WORMS_KM:
        return worms_km(ordered, k, spec.km_weights)
    if f is Family.BAYES_MDI:
        return bayes_mdi(ordered, k)
    if f is Family.BAYES_MEAN:
        return bayes_mean(ordered, k, spec.a, spec.b)
    if f is Family.BAYES_MODE:
        return bayes_mode(ordered, k, spec.a, spec.b)
    if f is Family.EP:
        return ep_bias_reduced(ordered, k, spec.rho)
    if f is Family.EP_SHRINK:
        return ep_shrinkage(ordered, k, spec.rho, spec.omega)
    if f is Family.BR_WORMS:
        return worms_bias_reduced(ordered, k, spec.rho, spec.target, spec.km_weights)
    if f is Family.BR_WORMS_SHRINK:
        return worms_shrinkage(ordered, k, spec.rho, spec.omega, spec.target, spec.km_weights)
    raise AssertionError(f)


def evaluate_or_nan(ordered: OrderedSample, spec: EstimatorSpec, k: int) -> float:
    try:
        value = float(evaluate(ordered, spec, k))
    except (EstimatorUndefined, ZeroDivisionError, OverflowError):
        return math.nan
    return value if math.isfinite(value) else math.nan


@dataclass(frozen=True, eq=False)
class EstimatorPath:
    """Estimates of one spec over a range of ``k``; NaN marks undefined."""

    spec: EstimatorSpec
    k_values: np.ndarray
    estimates: np.ndarray
    defined: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "defined", np.isfinite(self.estimates))

    def __len__(self) -> int:
        return int(self.k_values.shape[0])

    def to_tsv(self) -> str:
        lines = ["k\testimate\tdefined"]
        for k, est, ok in zip(self.k_values, self.estimates, self.defined):
            lines.append(f"{int(k)}\t{float(est)!r}\t1" if ok else f"{int(k)}\tNA\t0")
        return "\n".join(lines) + "\n"


def estimator_path(ordered: OrderedSample, spec: EstimatorSpec,
                   k_min: int = 1, k_max: int | None = None) -> EstimatorPath:
    """Evaluate ``spec`` at every ``k`` in ``k_min..k_max`` (inclusive)."""
    if k_max is None:
        k_max = ordered.n - 1
    if not (1 <= k_min <= k_max <= ordered.n - 1):
        raise ValueError(f"invalid k range {k_min}..{k_max} for n={ordered.n}")
    ks = np.arange(k_min, k_max + 1)
    est = np.array([evaluate_or_nan(ordered, spec, int(k)) for k in ks])
    return EstimatorPath(spec, ks, est)
