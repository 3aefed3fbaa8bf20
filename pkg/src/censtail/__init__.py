"""Tail index estimation for randomly right-censored heavy-tailed data."""

__version__ = "0.1.0"

from .errors import (
    BootstrapFailure,
    CensTailError,
    DataError,
    DegenerateKaplanMeier,
    EstimatorUndefined,
    NoAdmissibleK,
)
from .sample import CensoredSample, OrderedSample, from_arrays, ingest, order, read_csv, uncensored_proportion
from .kaplan_meier import SurvivalCurve, SurvivalTarget, km_survival, survival_ratio
from .estimators import (
    EstimatorPath,
    EstimatorSpec,
    Family,
    KMWeights,
    Target,
    bayes_mdi,
    bayes_mean,
    bayes_mode,
    censored_hill,
    e_hat_km,
    ep_bias_reduced,
    ep_shrinkage,
    ep_stat_Ec,
    ep_stat_H,
    estimator_path,
    evaluate,
    hill_z,
    hill_z_spacings,
    worms,
    worms_bias_reduced,
    worms_bias_reduced_beta,
    worms_km,
    worms_shrinkage,
)
from .distributions import Burr, Frechet, Pareto, quantile, sample
from .simulation import SCENARIOS, ScenarioSpec, generate_censored, mc_bias_rmse
from .bootstrap import BootstrapConfig, CiResult, KMode, adaptive_k, bootstrap_ci, coverage_experiment
