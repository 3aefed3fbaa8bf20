"""Censored sample generation and the Monte Carlo bias/RMSE harness."""
from __future__ import annotations

import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .distributions import Burr, DistributionSpec, Frechet, parse_distribution, sample
from .estimators import EstimatorSpec, evaluate_or_nan
from .rng import STREAM_C, STREAM_X, resolve_workers, substream
from .sample import CensoredSample, OrderedSample, from_arrays, order

__all__ = [
    "ScenarioSpec",
    "SCENARIOS",
    "DEFAULT_N",
    "DEFAULT_REPLICATIONS",
    "censor",
    "generate_censored",
    "BiasRmseRow",
    "BiasRmseTable",
    "mc_bias_rmse",
    "parse_k_grid",
    "load_scenario_file",
]

DEFAULT_N = 500
DEFAULT_REPLICATIONS = 200


@dataclass(frozen=True)
class ScenarioSpec:
    """``X ~ x_dist`` censored by independent ``C ~ c_dist``."""

    x_dist: DistributionSpec
    c_dist: DistributionSpec
    n: int = DEFAULT_N
    replications: int = DEFAULT_REPLICATIONS
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")

    @property
    def gamma1(self) -> float:
        return self.x_dist.true_evi

    @property
    def gamma2(self) -> float:
        return self.c_dist.true_evi

    @property
    def gamma(self) -> float:
        """Tail index of the observed minimum."""
        return self.gamma1 * self.gamma2 / (self.gamma1 + self.gamma2)

    @property
    def p(self) -> float:
        """Limiting proportion of uncensored observations in the tail."""
        return self.gamma2 / (self.gamma1 + self.gamma2)

    def with_(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)


SCENARIOS: dict[str, ScenarioSpec] = {
    "burr-heavy": ScenarioSpec(Burr(10, 2, 2), Burr(10, 5, 2)),
    "burr-even": ScenarioSpec(Burr(10, 2, 1), Burr(10, 2, 1)),
    "burr-light": ScenarioSpec(Burr(10, 5, 2), Burr(10, 2, 2)),
    "frechet": ScenarioSpec(Frechet(2), Frechet(1)),
}


def censor(x: np.ndarray, c: np.ndarray) -> CensoredSample:
    """Observed pairs ``(min(x, c), x <= c)``."""
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    return from_arrays(np.minimum(x, c), x <= c)


def draw_censored(x_dist: DistributionSpec, c_dist: DistributionSpec, n: int,
                  x_rng: np.random.Generator, c_rng: np.random.Generator) -> CensoredSample:
    return censor(sample(x_dist, n, x_rng), sample(c_dist, n, c_rng))


def generate_censored(scenario: ScenarioSpec, replication: int = 0) -> CensoredSample:
    """Censored sample number ``replication`` of ``scenario``.

    X and C come from separate substreams of ``scenario.seed``.
    """
    return draw_censored(
        scenario.x_dist, scenario.c_dist, scenario.n,
        substream(scenario.seed, replication, STREAM_X),
        substream(scenario.seed, replication, STREAM_C),
    )


@dataclass(frozen=True)
class BiasRmseRow:
    estimator: str
    k: int
    bias: float
    rmse: float
    defined_count: int


@dataclass(frozen=True, eq=False)
class BiasRmseTable:
    """Bias and RMSE per (estimator, k).

    ``estimates`` has shape ``(replications, n_specs, n_k)`` with NaN for
    undefined values.
    """

    labels: tuple[str, ...]
    k_grid: tuple[int, ...]
    true_value: float
    estimates: np.ndarray
    rows: tuple[BiasRmseRow, ...]

    def cell(self, label: str, k: int) -> BiasRmseRow:
        i = self.labels.index(label)
        j = self.k_grid.index(k)
        return self.rows[i * len(self.k_grid) + j]

    def column(self, label: str, field: str) -> np.ndarray:
        i = self.labels.index(label)
        m = len(self.k_grid)
        return np.array([getattr(r, field) for r in self.rows[i * m:(i + 1) * m]])

    def to_tsv(self) -> str:
        out = ["estimator\tk\tbias\trmse\tdefined_count"]
        for r in self.rows:
            if r.defined_count:
                out.append(f"{r.estimator}\t{r.k}\t{r.bias!r}\t{r.rmse!r}\t{r.defined_count}")
            else:
                out.append(f"{r.estimator}\t{r.k}\tNA\tNA\t0")
        return "\n".join(out) + "\n"


Evaluator = Callable[[OrderedSample, EstimatorSpec, int], float]


def _aggregate(values: np.ndarray, truth: float) -> tuple[float, float, int]:
    ok = values[np.isfinite(values)]
    if ok.size == 0:
        return math.nan, math.nan, 0
    err = ok - truth
    bias = math.fsum(err) / ok.size
    rmse = math.sqrt(math.fsum(err * err) / ok.size)
    return bias, rmse, int(ok.size)


def mc_bias_rmse(scenario: ScenarioSpec, specs: Sequence[EstimatorSpec],
                 k_grid: Sequence[int], *, workers: int | None = None,
                 evaluator: Evaluator | None = None) -> BiasRmseTable:
    """Monte Carlo bias and RMSE of each estimator at each ``k``.

    Replication ``r`` uses the substreams ``(seed, r, X)`` and
    ``(seed, r, C)``, so the table is identical for any ``workers``.
    Undefined estimates are left out of a cell and show up in its
    ``defined_count``. The truth is the tail index of ``X``, or of ``C``
    for specs targeting gamma2 when every spec does.
    """
    if scenario.replications < 2:
        raise ValueError("need at least 2 replications")
    specs = list(specs)
    k_grid = tuple(int(k) for k in k_grid)
    if any(not (1 <= k <= scenario.n - 1) for k in k_grid):
        raise ValueError(f"k grid must lie within 1..{scenario.n - 1}")
    evaluate = evaluator or evaluate_or_nan

    def run(r: int) -> np.ndarray:
        ordered = order(generate_censored(scenario, r))
        out = np.empty((len(specs), len(k_grid)))
        for i, spec in enumerate(specs):
            for j, k in enumerate(k_grid):
                try:
                    v = float(evaluate(ordered, spec, k))
                except ArithmeticError:
                    v = math.nan
                out[i, j] = v
        return out

    reps = range(scenario.replications)
    nworkers = resolve_workers(workers)
    if nworkers == 1:
        results = [run(r) for r in reps]
    else:
        with ThreadPoolExecutor(nworkers) as pool:
            results = list(pool.map(run, reps))
    est = np.stack(results)

    labels = tuple(_label(s) for s in specs)
    rows = []
    for i, spec in enumerate(specs):
        truth = _truth(scenario, spec)
        for j, k in enumerate(k_grid):
            bias, rmse, count = _aggregate(est[:, i, j], truth)
            rows.append(BiasRmseRow(labels[i], k, bias, rmse, count))
    return BiasRmseTable(labels, k_grid, scenario.gamma1, est, tuple(rows))


def _label(spec) -> str:
    return getattr(spec, "label", None) or str(spec)


def _truth(scenario: ScenarioSpec, spec) -> float:
    target = getattr(spec, "target", None)
    if target is not None and target.value == "gamma2":
        return scenario.gamma2
    return scenario.gamma1


def parse_k_grid(text: str) -> tuple[int, ...]:
    """``"10:250:10"`` (inclusive start:stop:step), ``"5:50"`` or ``"25,50,100"``."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        if len(parts) != 3 or parts[2] < 1:
            raise ValueError(f"malformed k grid {text!r}")
        start, stop, step = parts
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def load_scenario_file(path: str | Path) -> tuple[ScenarioSpec, list[EstimatorSpec], tuple[int, ...]]:
    """Read a ``[scenario]`` key/value file.

    Keys: ``x``/``c`` (distribution, e.g. ``burr(10,2,2)``) or ``preset``,
    ``n``, ``replications``, ``seed``, ``estimators`` (one per line or
    ``;``-separated) and ``k_grid``.
    """
    cp = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    if not cp.has_section("scenario"):
        raise ValueError(f"{path}: missing [scenario] section")
    sec = cp["scenario"]
    if "preset" in sec:
        base = SCENARIOS[sec["preset"].strip()]
    else:
        base = ScenarioSpec(parse_distribution(sec["x"]), parse_distribution(sec["c"]))
    scenario = base.with_(
        n=sec.getint("n", base.n),
        replications=sec.getint("replications", base.replications),
        seed=sec.getint("seed", base.seed),
    )
    raw = sec.get("estimators", "")
    specs = [EstimatorSpec.parse(t) for t in raw.replace(";", "\n").splitlines() if t.strip()]
    k_grid = parse_k_grid(sec["k_grid"]) if "k_grid" in sec else ()
    return scenario, specs, k_grid
