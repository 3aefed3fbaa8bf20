"""Censored observations: ingestion, validation and ordering."""
from __future__ import annotations

import csv
import math
import numbers
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "CensoredSample",
    "OrderedSample",
    "ingest",
    "from_arrays",
    "order",
    "read_csv",
    "uncensored_proportion",
    "check_k",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """Validated observations ``z = min(x, c)`` with indicators ``delta = x <= c``."""

    z: np.ndarray
    delta: np.ndarray

    def __len__(self) -> int:
        return int(self.z.shape[0])

    @property
    def n(self) -> int:
        return len(self)


@dataclass(frozen=True, eq=False)
class OrderedSample:
    """Observations sorted ascending, each carrying its own indicator.

    ``z[i]`` is the ``(i+1)``-th smallest observation and ``delta[i]`` the
    indicator that came with it. Derived quantities (logs, Kaplan-Meier
    curves) are computed lazily and cached on the instance.
    """

    z: np.ndarray
    delta: np.ndarray

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def __len__(self) -> int:
        return self.n

    @cached_property
    def log_z(self) -> np.ndarray:
        return _frozen(np.log(self.z))

    def as_sample(self) -> CensoredSample:
        return CensoredSample(self.z, self.delta)

    def survival(self, target):
        """Kaplan-Meier survival values for ``target`` (cached)."""
        from .kaplan_meier import km_survival

        cache = self.__dict__.setdefault("_km_cache", {})
        curve = cache.get(target)
        if curve is None:
            curve = cache[target] = km_survival(self, target)
        return curve


def _as_indicator(value, index: int) -> bool:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, numbers.Real) and value in (0, 1):
        return bool(value)
    raise DataError(f"malformed censoring indicator {value!r} at index {index}")


def _check_z(value, index: int) -> float:
    try:
        z = float(value)
    except (TypeError, ValueError):
        raise DataError(f"malformed observation {value!r} at index {index}") from None
    if not math.isfinite(z):
        raise DataError(f"non-finite observation at index {index}")
    if z <= 0:
        raise DataError(f"non-positive observation at index {index}")
    return z


def ingest(records: Iterable[tuple[float, object]]) -> CensoredSample:
    """Validate ``(z, delta)`` pairs into a :class:`CensoredSample`.

    ``delta`` may be a bool or the numbers 0/1; ``z`` must be finite and
    strictly positive. The error message names the offending record index.
    """
    zs: list[float] = []
    ds: list[bool] = []
    for i, rec in enumerate(records):
        try:
            z, d = rec
        except (TypeError, ValueError):
            raise DataError(f"malformed record at index {i}") from None
        zs.append(_check_z(z, i))
        ds.append(_as_indicator(d, i))
    if not zs:
        raise DataError("empty sample")
    return CensoredSample(_frozen(np.array(zs, dtype=float)), _frozen(np.array(ds, dtype=bool)))


def from_arrays(z: Sequence[float], delta: Sequence) -> CensoredSample:
    """Vectorised :func:`ingest` for parallel arrays."""
    z = np.asarray(z, dtype=float)
    delta = np.asarray(delta)
    if z.ndim != 1 or delta.shape != z.shape:
        raise DataError("z and delta must be 1-d arrays of equal length")
    if z.size == 0:
        raise DataError("empty sample")
    bad = np.flatnonzero(~np.isfinite(z))
    if bad.size:
        raise DataError(f"non-finite observation at index {bad[0]}")
    bad = np.flatnonzero(z <= 0)
    if bad.size:
        raise DataError(f"non-positive observation at index {bad[0]}")
    if delta.dtype != bool:
        bad = np.flatnonzero((delta != 0) & (delta != 1))
        if bad.size:
            raise DataError(f"malformed censoring indicator {delta[bad[0]]!r} at index {bad[0]}")
        delta = delta.astype(bool)
    return CensoredSample(_frozen(z.copy()), _frozen(delta.copy()))


def order(sample: CensoredSample | OrderedSample) -> OrderedSample:
    """Sort ascending in ``z``; at tied ``z`` uncensored observations come first.

    The sort is stable, so equal ``(z, delta)`` pairs keep their input order.
    """
    # lexsort: last key is primary
    idx = np.lexsort((~sample.delta, sample.z))
    return OrderedSample(_frozen(sample.z[idx]), _frozen(sample.delta[idx]))


def read_csv(path: str | Path) -> CensoredSample:
    """Read a ``z,delta`` CSV file (header required, delta in {0, 1})."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["z", "delta"]:
            raise DataError(f"{path}: expected header 'z,delta'")
        records = []
        for i, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: malformed record at index {i}")
            d = row[1].strip()
            if d not in ("0", "1"):
                raise DataError(f"malformed censoring indicator {d!r} at index {i}")
            records.append((row[0].strip(), int(d)))
    return ingest(records)


def check_k(n: int, k: int) -> None:
    if not (isinstance(k, numbers.Integral) and 1 <= k <= n - 1):
        raise ValueError(f"k={k} out of range 1..{n - 1}")


def uncensored_proportion(ordered: OrderedSample, k: int) -> float:
    """Fraction of uncensored observations among the ``k`` largest."""
    check_k(ordered.n, k)
    return int(np.count_nonzero(ordered.delta[ordered.n - k:])) / k
