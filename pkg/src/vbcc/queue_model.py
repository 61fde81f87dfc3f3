"""M/M/c observation model: datasets, sufficient statistics, exact log-likelihood.

A dataset holds the per-customer interarrival and service *durations* (not
timestamps): the likelihood of the arrival/departure record factorizes into
independent exponential terms that depend only on these durations, so queue
dynamics (waiting-room state) never need to be simulated for inference.

With arrival rate lambda and per-server service rate mu, the log-likelihood of
n customers is

    n ln(lambda) - lambda * sum(interarrivals) + n ln(mu) - mu * sum(services).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributions import Seed, generator

__all__ = [
    "Dataset",
    "SuffStats",
    "TrueParams",
    "simulate_dataset",
    "log_likelihood",
    "write_dataset_csv",
    "read_dataset_csv",
]

CSV_HEADER = ("interarrival", "service")


@dataclass(frozen=True)
class TrueParams:
    """Data-generating rates: arrivals per unit time, services per unit time per server."""

    lambda0: float
    mu0: float

    def __post_init__(self) -> None:
        if not self.lambda0 > 0 or not self.mu0 > 0:
            raise ValueError(f"TrueParams requires positive rates, got {self}")


@dataclass
class Dataset:
    """Per-customer interarrival and service durations (equal length, all > 0)."""

    interarrivals: np.ndarray
    services: np.ndarray

    def __post_init__(self) -> None:
        self.interarrivals = np.asarray(self.interarrivals, dtype=float)
        self.services = np.asarray(self.services, dtype=float)
        if self.interarrivals.ndim != 1 or self.services.ndim != 1:
            raise ValueError("durations must be 1-D arrays")
        if len(self.interarrivals) != len(self.services):
            raise ValueError(
                f"column lengths differ: {len(self.interarrivals)} interarrivals "
                f"vs {len(self.services)} services")
        if len(self.interarrivals) < 1:
            raise ValueError("dataset must contain at least one customer")
        for name, col in (("interarrival", self.interarrivals), ("service", self.services)):
            if not np.all(np.isfinite(col)) or not np.all(col > 0.0):
                raise ValueError(f"all {name} durations must be positive and finite")

    def __len__(self) -> int:
        return len(self.interarrivals)


@dataclass(frozen=True)
class SuffStats:
    """Sufficient statistics (n, sum of interarrivals, sum of services)."""

    n: int
    sum_interarrival: float
    sum_service: float

    def __post_init__(self) -> None:
        if self.n < 1 or not self.sum_interarrival > 0 or not self.sum_service > 0:
            raise ValueError(f"invalid sufficient statistics: {self}")

    @classmethod
    def from_dataset(cls, data: Dataset) -> "SuffStats":
        return cls(n=len(data),
                   sum_interarrival=float(np.sum(data.interarrivals)),
                   sum_service=float(np.sum(data.services)))


def simulate_dataset(params: TrueParams, n: int, seed: Seed) -> Dataset:
    """n i.i.d. Exp(lambda0) interarrivals and n i.i.d. Exp(mu0) services.

    Both columns come from one Philox stream (consecutive draws are
    independent), interarrivals first.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gen = generator(seed)
    interarrivals = gen.standard_exponential(n) / params.lambda0
    services = gen.standard_exponential(n) / params.mu0
    return Dataset(interarrivals=interarrivals, services=services)


def log_likelihood(stats: SuffStats, lam: float, mu: float) -> float:
    """Exact log-likelihood at rates (lam, mu); strictly concave in each rate."""
    if not lam > 0 or not mu > 0:
        raise ValueError(f"rates must be positive, got lambda={lam!r}, mu={mu!r}")
    return (stats.n * np.log(lam) - lam * stats.sum_interarrival
            + stats.n * np.log(mu) - mu * stats.sum_service)


def write_dataset_csv(data: Dataset, path) -> None:
    """Persist as UTF-8 CSV with header ``interarrival,service``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, s in zip(data.interarrivals, data.services):
            writer.writerow([repr(float(t)), repr(float(s))])


def read_dataset_csv(path) -> Dataset:
    """Read a dataset written by :func:`write_dataset_csv`; rejects bad rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")
        inter, serv = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                t, s = float(row[0]), float(row[1])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: non-numeric entry {row!r}") from exc
            if not t > 0 or not s > 0:
                raise ValueError(f"line {lineno}: durations must be positive, got {row!r}")
            inter.append(t)
            serv.append(s)
    return Dataset(interarrivals=np.array(inter), services=np.array(serv))
