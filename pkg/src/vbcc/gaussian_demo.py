"""Linear Gaussian chance constraint in the plane: exact, Monte-Carlo, and
mean-field feasible regions.

For xi ~ N(m, Sigma) on R^2 and confidence beta > 1/2, the feasible region

    { x : P(xi . x <= threshold) >= beta }
      = { x : m . x + z_beta * sqrt(x Sigma x) <= threshold },  z_beta = Phi^{-1}(beta),

is a convex second-order-cone set.  Replacing the probability with an
empirical fraction over N samples yields a region that is generally
NON-convex for small N -- pure sampling noise, demonstrated here with plain
i.i.d. Gaussian samples (an optional random-walk Metropolis sampler is
provided for chains over the same law; the phenomenon is identical).

The mean-field approximation of N(m, Sigma) keeps the mean and replaces the
covariance by diag(1/Lambda_11, 1/Lambda_22) with Lambda = Sigma^{-1} (the
KL(q||p)-optimal factorized Gaussian); for Sigma = [[1, s], [s, 1]] the
variances become 1 - s^2, i.e. mean-field *shrinks* each coordinate's
variance toward the conditional variance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributions import BivariateNormal, Seed, generator, sample_bivariate_normal
from .special_math import std_normal_quantile

__all__ = [
    "LinearCC",
    "GridSpec",
    "exact_membership",
    "mc_membership",
    "mean_field_approx",
    "metropolis_gaussian_samples",
    "emit_region_grid",
    "write_region_csv",
]


@dataclass(frozen=True)
class LinearCC:
    """Chance constraint P(xi . x <= threshold) >= beta with xi ~ law."""

    law: BivariateNormal
    beta: float
    threshold: float = 1.0

    def __post_init__(self) -> None:
        if not 0.5 < self.beta < 1.0:
            raise ValueError(
                f"beta must lie in (1/2, 1) for the convex regime, got {self.beta!r}")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid, inclusive bounds, points per axis."""

    x1_bounds: tuple[float, float] = (-10.0, 10.0)
    x2_bounds: tuple[float, float] = (-10.0, 10.0)
    resolution: tuple[int, int] = (201, 201)

    def __post_init__(self) -> None:
        if self.x1_bounds[0] >= self.x1_bounds[1] or self.x2_bounds[0] >= self.x2_bounds[1]:
            raise ValueError(f"bounds must be increasing, got {self}")
        if min(self.resolution) < 2:
            raise ValueError(f"resolution must be >= 2 per axis, got {self.resolution}")

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(self.x1_bounds[0], self.x1_bounds[1], self.resolution[0])

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(self.x2_bounds[0], self.x2_bounds[1], self.resolution[1])


def exact_membership(cc: LinearCC, x) -> bool:
    """Closed-form membership test."""
    x = np.asarray(x, dtype=float)
    quad = float(x @ cc.law.covariance @ x)
    lhs = float(cc.law.mean @ x) + std_normal_quantile(cc.beta) * np.sqrt(max(quad, 0.0))
    return lhs <= cc.threshold


def mc_membership(samples: np.ndarray, cc: LinearCC, x) -> bool:
    """Empirical membership: fraction of samples satisfying the constraint."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2 or len(samples) == 0:
        raise ValueError(f"samples must be a nonempty (N, 2) array, got shape {samples.shape}")
    x = np.asarray(x, dtype=float)
    return float(np.mean(samples @ x <= cc.threshold)) >= cc.beta


def mean_field_approx(law: BivariateNormal) -> BivariateNormal:
    """KL(q||p)-optimal factorized Gaussian: same mean, variances 1/Lambda_ii."""
    precision = np.linalg.inv(law.covariance)
    return BivariateNormal(mean=law.mean.copy(),
                           covariance=np.diag(1.0 / np.diag(precision)))


def metropolis_gaussian_samples(law: BivariateNormal, count: int, burn_in: int,
                                seed: Seed, proposal_std: float = 1.0) -> np.ndarray:
    """Random-walk Metropolis chain over ``law`` (kept samples only).

    Mirrors drawing the constraint samples from a chain rather than i.i.d.;
    starts at the mean.
    """
    if count < 1 or burn_in < 0 or not proposal_std > 0:
        raise ValueError(f"invalid chain settings: count={count}, burn_in={burn_in}, "
                         f"proposal_std={proposal_std}")
    gen = generator(seed)
    precision = np.linalg.inv(law.covariance)
    total = burn_in + count

    def log_density(z: np.ndarray) -> float:
        d = z - law.mean
        return -0.5 * float(d @ precision @ d)

    steps = gen.standard_normal((total, 2)) * proposal_std
    log_unif = np.log1p(-gen.random(total))
    state = law.mean.copy()
    current = log_density(state)
    out = np.empty((total, 2))
    for i in range(total):
        candidate = state + steps[i]
        proposed = log_density(candidate)
        if proposed - current >= log_unif[i]:
            state, current = candidate, proposed
        out[i] = state
    return out[burn_in:]


def emit_region_grid(cc: LinearCC, method: str, grid: GridSpec | None = None,
                     seed: Seed = 0, mc_samples: int = 8000,
                     sampler: str = "direct", burn_in: int = 3000,
                     proposal_std: float = 1.0) -> np.ndarray:
    """Membership flags over the grid, row-major: flags[i, j] is the point
    (x1[i], x2[j]).

    method "exact": closed form; "vb": closed form under the mean-field law;
    "mc": empirical fractions over mc_samples draws (i.i.d. by default,
    ``sampler="metropolis"`` for a chain).
    """
    grid = grid or GridSpec()
    if method == "exact":
        return _exact_grid(cc, grid)
    if method == "vb":
        vb_cc = LinearCC(law=mean_field_approx(cc.law), beta=cc.beta,
                         threshold=cc.threshold)
        return _exact_grid(vb_cc, grid)
    if method == "mc":
        if sampler == "direct":
            samples = sample_bivariate_normal(cc.law, seed, mc_samples)
        elif sampler == "metropolis":
            samples = metropolis_gaussian_samples(cc.law, mc_samples, burn_in, seed,
                                                  proposal_std)
        else:
            raise ValueError(f"unknown sampler {sampler!r} (direct or metropolis)")
        return _mc_grid(samples, cc, grid)
    raise ValueError(f"unknown method {method!r} (exact, mc, or vb)")


def _exact_grid(cc: LinearCC, grid: GridSpec) -> np.ndarray:
    x1 = grid.x1[:, None]
    x2 = grid.x2[None, :]
    s = cc.law.covariance
    quad = s[0, 0] * x1**2 + 2.0 * s[0, 1] * x1 * x2 + s[1, 1] * x2**2
    lhs = (cc.law.mean[0] * x1 + cc.law.mean[1] * x2
           + std_normal_quantile(cc.beta) * np.sqrt(np.maximum(quad, 0.0)))
    return lhs <= cc.threshold


def _mc_grid(samples: np.ndarray, cc: LinearCC, grid: GridSpec,
             chunk: int = 4096) -> np.ndarray:
    n1, n2 = grid.resolution
    points = np.stack(np.meshgrid(grid.x1, grid.x2, indexing="ij"), axis=-1).reshape(-1, 2)
    flags = np.empty(len(points), dtype=bool)
    for lo in range(0, len(points), chunk):
        block = points[lo:lo + chunk]
        frac = np.mean(samples @ block.T <= cc.threshold, axis=0)
        flags[lo:lo + chunk] = frac >= cc.beta
    return flags.reshape(n1, n2)


def write_region_csv(flags: np.ndarray, grid: GridSpec, path) -> None:
    """CSV rows x1,x2,feasible (feasible as 0/1), x1 outer loop."""
    x1, x2 = grid.x1, grid.x2
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("x1", "x2", "feasible"))
        for i in range(len(x1)):
            for j in range(len(x2)):
                writer.writerow([repr(float(x1[i])), repr(float(x2[j])),
                                 int(flags[i, j])])
