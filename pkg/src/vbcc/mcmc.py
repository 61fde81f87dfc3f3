"""Random-walk Metropolis-Hastings targeting the exact (unnormalized) posterior.

The chain walks in (ln lambda, ln mu) with an isotropic Gaussian proposal, so
positivity is structural; the log-space target includes the change-of-variable
Jacobian (+ln lambda + ln mu).  No thinning; the configured burn-in prefix is
dropped.  Everything is a pure function of the seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributions import Seed, generator, invgamma_logpdf
from .queue_model import SuffStats, log_likelihood
from .vb_engine import PriorSpec, mle_params

__all__ = [
    "McmcConfig",
    "McmcChain",
    "log_unnormalized_posterior",
    "run_chain",
    "write_chain_csv",
]

CSV_HEADER = ("lambda", "mu")


@dataclass(frozen=True)
class McmcConfig:
    """total_samples iterations, first burn_in dropped; proposal_std is the
    per-coordinate standard deviation in log-parameter space."""

    total_samples: int
    burn_in: int
    proposal_std: float = 0.05
    seed: Seed = 0

    def __post_init__(self) -> None:
        if self.total_samples < 1:
            raise ValueError(f"total_samples must be >= 1, got {self.total_samples}")
        if not 0 <= self.burn_in < self.total_samples:
            raise ValueError(
                f"burn_in must satisfy 0 <= burn_in < total_samples, got {self}")
        if not self.proposal_std > 0:
            raise ValueError(f"proposal_std must be positive, got {self.proposal_std!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class McmcChain:
    """Post-burn-in (lambda, mu) samples and the overall acceptance rate."""

    samples: np.ndarray  # shape (kept, 2), all entries positive
    acceptance_rate: float

    @property
    def ratios(self) -> np.ndarray:
        """lambda/mu per sample (the offered load under each draw)."""
        return self.samples[:, 0] / self.samples[:, 1]


def log_unnormalized_posterior(stats: SuffStats, prior: PriorSpec,
                               lam: float, mu: float) -> float:
    """log-likelihood plus log-priors; the evidence term is omitted."""
    return (log_likelihood(stats, lam, mu)
            + invgamma_logpdf(prior.prior_lambda, lam)
            + invgamma_logpdf(prior.prior_mu, mu))


def run_chain(stats: SuffStats, prior: PriorSpec, config: McmcConfig) -> McmcChain:
    """Run the sampler from a deterministic start (the MLE)."""
    n = stats.n
    st, ss = stats.sum_interarrival, stats.sum_service
    a_l, b_l = prior.prior_lambda.shape, prior.prior_lambda.scale
    a_m, b_m = prior.prior_mu.shape, prior.prior_mu.scale

    def log_target(u: float, v: float) -> float:
        # log posterior in (ln lambda, ln mu) incl. Jacobian, constants dropped.
        lam, mu = np.exp(u), np.exp(v)
        return (n * u - lam * st + n * v - mu * ss
                - (a_l + 1.0) * u - b_l / lam
                - (a_m + 1.0) * v - b_m / mu
                + u + v)

    start = mle_params(stats)
    u, v = float(np.log(start.lambda0)), float(np.log(start.mu0))
    current = log_target(u, v)

    gen = generator(config.seed)
    total = config.total_samples
    steps = gen.standard_normal((total, 2)) * config.proposal_std
    log_unif = np.log1p(-gen.random(total))

    states = np.empty((total, 2))
    accepted = 0
    for i in range(total):
        pu, pv = u + steps[i, 0], v + steps[i, 1]
        proposed = log_target(pu, pv)
        if proposed - current >= log_unif[i]:
            u, v, current = pu, pv, proposed
            accepted += 1
        states[i, 0] = u
        states[i, 1] = v
    return McmcChain(samples=np.exp(states[config.burn_in:]),
                     acceptance_rate=accepted / total)


def write_chain_csv(chain: McmcChain, path) -> None:
    """Dump post-burn-in samples as CSV with header ``lambda,mu``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for lam, mu in chain.samples:
            writer.writerow([repr(float(lam)), repr(float(mu))])
