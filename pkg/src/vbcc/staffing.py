"""Smallest staffing level whose chance constraint holds with confidence beta.

The queueing quality-of-service event for c servers,

    { delay probability < alpha  and  c mu > lambda },

collapses to the single ratio event { lambda/mu <= r*(c, alpha) }: the delay
probability depends on (lambda, mu) only through r = lambda/mu, it crosses
alpha exactly at r*(c, alpha), and r*(c, alpha) < c so the stability clause is
implied.  The joint chance constraint is therefore evaluated exactly (no
Bonferroni bound), by either

* a closed form under a product-Gamma posterior: with lambda ~ Gamma(a_q, b_q)
  and mu ~ Gamma(a_s, b_s) independent, P(lambda/mu <= t) = I_u(a_q, a_s)
  where u = s/(1+s), s = t b_q / b_s  (the ratio of two Gammas is a scaled
  Beta-prime variable); or
* a sample-average approximation over posterior samples.

Both evaluators are nondecreasing in c, so the solver walks the integers from
a caller-provided hint and memoizes probes.  Inequalities at the constraint
boundary are non-strict throughout (measure-zero under continuous posteriors).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .erlang import max_load_for_target
from .mcmc import McmcChain
from .special_math import reg_incomplete_beta
from .vb_engine import ProductGammaPosterior

__all__ = [
    "StaffingSpec",
    "StaffingSolution",
    "StaffingInfeasibleError",
    "constraint_probability_gamma",
    "constraint_probability_samples",
    "solve_staffing",
]


class StaffingInfeasibleError(ValueError):
    """No server count within the cap meets the confidence level."""


@dataclass(frozen=True)
class StaffingSpec:
    """alpha: max acceptable delay probability; beta: required posterior
    confidence that the QoS holds; c_max: search cap."""

    alpha: float
    beta: float
    c_max: int = 200

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta!r}")
        if self.c_max < 1:
            raise ValueError(f"c_max must be >= 1, got {self.c_max}")


@dataclass(frozen=True)
class StaffingSolution:
    c_star: int
    attained_probability: float
    probe_trace: tuple[tuple[int, float], ...]  # in probe order


def constraint_probability_gamma(q: ProductGammaPosterior, c: int, alpha: float) -> float:
    """Closed-form P(QoS holds with c servers) under a product-Gamma posterior."""
    t = max_load_for_target(c, alpha)
    s = t * q.q_lambda.rate / q.q_mu.rate
    u = s / (1.0 + s)
    return reg_incomplete_beta(q.q_lambda.shape, q.q_mu.shape, u)


def constraint_probability_samples(chain: McmcChain, c: int, alpha: float) -> float:
    """Sample-average P(QoS holds with c servers) over posterior samples."""
    if len(chain.samples) == 0:
        raise ValueError("chain has no post-burn-in samples")
    t = max_load_for_target(c, alpha)
    return float(np.mean(chain.ratios <= t))


def solve_staffing(prob: Callable[[int], float], spec: StaffingSpec,
                   start: int | None = None) -> StaffingSolution:
    """Smallest c in [1, c_max] with prob(c) >= beta.

    ``prob`` must be nondecreasing in c (both evaluators above are); this is
    asserted over every probe.  ``start`` is a hint -- typically the ceiling
    of the posterior-mean offered load -- the scan walks down or up from it
    with memoized probes, which cannot change the answer, only the probe
    count.
    """
    probes: dict[int, float] = {}

    def p(c: int) -> float:
        if c not in probes:
            probes[c] = prob(c)
        return probes[c]

    c = 1 if start is None else min(max(1, int(start)), spec.c_max)
    if p(c) >= spec.beta:
        while c > 1 and p(c - 1) >= spec.beta:
            c -= 1
    else:
        while p(c) < spec.beta:
            c += 1
            if c > spec.c_max:
                raise StaffingInfeasibleError(
                    f"no c <= {spec.c_max} reaches confidence {spec.beta} "
                    f"(P at cap = {probes[spec.c_max]:.6f})")
    trace = tuple(probes.items())
    ordered = sorted(probes.items())
    for (c1, p1), (c2, p2) in zip(ordered, ordered[1:]):
        if p2 < p1 - 1e-12:
            raise RuntimeError(
                f"constraint probability not nondecreasing in c: "
                f"p({c1})={p1!r} > p({c2})={p2!r}")
    return StaffingSolution(c_star=c, attained_probability=probes[c], probe_trace=trace)
