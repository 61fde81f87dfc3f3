"""Chance-constraint evaluators and the integer staffing solver."""

import math

import numpy as np
import pytest

from vbcc.distributions import GammaLaw, sample_gamma
from vbcc.erlang import max_load_for_target
from vbcc.mcmc import McmcChain, McmcConfig, run_chain
from vbcc.queue_model import SuffStats, TrueParams, simulate_dataset
from vbcc.staffing import (
    StaffingInfeasibleError,
    StaffingSolution,
    StaffingSpec,
    constraint_probability_gamma,
    constraint_probability_samples,
    solve_staffing,
)
from vbcc.vb_engine import ProductGammaPosterior, default_prior, fit_vb


def make_q(a1, b1, a2, b2) -> ProductGammaPosterior:
    return ProductGammaPosterior(GammaLaw(a1, b1), GammaLaw(a2, b2))


def test_spec_validation():
    with pytest.raises(ValueError):
        StaffingSpec(alpha=0.0, beta=0.9)
    with pytest.raises(ValueError):
        StaffingSpec(alpha=0.5, beta=1.0)
    with pytest.raises(ValueError):
        StaffingSpec(alpha=0.5, beta=0.9, c_max=0)


def test_symmetric_posterior_gives_half():
    # With r = 1 offered load on c = 2 servers, the delay probability is
    # B2/(1 - rho(1-B2)) = 0.2/0.6 = 1/3, so r*(2, 1/3) = 1.  For identical
    # Gamma factors, P(lambda/mu <= 1) = I_{1/2}(a, a) = 1/2 exactly.
    assert max_load_for_target(2, 1.0 / 3.0) == pytest.approx(1.0, abs=1e-9)
    q = make_q(3.0, 2.0, 3.0, 2.0)
    assert constraint_probability_gamma(q, 2, 1.0 / 3.0) == pytest.approx(0.5, abs=1e-9)


def test_closed_form_matches_monte_carlo():
    q = make_q(1900.0, 120.0, 2050.0, 2000.0)
    n_draws = 200_000
    lam = sample_gamma(q.q_lambda, 51, n_draws)
    mu = sample_gamma(q.q_mu, 52, n_draws)
    for c in (17, 19, 21):
        t = max_load_for_target(c, 0.5)
        frac = float(np.mean(lam / mu <= t))
        closed = constraint_probability_gamma(q, c, 0.5)
        se = math.sqrt(max(frac * (1.0 - frac), 1.0 / n_draws) / n_draws)
        assert closed == pytest.approx(frac, abs=3.0 * se + 3.0 / n_draws)


def test_probability_nondecreasing_in_c_and_saturates():
    q = make_q(1900.0, 120.0, 2050.0, 2000.0)
    values = [constraint_probability_gamma(q, c, 0.5) for c in range(10, 41)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    assert values[-1] >= 1.0 - 1e-6


def test_sample_evaluator_fraction_and_empty():
    t19 = max_load_for_target(19, 0.5)
    samples = np.array([[t19 * 0.9, 1.0], [t19 * 1.1, 1.0], [t19 * 0.5, 1.0],
                        [t19 * 2.0, 1.0]])
    chain = McmcChain(samples=samples, acceptance_rate=0.5)
    assert constraint_probability_samples(chain, 19, 0.5) == pytest.approx(0.5)
    empty = McmcChain(samples=np.empty((0, 2)), acceptance_rate=0.0)
    with pytest.raises(ValueError):
        constraint_probability_samples(empty, 19, 0.5)


def test_concentrated_posterior_recovers_deterministic_optimum():
    # Near-Dirac posterior at (16, 1): the solver must return the smallest c
    # with r*(c, 0.5) >= 16, which is 19 (r*(18) < 16 < r*(19), frozen from
    # the high-precision literal-formula roots).
    q = make_q(1.6e7, 1e6, 1e6, 1e6)
    spec = StaffingSpec(alpha=0.5, beta=0.9, c_max=200)
    sol = solve_staffing(lambda c: constraint_probability_gamma(q, c, spec.alpha), spec)
    assert sol.c_star == 19
    assert sol.attained_probability >= spec.beta


def test_start_hint_does_not_change_answer():
    q = make_q(1900.0, 120.0, 2050.0, 2000.0)
    spec = StaffingSpec(alpha=0.5, beta=0.9, c_max=200)
    prob = lambda c: constraint_probability_gamma(q, c, spec.alpha)
    answers = {solve_staffing(prob, spec, start=s).c_star
               for s in (None, 1, 3, 19, 40, 200)}
    assert len(answers) == 1


def test_probe_trace_and_memoization():
    q = make_q(1900.0, 120.0, 2050.0, 2000.0)
    spec = StaffingSpec(alpha=0.5, beta=0.9, c_max=200)
    calls = []

    def prob(c):
        calls.append(c)
        return constraint_probability_gamma(q, c, spec.alpha)

    sol = solve_staffing(prob, spec, start=25)
    assert isinstance(sol, StaffingSolution)
    assert len(calls) == len(set(calls)), "memoization must prevent repeat probes"
    assert set(c for c, _ in sol.probe_trace) == set(calls)
    probed = dict(sol.probe_trace)
    assert probed[sol.c_star] == sol.attained_probability >= spec.beta
    below = sol.c_star - 1
    if below in probed:
        assert probed[below] < spec.beta


def test_higher_confidence_needs_no_fewer_servers():
    q = make_q(1900.0, 120.0, 2050.0, 2000.0)
    answers = []
    for beta in (0.7, 0.8, 0.9, 0.95):
        spec = StaffingSpec(alpha=0.5, beta=beta, c_max=200)
        sol = solve_staffing(lambda c: constraint_probability_gamma(q, c, spec.alpha),
                             spec, start=19)
        answers.append(sol.c_star)
    assert all(b >= a for a, b in zip(answers, answers[1:]))


def test_infeasible_cap_raises():
    q = make_q(1.6e7, 1e6, 1e6, 1e6)  # posterior mean load ~ 16
    spec = StaffingSpec(alpha=0.5, beta=0.9, c_max=10)
    with pytest.raises(StaffingInfeasibleError):
        solve_staffing(lambda c: constraint_probability_gamma(q, c, spec.alpha), spec)


def test_non_monotone_probe_detected():
    spec = StaffingSpec(alpha=0.5, beta=0.9, c_max=200)
    rigged = {1: 0.2, 2: 0.6, 3: 0.5, 4: 0.95}
    with pytest.raises(RuntimeError):
        solve_staffing(lambda c: rigged.get(c, 1.0), spec)


def test_closed_form_and_saa_solutions_agree():
    stats = SuffStats.from_dataset(simulate_dataset(TrueParams(16.0, 1.0), 2000, 123))
    prior = default_prior()
    q, _ = fit_vb(stats, prior)
    chain = run_chain(stats, prior,
                      McmcConfig(total_samples=2000, burn_in=125, proposal_std=0.05, seed=9))
    spec = StaffingSpec(alpha=0.5, beta=0.9, c_max=200)
    hint = math.ceil(q.q_lambda.mean / q.q_mu.mean)
    vb = solve_staffing(lambda c: constraint_probability_gamma(q, c, spec.alpha),
                        spec, start=hint)
    saa = solve_staffing(lambda c: constraint_probability_samples(chain, c, spec.alpha),
                         spec, start=hint)
    assert abs(vb.c_star - saa.c_star) <= 1
