"""Erlang-C recursion vs the literal factorial formula, plus inverse checks."""

import pytest

from oracles import oracle_erlang_c_literal
from vbcc.erlang import erlang_c_delay, max_load_for_target

LOAD_FRACTIONS = (0.1, 0.5, 0.9, 0.99)


def test_recursion_matches_literal_formula():
    # Literal high-precision r^c/(c!(1-rho)) formula over c <= 50 x 4 loads.
    for c in range(1, 51):
        for frac in LOAD_FRACTIONS:
            r = frac * c
            got = erlang_c_delay(r, c)
            want = oracle_erlang_c_literal(r, c)
            assert got == pytest.approx(want, rel=1e-12), (c, frac)


def test_single_server_delay_is_utilization():
    # M/M/1: C(r, 1) = rho = r exactly.
    for r in (0.1, 0.25, 0.5, 0.9, 0.999):
        assert erlang_c_delay(r, 1) == pytest.approx(r, rel=1e-14)


def test_delay_monotone_in_load_and_servers():
    for c in (4, 16, 40):
        values = [erlang_c_delay(f * c, c) for f in (0.2, 0.4, 0.6, 0.8, 0.95)]
        assert all(b > a for a, b in zip(values, values[1:]))
    r = 12.0
    by_servers = [erlang_c_delay(r, c) for c in (13, 15, 18, 25)]
    assert all(b < a for a, b in zip(by_servers, by_servers[1:]))


def test_large_c_stable():
    # The literal formula overflows near c ~ 170; the recursion must not.
    value = erlang_c_delay(450.0, 500)
    assert 0.0 < value < 1.0
    assert value == pytest.approx(float(oracle_erlang_c_literal(450.0, 500)), rel=1e-11)


def test_delay_domain_errors():
    with pytest.raises(ValueError):
        erlang_c_delay(1.0, 0)
    with pytest.raises(ValueError):
        erlang_c_delay(1.0, 2.5)
    with pytest.raises(ValueError):
        erlang_c_delay(-0.5, 3)
    with pytest.raises(ValueError):
        erlang_c_delay(3.0, 3)  # r >= c: unstable
    with pytest.raises(ValueError):
        erlang_c_delay(5.0, 3)


def test_max_load_inverse_identity():
    for c, alpha in ((1, 0.5), (16, 0.5), (19, 0.5), (40, 0.2), (100, 0.8)):
        r_star = max_load_for_target(c, alpha)
        assert 0.0 < r_star < c
        assert erlang_c_delay(r_star, c) == pytest.approx(alpha, abs=1e-8)
        # Threshold property: strictly inside/outside by a hair flips the sign.
        assert erlang_c_delay(r_star - 1e-6, c) < alpha
        assert erlang_c_delay(r_star + 1e-6, c) > alpha


def test_max_load_monotone_in_servers():
    loads = [max_load_for_target(c, 0.5) for c in range(1, 30)]
    assert all(b > a for a, b in zip(loads, loads[1:]))


def test_max_load_frozen_values():
    # Frozen from a 50-digit bisection of the literal factorial formula;
    # tolerance is the implementation's bisection width (1e-10) plus slack.
    assert max_load_for_target(18, 0.5) == pytest.approx(15.8335729478823, abs=1e-9)
    assert max_load_for_target(19, 0.5) == pytest.approx(16.7745249289391, abs=1e-9)
    assert max_load_for_target(20, 0.5) == pytest.approx(17.7170220803232, abs=1e-9)


def test_max_load_memoized_and_validated():
    assert max_load_for_target(16, 0.5) is not None
    info = max_load_for_target.cache_info()
    max_load_for_target(16, 0.5)
    assert max_load_for_target.cache_info().hits > info.hits
    with pytest.raises(ValueError):
        max_load_for_target(0, 0.5)
    with pytest.raises(ValueError):
        max_load_for_target(5, 1.0)
    with pytest.raises(ValueError):
        max_load_for_target(5, 0.0)
