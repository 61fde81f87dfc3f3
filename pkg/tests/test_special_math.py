"""Special functions vs frozen high-precision tables, plus analytic identities.

The CSV tables under ``tests/data/`` were generated by ``gen_oracle_tables.py``
(mpmath at 50 significant digits) and are the independent oracle; tolerances
here are the contract, not what the implementation happens to achieve.
"""

import csv
import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from vbcc.special_math import (
    digamma,
    log_gamma,
    reg_incomplete_beta,
    reg_lower_incomplete_gamma,
    std_normal_quantile,
    trigamma,
)

DATA = Path(__file__).parent / "data"

# |computed - oracle| <= tol * max(1, |oracle|): relative in the large,
# absolute near zeros (log_gamma vanishes at x = 1, 2; quantile at p = 1/2).
TOLERANCES = {
    "log_gamma.csv": 1e-13,
    "digamma.csv": 1e-12,
    "trigamma.csv": 1e-12,
    "incomplete_gamma.csv": 1e-12,
    "incomplete_beta.csv": 1e-12,
    "normal_quantile.csv": 1e-9,
}


def load_table(name: str) -> list[dict[str, float]]:
    with open(DATA / name, newline="", encoding="utf-8") as fh:
        rows = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
    assert len(rows) >= 200 or name == "trigamma.csv", f"{name}: thin table ({len(rows)} rows)"
    return rows


def check_against_table(name: str, fn, arg_names: tuple[str, ...]) -> float:
    tol = TOLERANCES[name]
    worst = 0.0
    for row in load_table(name):
        got = fn(*(row[a] for a in arg_names))
        err = abs(got - row["value"]) / max(1.0, abs(row["value"]))
        worst = max(worst, err)
        assert err <= tol, (
            f"{name}: {[(a, row[a]) for a in arg_names]} -> {got!r}, "
            f"oracle {row['value']!r}, err {err:.3e} > {tol}")
    return worst


def test_log_gamma_table():
    check_against_table("log_gamma.csv", log_gamma, ("x",))


def test_digamma_table():
    check_against_table("digamma.csv", digamma, ("x",))


def test_trigamma_table():
    check_against_table("trigamma.csv", trigamma, ("x",))


def test_incomplete_gamma_table():
    check_against_table("incomplete_gamma.csv", reg_lower_incomplete_gamma, ("a", "x"))


def test_incomplete_beta_table():
    check_against_table("incomplete_beta.csv", reg_incomplete_beta, ("a", "b", "x"))


def test_normal_quantile_table():
    check_against_table("normal_quantile.csv", std_normal_quantile, ("p",))


def test_spot_values():
    # ln Gamma(16) = ln 15!; ln Gamma(0.5) = ln sqrt(pi); psi(1) = -EulerGamma.
    assert log_gamma(16.0) == pytest.approx(math.log(math.factorial(15)), rel=1e-14)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)
    assert trigamma(1.0) == pytest.approx(math.pi**2 / 6.0, rel=1e-13)
    # P(1, x) = 1 - e^{-x}; I_x(1, 1) = x.
    assert reg_lower_incomplete_gamma(1.0, 2.5) == pytest.approx(-math.expm1(-2.5), rel=1e-14)
    assert reg_incomplete_beta(1.0, 1.0, 0.3) == pytest.approx(0.3, rel=1e-14)
    assert std_normal_quantile(0.5) == 0.0


@pytest.mark.parametrize("fn, bad_args", [
    (log_gamma, (0.0,)),
    (log_gamma, (-3.0,)),
    (log_gamma, (math.inf,)),
    (digamma, (0.0,)),
    (digamma, (-1.5,)),
    (trigamma, (0.0,)),
    (reg_lower_incomplete_gamma, (0.0, 1.0)),
    (reg_lower_incomplete_gamma, (1.0, -0.5)),
    (reg_incomplete_beta, (0.0, 1.0, 0.5)),
    (reg_incomplete_beta, (1.0, 1.0, 1.5)),
    (reg_incomplete_beta, (1.0, 1.0, -0.1)),
    (std_normal_quantile, (0.0,)),
    (std_normal_quantile, (1.0,)),
])
def test_domain_violations_raise(fn, bad_args):
    with pytest.raises(ValueError):
        fn(*bad_args)


@settings(derandomize=True, max_examples=200)
@given(st.floats(min_value=1e-3, max_value=1e5))
def test_log_gamma_recurrence(x):
    lhs = log_gamma(x + 1.0)
    rhs = log_gamma(x) + math.log(x)
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


@settings(derandomize=True, max_examples=200)
@given(st.floats(min_value=1e-3, max_value=1e5))
def test_digamma_recurrence(x):
    assert digamma(x + 1.0) == pytest.approx(digamma(x) + 1.0 / x, rel=1e-10, abs=1e-10)


@settings(derandomize=True, max_examples=200)
@given(st.floats(min_value=1e-3, max_value=1e4))
def test_trigamma_recurrence(x):
    assert trigamma(x + 1.0) == pytest.approx(trigamma(x) - 1.0 / x**2, rel=1e-9, abs=1e-10)


@settings(derandomize=True, max_examples=100)
@given(st.floats(min_value=0.5, max_value=500.0))
def test_digamma_is_log_gamma_derivative(x):
    h = 1e-5 * max(1.0, x)
    central = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h)
    assert digamma(x) == pytest.approx(central, rel=1e-7, abs=1e-7)


@settings(derandomize=True, max_examples=200)
@given(st.floats(min_value=0.05, max_value=200.0),
       st.floats(min_value=1e-6, max_value=400.0),
       st.floats(min_value=1.001, max_value=4.0))
def test_incomplete_gamma_monotone_and_bounded(a, x, factor):
    p1 = reg_lower_incomplete_gamma(a, x)
    p2 = reg_lower_incomplete_gamma(a, x * factor)
    assert 0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0
    assert p2 >= p1 - 1e-14


@settings(derandomize=True, max_examples=200)
@given(st.floats(min_value=0.05, max_value=200.0),
       st.floats(min_value=0.05, max_value=200.0),
       st.floats(min_value=1e-6, max_value=1.0 - 1e-6))
def test_incomplete_beta_symmetry(a, b, x):
    assert reg_incomplete_beta(a, b, x) + reg_incomplete_beta(b, a, 1.0 - x) == \
        pytest.approx(1.0, abs=5e-12)


@settings(derandomize=True, max_examples=200)
@given(st.floats(min_value=1e-12, max_value=1.0 - 1e-12))
def test_normal_quantile_symmetry_and_roundtrip(p):
    z = std_normal_quantile(p)
    # The reflected input 1 - p carries ~1 ulp of rounding, amplified by
    # 1/phi(z) in the output; the bound below is that rounding floor.
    density = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    floor = 1e-9 + 5e-16 / max(density, 1e-300)
    assert std_normal_quantile(1.0 - p) == pytest.approx(-z, abs=floor)
    phi = 0.5 * math.erfc(-z / math.sqrt(2.0))
    assert phi == pytest.approx(p, rel=1e-9, abs=1e-12)


def test_normal_quantile_monotone():
    grid = [i / 1000.0 for i in range(1, 1000)]
    values = [std_normal_quantile(p) for p in grid]
    assert all(v2 > v1 for v1, v2 in zip(values, values[1:]))
