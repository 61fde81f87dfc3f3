"""Erlang-C delay probability and its inverse in the offered load.

For an M/M/c queue with offered load r = lambda/mu and utilization
rho = r/c < 1, the probability an arriving customer must wait is

    C(r, c) = [r^c / (c! (1 - rho))] / [r^c / (c! (1 - rho)) + sum_{t<c} r^t / t!].

The literal formula overflows past c ~ 170 in doubles, so we evaluate it
through the Erlang-B recursion

    B(0) = 1,   B(k) = r B(k-1) / (k + r B(k-1)),
    C(r, c) = B(c) / (1 - rho (1 - B(c))),

which is stable for any c.  Instability (r >= c) is a hard error here; callers
that need the joint "stable and fast enough" event handle it at their level.
"""

from __future__ import annotations

import functools

__all__ = ["erlang_c_delay", "max_load_for_target"]


def erlang_c_delay(r: float, c: int) -> float:
    """Delay probability C(r, c) for 0 < r < c; strictly increasing in r,
    strictly decreasing in c."""
    if int(c) != c or c < 1:
        raise ValueError(f"c must be a positive integer, got {c!r}")
    c = int(c)
    if not r > 0.0:
        raise ValueError(f"offered load must be positive, got r={r!r}")
    if r >= c:
        raise ValueError(f"unstable system: offered load r={r!r} >= c={c} servers")
    if c == 1:
        return r  # exact single-server identity C(r, 1) = rho = r
    b = 1.0
    for k in range(1, c + 1):
        b = r * b / (k + r * b)
    rho = r / c
    return b / (1.0 - rho * (1.0 - b))


@functools.lru_cache(maxsize=None)
def max_load_for_target(c: int, alpha: float) -> float:
    """The unique offered load r*(c, alpha) in (0, c) with delay exactly alpha.

    erlang_c_delay(r, c) <= alpha iff r <= r*.  Bisection to |dr| <= 1e-10.
    The result is memoized: the function is pure and solvers probe the same
    (c, alpha) pairs across many replications.
    """
    if int(c) != c or c < 1:
        raise ValueError(f"c must be a positive integer, got {c!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    c = int(c)
    lo, hi = 0.0, float(c)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval narrower than float spacing
            break
        if erlang_c_delay(mid, c) > alpha:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
