"""Variational-Bayes joint chance-constrained optimization.

A library and CLI for solving joint chance-constrained programs where the
uncertain parameters carry a Bayesian or variational-Bayesian posterior,
instantiated end-to-end on M/M/c staffing (pick the fewest servers whose
delay probability is acceptable with posterior confidence beta) and on a
linear Gaussian chance constraint in the plane.
"""

__version__ = "0.1.0"
