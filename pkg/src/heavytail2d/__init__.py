"""Bivariate heavy-tail classes, dependence models and ruin asymptotics.

Exact and quadrature approximants, seeded Monte Carlo estimators and a
verification harness that compares the two along threshold schedules.
"""

__version__ = "0.1.0"
