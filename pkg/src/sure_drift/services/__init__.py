"""Numerical services: sampling, path statistics, risk estimates, search and Monte Carlo checks."""
