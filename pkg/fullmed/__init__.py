"""
fullmed - testing full mediation and mediator exogeneity.

Double machine learning tests of conditional mean independence between
treatment and outcome given mediators and covariates, a back-door versus
front-door comparison, a Monte Carlo harness, exact discrete-population
oracles and an exhaustive causal-graph verifier.
"""

__version__ = "1.0.0"
