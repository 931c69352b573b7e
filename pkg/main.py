#!/usr/bin/env python3
"""
fullmed - Main Entry Point

Tests whether a treatment affects an outcome only through its mediators,
with no unobserved mediator-outcome confounding, using double machine
learning. Also ships a Monte Carlo harness, exact population oracles
and a causal-graph verifier.

Usage:
    python main.py test-ci --data input/study.csv --outcome y --treatment d --mediators m --covariates all-remaining
    python main.py simulate --dgp 1 --n 1000 --p 50 --reps 200
    python main.py oracle check-ti --population input/population.json
    python main.py verify-dags --theorem all

Or run as a module:
    python -m fullmed verify-dags
"""

from fullmed.cli import main

if __name__ == "__main__":
    main()
