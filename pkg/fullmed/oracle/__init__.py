"""Exact computation on small discrete structural models."""

from fullmed.oracle.checks import (
    CheckResult,
    EffectReport,
    check_bdfd,
    check_separability,
    check_ti,
    effects,
    find_bdfd_not_ti,
    front_door_population,
)
from fullmed.oracle.population import (
    DiscretePopulation,
    JointTable,
    load_population,
    marginalize,
    random_population,
    sample,
    save_population,
)
from fullmed.oracle.truth import (
    support_dataset,
    true_bdfd_nuisances,
    true_nuisances,
    true_theta,
    true_theta_bar,
)

__all__ = [
    "CheckResult",
    "DiscretePopulation",
    "EffectReport",
    "JointTable",
    "check_bdfd",
    "check_separability",
    "check_ti",
    "effects",
    "find_bdfd_not_ti",
    "front_door_population",
    "load_population",
    "marginalize",
    "random_population",
    "sample",
    "save_population",
    "support_dataset",
    "true_bdfd_nuisances",
    "true_nuisances",
    "true_theta",
    "true_theta_bar",
]
