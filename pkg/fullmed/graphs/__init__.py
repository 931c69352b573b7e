"""Causal graphs, d-separation and exhaustive theorem checks."""

from fullmed.graphs.dag import (
    CONFOUNDED_FIRST_STAGE_DAG,
    FULL_MEDIATION_DAG,
    Dag,
    d_separated,
    enumerate_dags,
    intervene,
)
from fullmed.graphs.verifier import (
    PREDICATES,
    THEOREMS,
    AssumptionProfile,
    Verdict,
    assumption_profile,
    check_theorem,
    find_counterexamples,
    ti_holds,
    verify_theorem,
)

__all__ = [
    "CONFOUNDED_FIRST_STAGE_DAG",
    "FULL_MEDIATION_DAG",
    "PREDICATES",
    "THEOREMS",
    "AssumptionProfile",
    "Dag",
    "Verdict",
    "assumption_profile",
    "check_theorem",
    "d_separated",
    "enumerate_dags",
    "find_counterexamples",
    "intervene",
    "ti_holds",
    "verify_theorem",
]
