"""
Graph translations of the identifying assumptions and an exhaustive
checker for equivalences between them and the testable implication.

Predicates (conditioning set {X} throughout):
- a1: no directed path Y->M, Y->D, M->D, D->X, M->X or Y->X
- a3: direct edge D -> M
- a4a: Y and D d-separated in the graph without edges leaving D and M
- a4b: M and D d-separated in the graph without edges leaving D
- a5: no directed path D -> Y in the graph without edges leaving M (X blocks)
- a6: Y and M d-separated in the graph without edges leaving D and M
- ti: D and Y d-separated given {M, X} in the original graph
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from fullmed.config import Direction
from fullmed.errors import ArgumentError
from fullmed.graphs.dag import ALLOWED_EDGES, Dag, enumerate_dags

logger = logging.getLogger(__name__)

FORBIDDEN_PATHS = (("Y", "M"), ("Y", "D"), ("M", "D"), ("D", "X"), ("M", "X"), ("Y", "X"))


@dataclass(frozen=True)
class AssumptionProfile:
    """Truth value of each graph predicate on one graph."""
    a1_structure: bool
    a3_first_stage: bool
    a4a: bool
    a4b: bool
    a5_full_mediation: bool
    a6_mediator_exogeneity: bool

    def to_dict(self) -> Dict[str, bool]:
        return asdict(self)


def no_reverse_paths(g: Dag) -> bool:
    return not any(g.has_directed_path(source, target) for source, target in FORBIDDEN_PATHS)


def first_stage(g: Dag) -> bool:
    return g.has_edge("D", "M")


def treatment_exogeneity(g: Dag) -> bool:
    return g.intervene({"D", "M"}).d_separated({"Y"}, {"D"}, {"X"})


def treatment_mediator_exogeneity(g: Dag) -> bool:
    return g.intervene({"D"}).d_separated({"M"}, {"D"}, {"X"})


def full_mediation(g: Dag) -> bool:
    return not g.intervene({"M"}).has_directed_path("D", "Y", avoiding={"X"})


def mediator_exogeneity(g: Dag) -> bool:
    return g.intervene({"D", "M"}).d_separated({"Y"}, {"M"}, {"X"})


def ti_holds(g: Dag) -> bool:
    """Testable implication D independent of Y given (M, X), read off the graph."""
    return g.d_separated({"D"}, {"Y"}, {"M", "X"})


PREDICATES: Dict[str, Callable[[Dag], bool]] = {
    "a1": no_reverse_paths,
    "a3": first_stage,
    "a4a": treatment_exogeneity,
    "a4b": treatment_mediator_exogeneity,
    "a5": full_mediation,
    "a6": mediator_exogeneity,
    "ti": ti_holds,
}


def assumption_profile(g: Dag) -> AssumptionProfile:
    return AssumptionProfile(
        a1_structure=no_reverse_paths(g),
        a3_first_stage=first_stage(g),
        a4a=treatment_exogeneity(g),
        a4b=treatment_mediator_exogeneity(g),
        a5_full_mediation=full_mediation(g),
        a6_mediator_exogeneity=mediator_exogeneity(g),
    )


@dataclass(frozen=True)
class Theorem:
    """premises => (conjunction of lhs  <direction>  rhs)."""
    name: str
    premises: Sequence[str]
    lhs: Sequence[str]
    rhs: str = "ti"
    direction: Direction = Direction.IFF
    expect_counterexample: bool = False

    def describe(self) -> str:
        premises = ", ".join(self.premises) or "none"
        return f"given {premises}: {' & '.join(self.lhs)} {self.direction} {self.rhs}"


THEOREMS: Dict[str, Theorem] = {
    "1": Theorem("1", premises=("a1", "a3", "a4a", "a4b"), lhs=("a5", "a6")),
    "2": Theorem("2", premises=("a1", "a3"), lhs=("a4a", "a5", "a6")),
    "sanity": Theorem("sanity", premises=("a1", "a3"), lhs=("a5",), expect_counterexample=True),
}


def _check_names(names: Iterable[str]) -> None:
    unknown = [name for name in names if name not in PREDICATES]
    if unknown:
        raise ArgumentError(f"unknown predicate(s): {', '.join(unknown)}")


def violates(
    g: Dag,
    premises: Sequence[str],
    lhs: Sequence[str],
    rhs: str,
    direction: Direction = Direction.IFF,
) -> bool:
    """True when g satisfies the premises but not the stated implication."""
    if not all(PREDICATES[name](g) for name in premises):
        return False
    left = all(PREDICATES[name](g) for name in lhs)
    right = PREDICATES[rhs](g)
    direction = Direction(direction)
    if direction == Direction.IMPLIES:
        return left and not right
    if direction == Direction.IMPLIED_BY:
        return right and not left
    return left != right


def find_counterexamples(
    premises: Sequence[str],
    lhs: Sequence[str],
    rhs: str = "ti",
    direction: Direction = Direction.IFF,
    graphs: Optional[Iterable[Dag]] = None,
    limit: Optional[int] = None,
) -> List[Dag]:
    """
    Scan the graph space and collect counterexamples.

    Args:
        premises: Predicates assumed to hold
        lhs: Predicates whose conjunction forms the left side
        rhs: Predicate on the right side
        direction: "=>", "<=" or "<=>"
        graphs: Graphs to scan; defaults to the full enumeration
        limit: Stop after this many counterexamples
    """
    _check_names([*premises, *lhs, rhs])
    found = []
    for g in enumerate_dags(ALLOWED_EDGES) if graphs is None else graphs:
        if violates(g, premises, lhs, rhs, direction):
            found.append(g)
            if limit is not None and len(found) >= limit:
                break
    return found


def verify_theorem(
    premises: Sequence[str],
    lhs: Sequence[str],
    rhs: str = "ti",
    direction: Direction = Direction.IFF,
) -> Optional[Dag]:
    """First counterexample in the enumeration, or None when the statement holds everywhere."""
    found = find_counterexamples(premises, lhs, rhs, direction, limit=1)
    return found[0] if found else None


@dataclass
class Verdict:
    """Result of checking one named theorem over the full graph space."""
    theorem: Theorem
    graphs_scanned: int
    counterexamples: List[Dag] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return not self.counterexamples

    @property
    def as_expected(self) -> bool:
        return self.verified != self.theorem.expect_counterexample

    def to_dict(self, list_all: bool = False) -> Dict:
        shown = self.counterexamples if list_all else self.counterexamples[:1]
        return {
            "theorem": self.theorem.name,
            "statement": self.theorem.describe(),
            "graphs_scanned": self.graphs_scanned,
            "counterexamples": len(self.counterexamples),
            "verified": self.verified,
            "as_expected": self.as_expected,
            "examples": [g.to_text() for g in shown],
        }


def check_theorem(name: str) -> Verdict:
    """Scan every enumerated graph for the named theorem and keep all counterexamples."""
    if name not in THEOREMS:
        raise ArgumentError(f"unknown theorem '{name}' (choose from {', '.join(THEOREMS)})")
    theorem = THEOREMS[name]
    graphs = list(enumerate_dags(ALLOWED_EDGES))
    found = find_counterexamples(theorem.premises, theorem.lhs, theorem.rhs, theorem.direction, graphs)
    logger.info("Theorem %s: %d counterexamples in %d graphs", name, len(found), len(graphs))
    return Verdict(theorem=theorem, graphs_scanned=len(graphs), counterexamples=found)
