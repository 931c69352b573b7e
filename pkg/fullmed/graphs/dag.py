"""
Causal graphs over the observed nodes Y, D, M, X with pairwise latent confounders.

A latent confounder of the pair (A, B) is a node ``U_AB`` with the two
edges U_AB -> A and U_AB -> B. Graphs are stored as ``networkx.DiGraph``
objects; d-separation uses the Bayes-ball reachability rules.

Text format (one edge per line, ``#`` starts a comment):
    X -> D
    D <-> M
"""

import itertools
import logging
from collections import deque
from typing import FrozenSet, Iterable, Iterator, Set, Tuple

import networkx as nx

from fullmed.errors import ArgumentError

logger = logging.getLogger(__name__)

OBSERVED = ("Y", "D", "M", "X")

# Directed edges allowed by the absence of reverse causal paths
ALLOWED_EDGES = (
    ("X", "D"),
    ("X", "M"),
    ("X", "Y"),
    ("D", "M"),
    ("D", "Y"),
    ("M", "Y"),
)

Edge = Tuple[str, str]


def _pair(a: str, b: str) -> Edge:
    if a == b:
        raise ArgumentError(f"a confounder needs two distinct nodes (got {a} twice)")
    return tuple(sorted((a, b), key=OBSERVED.index))


LATENT_PAIRS = tuple(_pair(a, b) for a, b in itertools.combinations(OBSERVED, 2))


def latent_name(pair: Edge) -> str:
    return f"U_{pair[0]}{pair[1]}"


class Dag:
    """
    Acyclic graph over the observed nodes plus pairwise latents.

    Args:
        edges: Directed edges among observed nodes
        confounders: Unordered observed pairs sharing a latent parent

    Raises:
        ArgumentError: On unknown nodes, self loops or cycles
    """

    def __init__(self, edges: Iterable[Edge] = (), confounders: Iterable[Edge] = ()):
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(OBSERVED)

        directed = set()
        for tail, head in edges:
            for node in (tail, head):
                if node not in OBSERVED:
                    raise ArgumentError(f"unknown node '{node}'")
            if tail == head:
                raise ArgumentError(f"self loop on {tail}")
            directed.add((tail, head))

        pairs = set()
        for a, b in confounders:
            for node in (a, b):
                if node not in OBSERVED:
                    raise ArgumentError(f"unknown node '{node}'")
            pairs.add(_pair(a, b))

        self.graph.add_edges_from(directed)
        for pair in pairs:
            latent = latent_name(pair)
            self.graph.add_node(latent, latent=True)
            self.graph.add_edges_from([(latent, pair[0]), (latent, pair[1])])

        if not nx.is_directed_acyclic_graph(self.graph):
            raise ArgumentError("graph contains a directed cycle")

        self._edges = tuple(sorted(directed, key=lambda e: (OBSERVED.index(e[0]), OBSERVED.index(e[1]))))
        self._confounders = tuple(sorted(pairs, key=LATENT_PAIRS.index))

    @property
    def edges(self) -> Tuple[Edge, ...]:
        """Directed edges among observed nodes."""
        return self._edges

    @property
    def confounders(self) -> Tuple[Edge, ...]:
        """Observed pairs with a latent common parent."""
        return self._confounders

    @property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(self.graph.nodes)

    def has_edge(self, tail: str, head: str) -> bool:
        return (tail, head) in self._edges

    def parents(self, node: str) -> Set[str]:
        return set(self.graph.predecessors(node))

    def children(self, node: str) -> Set[str]:
        return set(self.graph.successors(node))

    def d_separated(self, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> bool:
        return d_separated(self, a, b, c)

    def intervene(self, nodes: Iterable[str]) -> "Dag":
        return intervene(self, nodes)

    def has_directed_path(self, source: str, target: str, avoiding: Iterable[str] = ()) -> bool:
        """Directed path from source to target that visits none of ``avoiding``."""
        blocked = set(avoiding) - {source, target}
        view = nx.subgraph_view(self.graph, filter_node=lambda node: node not in blocked)
        return nx.has_path(view, source, target)

    def to_text(self) -> str:
        lines = [f"{tail} -> {head}" for tail, head in self._edges]
        lines += [f"{a} <-> {b}" for a, b in self._confounders]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse(cls, text: str) -> "Dag":
        """
        Read the edge-list text format.

        Raises:
            ArgumentError: On a line that is neither ``A -> B`` nor ``A <-> B``
        """
        edges, confounders = [], []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "<->" in line:
                target = confounders
                parts = line.split("<->")
            elif "->" in line:
                target = edges
                parts = line.split("->")
            else:
                raise ArgumentError(f"line {number}: expected 'A -> B' or 'A <-> B', got '{raw}'")
            if len(parts) != 2:
                raise ArgumentError(f"line {number}: malformed edge '{raw}'")
            target.append((parts[0].strip(), parts[1].strip()))
        return cls(edges, confounders)

    def _key(self) -> Tuple[Tuple[Edge, ...], Tuple[Edge, ...]]:
        return self._edges, self._confounders

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        parts = [f"{t}->{h}" for t, h in self._edges] + [f"{a}<->{b}" for a, b in self._confounders]
        return f"Dag({', '.join(parts)})"


def _node_set(g: Dag, nodes: Iterable[str], label: str) -> FrozenSet[str]:
    nodes = frozenset([nodes] if isinstance(nodes, str) else nodes)
    unknown = [node for node in nodes if node not in g.graph]
    if unknown:
        raise ArgumentError(f"unknown node(s) in {label}: {', '.join(sorted(unknown))}")
    return nodes


def d_separated(g: Dag, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> bool:
    """
    True when every path between a and b is blocked given c.

    A ball travels "up" (arrived from a child) or "down" (arrived from a
    parent). Unobserved nodes pass balls in every direction except a
    down-travelling ball into parents; observed nodes stop everything
    except a down-travelling ball, which bounces back to their parents.

    Raises:
        ArgumentError: On unknown nodes or overlapping sets
    """
    a, b, c = _node_set(g, a, "a"), _node_set(g, b, "b"), _node_set(g, c, "c")
    if a & b or a & c or b & c:
        raise ArgumentError("a, b and c must be disjoint")

    graph = g.graph
    queue = deque((node, "up") for node in a)
    visited = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in b:
            return False

        if node in c:
            if direction == "down":
                queue.extend((parent, "up") for parent in graph.predecessors(node))
            continue

        if direction == "up":
            queue.extend((parent, "up") for parent in graph.predecessors(node))
        queue.extend((child, "down") for child in graph.successors(node))
    return True


def intervene(g: Dag, nodes: Iterable[str]) -> Dag:
    """
    Copy of g without the edges leaving ``nodes`` (observed nodes only).

    Raises:
        ArgumentError: If a node is not observed
    """
    nodes = frozenset([nodes] if isinstance(nodes, str) else nodes)
    unknown = nodes - set(OBSERVED)
    if unknown:
        raise ArgumentError(f"can only intervene on observed nodes (got {', '.join(sorted(unknown))})")
    return Dag([edge for edge in g.edges if edge[0] not in nodes], g.confounders)


def enumerate_dags(allowed: Iterable[Edge] = ALLOWED_EDGES) -> Iterator[Dag]:
    """
    Every graph whose directed edges come from ``allowed``, crossed with every
    subset of pairwise latent confounders.

    The order is deterministic: observed-edge subsets vary slowest.
    """
    allowed = tuple(allowed)
    edge_subsets = list(itertools.product((False, True), repeat=len(allowed)))
    latent_subsets = list(itertools.product((False, True), repeat=len(LATENT_PAIRS)))
    for edge_mask in edge_subsets:
        edges = [edge for edge, keep in zip(allowed, edge_mask) if keep]
        for latent_mask in latent_subsets:
            pairs = [pair for pair, keep in zip(LATENT_PAIRS, latent_mask) if keep]
            try:
                yield Dag(edges, pairs)
            except ArgumentError:
                logger.debug("Skipping cyclic candidate %s", edges)


FULL_MEDIATION_DAG = Dag([("X", "D"), ("X", "M"), ("X", "Y"), ("D", "M"), ("M", "Y")])
CONFOUNDED_FIRST_STAGE_DAG = Dag(FULL_MEDIATION_DAG.edges, [("D", "M")])
