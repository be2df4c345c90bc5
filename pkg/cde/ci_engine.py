"""
Conditional-independence representation queries on DAGs.

Two logically equivalent criteria are provided: moralisation of the ancestral
subgraph followed by undirected separation, and d-separation (path blocking,
implemented as a reachability search over (node, direction) states). Markov
equivalence is decided from skeletons and immoralities.
"""
from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from .errors import CapacityError, QueryError
from .graph_core import (
    CiQuery,
    Dag,
    Edge,
    NodeSet,
    ancestors,
    ancestral_subgraph,
    as_node_set,
    connecting_path,
    immoralities,
    moralise,
    skeleton,
)

logger = logging.getLogger(__name__)

MAX_ENUMERATION_NODES = 8
MAX_CLASS_NODES = 7


class Method(str, Enum):
    MORALISATION = "moralisation"
    DSEPARATION = "d-separation"


@dataclass(frozen=True)
class CiVerdict:
    """
    Outcome of a representation query.

    `witness` is a connecting path (moral-graph path for moralisation, trail in
    the DAG for d-separation) when the property is not represented; it is empty
    otherwise. Witnesses are diagnostic only and are not part of equality.
    """
    represented: bool
    method: Method
    witness: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.represented

    def __eq__(self, other) -> bool:
        if not isinstance(other, CiVerdict):
            return NotImplemented
        return self.represented == other.represented and self.method == other.method

    def __hash__(self) -> int:
        return hash((self.represented, self.method))


def query_ci_moral(g: Dag, q: CiQuery) -> CiVerdict:
    """Ancestral subgraph, moralisation, then separation in the moral graph."""
    sub = ancestral_subgraph(g, q)
    path = connecting_path(moralise(sub), q.x, q.y, q.z)
    logger.debug("moral query %s on %d/%d nodes: %s", q, len(sub), len(g), "open" if path else "separated")
    if path is None:
        return CiVerdict(True, Method.MORALISATION)
    return CiVerdict(False, Method.MORALISATION, path)


_UP, _DOWN = "up", "down"


def _active_trail(g: Dag, x: FrozenSet[str], y: FrozenSet[str], z: FrozenSet[str]) -> Optional[Tuple[str, ...]]:
    """
    Reachability over (node, direction) states; `up` means the node was entered
    from one of its children, `down` from one of its parents. Returns the trail
    to the first reached node of y, or None.
    """
    graph = g.nx_view
    opened = ancestors(g, z)  # colliders with a descendant (or themselves) in z
    start = [(node, _UP) for node in g.ordered(x)]
    previous: Dict[Tuple[str, str], Optional[Tuple[str, str]]] = {state: None for state in start}
    queue = deque(start)
    while queue:
        state = queue.popleft()
        node, direction = state
        if node in y:
            trail: List[str] = []
            cursor: Optional[Tuple[str, str]] = state
            while cursor is not None:
                trail.append(cursor[0])
                cursor = previous[cursor]
            return tuple(reversed(trail))
        moves: List[Tuple[str, str]] = []
        if direction == _UP and node not in z:
            moves += [(p, _UP) for p in g.ordered(graph.predecessors(node))]
            moves += [(c, _DOWN) for c in g.ordered(graph.successors(node))]
        elif direction == _DOWN:
            if node not in z:
                moves += [(c, _DOWN) for c in g.ordered(graph.successors(node))]
            if node in opened:
                moves += [(p, _UP) for p in g.ordered(graph.predecessors(node))]
        for move in moves:
            if move not in previous:
                previous[move] = state
                queue.append(move)
    return None


def query_ci_dsep(g: Dag, q: CiQuery) -> CiVerdict:
    """Every trail between x and y blocked by z."""
    q.validate(g)
    trail = _active_trail(g, q.x, q.y, q.z)
    if trail is None:
        return CiVerdict(True, Method.DSEPARATION)
    return CiVerdict(False, Method.DSEPARATION, trail)


def query_ci(g: Dag, q: CiQuery, method: Method = Method.MORALISATION) -> CiVerdict:
    if Method(method) is Method.MORALISATION:
        return query_ci_moral(g, q)
    return query_ci_dsep(g, q)


def candidate_queries(ids: Iterable[str], max_query_size: int) -> Iterable[CiQuery]:
    """All canonical (x, y, z) with non-empty x, y of size <= max_query_size."""
    ids = sorted(ids)
    # label 0: unused, 1: x, 2: y, 3: z
    for labels in itertools.product(range(4), repeat=len(ids)):
        x = frozenset(n for n, lab in zip(ids, labels) if lab == 1)
        y = frozenset(n for n, lab in zip(ids, labels) if lab == 2)
        if not x or not y or len(x) > max_query_size or len(y) > max_query_size:
            continue
        if sorted(y) < sorted(x):
            continue
        yield CiQuery(x, y, frozenset(n for n, lab in zip(ids, labels) if lab == 3))


def represented_ci_set(
    g: Dag,
    max_query_size: int,
    *,
    nodes: Optional[NodeSet] = None,
    method: Method = Method.DSEPARATION,
) -> FrozenSet[CiQuery]:
    """
    Every canonical query over `nodes` (default: all nodes) that g represents.

    Enumeration is exhaustive, hence guarded to graphs with at most
    MAX_ENUMERATION_NODES nodes in the query universe.
    """
    universe = as_node_set(nodes) if nodes is not None else frozenset(g.ids)
    if len(universe) > MAX_ENUMERATION_NODES:
        raise CapacityError(f"CI enumeration is limited to {MAX_ENUMERATION_NODES} nodes, got {len(universe)}")
    for node_id in universe:
        g.node(node_id)
    return frozenset(
        q for q in candidate_queries(universe, max_query_size) if query_ci(g, q, method).represented
    )


def markov_equivalent(g1: Dag, g2: Dag) -> bool:
    """Same skeleton and same immoralities."""
    if set(g1.ids) != set(g2.ids):
        raise QueryError(
            "Markov equivalence needs identical node sets; differing nodes: "
            + ", ".join(sorted(set(g1.ids) ^ set(g2.ids)))
        )
    return skeleton(g1) == skeleton(g2) and immoralities(g1) == immoralities(g2)


class _Orienter:
    """Backtracking search over orientations of a skeleton that keep its immoralities."""

    def __init__(self, g: Dag):
        self.g = g
        self.target = immoralities(g)
        self.fixed: Set[Edge] = set()
        self.free: List[Tuple[str, str]] = []
        for u, v in g.sorted_edges():
            if g.node(u).is_exogenous:
                self.fixed.add((u, v))
        for a, c, b in self.target:
            self.fixed.add((a, c))
            self.fixed.add((b, c))
        for u, v in g.sorted_edges():
            if (u, v) not in self.fixed and (v, u) not in self.fixed:
                self.free.append((u, v))
        self.results: List[Dag] = []

    def _allowed(self, graph: nx.DiGraph, u: str, v: str) -> bool:
        # adding u -> v closes a cycle when v already reaches u
        if self.g.node(v).is_exogenous or nx.has_path(graph, v, u):
            return False
        for p in graph.predecessors(v):
            if p != u and not self.g.adjacent(p, u) and (min(p, u), v, max(p, u)) not in self.target:
                return False
        return True

    def run(self) -> List[Dag]:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.g.ids)
        graph.add_edges_from(self.fixed)
        self._search(0, graph)
        return self.results

    def _search(self, i: int, graph: nx.DiGraph) -> None:
        if i == len(self.free):
            candidate = Dag(self.g.nodes, list(graph.edges()), partial=self.g.partial)
            if immoralities(candidate) == self.target:
                self.results.append(candidate)
            return
        a, b = self.free[i]
        for u, v in ((a, b), (b, a)):
            if self._allowed(graph, u, v):
                graph.add_edge(u, v)
                self._search(i + 1, graph)
                graph.remove_edge(u, v)


def enumerate_equivalence_class(g: Dag) -> FrozenSet[Dag]:
    """
    Every DAG over g's nodes with g's skeleton and immoralities.

    Exogenous (regime/error) nodes keep their outgoing orientation, so the
    guard counts domain nodes only.
    """
    if len(g.domain_nodes) > MAX_CLASS_NODES:
        raise CapacityError(
            f"equivalence-class enumeration is limited to {MAX_CLASS_NODES} domain nodes, got {len(g.domain_nodes)}"
        )
    found = _Orienter(g).run()
    logger.debug("equivalence class of %r has %d member(s)", g, len(found))
    return frozenset(found)
