"""
Typed directed acyclic graphs and purely graph-theoretic primitives.

Nodes are Domain (stochastic variables of the modelled system), Error
(exogenous noise of a structural model) or Regime (non-stochastic intervention
indicators). Regime nodes are ordinary vertices for every operation here; the
regime semantics live in cde.regimes.

All values are immutable after construction.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import GraphStructureError, QueryError

logger = logging.getLogger(__name__)

NodeSet = Union[str, Iterable[str]]
Edge = Tuple[str, str]
Immorality = Tuple[str, str, str]


class NodeKind(str, Enum):
    DOMAIN = "domain"
    REGIME = "regime"
    ERROR = "error"


@dataclass(frozen=True)
class Node:
    """
    A typed vertex.

    For Regime nodes `target` names the Domain node the indicator acts on and
    `cardinality` is the target's cardinality + 1: states 0..k-1 are the
    target's values and state k is `idle`.
    """
    id: str
    kind: NodeKind = NodeKind.DOMAIN
    cardinality: int = 2
    target: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise GraphStructureError("node id must be non-empty")
        if self.cardinality < 2:
            raise GraphStructureError(f"node {self.id} must have at least 2 states, got {self.cardinality}")
        if (self.kind is NodeKind.REGIME) != (self.target is not None):
            raise GraphStructureError(f"node {self.id}: exactly the regime nodes name a target")

    @classmethod
    def domain(cls, node_id: str, states: int = 2) -> "Node":
        return cls(node_id, NodeKind.DOMAIN, states)

    @classmethod
    def error(cls, node_id: str, states: int = 2) -> "Node":
        return cls(node_id, NodeKind.ERROR, states)

    @classmethod
    def regime(cls, node_id: str, target: "Node") -> "Node":
        return cls(node_id, NodeKind.REGIME, target.cardinality + 1, target.id)

    @property
    def is_regime(self) -> bool:
        return self.kind is NodeKind.REGIME

    @property
    def is_exogenous(self) -> bool:
        return self.kind is not NodeKind.DOMAIN

    @property
    def idle_state(self) -> Optional[int]:
        return self.cardinality - 1 if self.is_regime else None


def as_node_set(nodes: Optional[NodeSet]) -> FrozenSet[str]:
    """Accept a single id, an iterable of ids, or None."""
    if nodes is None:
        return frozenset()
    if isinstance(nodes, str):
        return frozenset([nodes])
    return frozenset(nodes)


class Dag:
    """
    Directed acyclic graph over typed nodes.

    `partial=True` is used for subgraphs: a Regime node may then have lost the
    edge to its (removed) target. Graphs built from declarations always have
    the complete form, with exactly one edge out of every Regime node.
    """

    __slots__ = ("_nodes", "_index", "_order", "_graph", "_partial")

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge] = (), *, partial: bool = False):
        self._nodes: Tuple[Node, ...] = tuple(nodes)
        self._index: Dict[str, Node] = {}
        for node in self._nodes:
            if node.id in self._index:
                raise GraphStructureError(f"duplicate node id '{node.id}'")
            self._index[node.id] = node
        self._order = {node.id: i for i, node in enumerate(self._nodes)}
        self._partial = partial

        graph = nx.DiGraph()
        graph.add_nodes_from(self._order)
        for parent, child in edges:
            for end in (parent, child):
                if end not in self._index:
                    raise GraphStructureError(f"edge {parent} -> {child} refers to undeclared node '{end}'")
            if parent == child:
                raise GraphStructureError(f"self-loop on '{parent}'")
            if graph.has_edge(parent, child):
                raise GraphStructureError(f"duplicate edge {parent} -> {child}")
            graph.add_edge(parent, child)

        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise GraphStructureError("directed cycle: " + " -> ".join([u for u, _ in cycle] + [cycle[0][0]]))
        self._graph = nx.freeze(graph)
        self._check_kinds()

    def _check_kinds(self) -> None:
        for node in self._nodes:
            if node.is_exogenous and self._graph.in_degree(node.id) > 0:
                raise GraphStructureError(f"{node.kind.value} node '{node.id}' is exogenous and cannot have parents")
            if not node.is_regime:
                continue
            target = self._index.get(node.target)
            if target is None:
                if not self._partial:
                    raise GraphStructureError(f"regime '{node.id}' targets undeclared node '{node.target}'")
            else:
                if target.kind is not NodeKind.DOMAIN:
                    raise GraphStructureError(f"regime '{node.id}' must target a domain node, not '{target.id}'")
                if node.cardinality != target.cardinality + 1:
                    raise GraphStructureError(
                        f"regime '{node.id}' needs {target.cardinality + 1} states (target values + idle)"
                    )
            children = set(self._graph.successors(node.id))
            expected = {node.target} if (target is not None and not self._partial) else (children & {node.target})
            if children != expected:
                raise GraphStructureError(f"regime '{node.id}' must have exactly one outgoing edge, to '{node.target}'")

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], nodes: Iterable[str] = (), states: int = 2) -> "Dag":
        """Domain-only graph; node order is `nodes` followed by first appearance in `edges`."""
        edges = list(edges)
        order: List[str] = []
        for node_id in itertools.chain(nodes, itertools.chain.from_iterable(edges)):
            if node_id not in order:
                order.append(node_id)
        return cls([Node.domain(n, states) for n in order], edges)

    # -- structure ---------------------------------------------------------

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return self._nodes

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(node.id for node in self._nodes)

    @property
    def edges(self) -> FrozenSet[Edge]:
        return frozenset(self._graph.edges())

    @property
    def partial(self) -> bool:
        return self._partial

    def sorted_edges(self) -> List[Edge]:
        return sorted(self._graph.edges(), key=lambda e: (self._order[e[0]], self._order[e[1]]))

    def node(self, node_id: str) -> Node:
        try:
            return self._index[node_id]
        except KeyError:
            raise QueryError(f"unknown node '{node_id}'") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self._nodes)

    def position(self, node_id: str) -> int:
        return self._order[node_id]

    def ordered(self, ids: Iterable[str]) -> Tuple[str, ...]:
        """Ids in graph insertion order."""
        return tuple(sorted(ids, key=self._order.__getitem__))

    def parents(self, node_id: str) -> Tuple[str, ...]:
        self.node(node_id)
        return self.ordered(self._graph.predecessors(node_id))

    def children(self, node_id: str) -> Tuple[str, ...]:
        self.node(node_id)
        return self.ordered(self._graph.successors(node_id))

    def has_edge(self, parent: str, child: str) -> bool:
        return self._graph.has_edge(parent, child)

    def adjacent(self, a: str, b: str) -> bool:
        return self._graph.has_edge(a, b) or self._graph.has_edge(b, a)

    def descendants(self, node_id: str) -> FrozenSet[str]:
        self.node(node_id)
        return frozenset(nx.descendants(self._graph, node_id))

    def topological_order(self) -> Tuple[str, ...]:
        """Deterministic topological order, ties broken by insertion order."""
        return tuple(nx.lexicographical_topological_sort(self._graph, key=self._order.__getitem__))

    def of_kind(self, kind: NodeKind) -> Tuple[str, ...]:
        return tuple(node.id for node in self._nodes if node.kind is kind)

    @property
    def domain_nodes(self) -> Tuple[str, ...]:
        return self.of_kind(NodeKind.DOMAIN)

    @property
    def regime_nodes(self) -> Tuple[str, ...]:
        return self.of_kind(NodeKind.REGIME)

    @property
    def error_nodes(self) -> Tuple[str, ...]:
        return self.of_kind(NodeKind.ERROR)

    @property
    def stochastic_nodes(self) -> Tuple[str, ...]:
        return tuple(node.id for node in self._nodes if not node.is_regime)

    def regime_for(self, target: str) -> Optional[str]:
        """The regime indicator attached to `target`, if any."""
        for parent in self.parents(target):
            if self._index[parent].is_regime:
                return parent
        return None

    def cardinality(self, node_id: str) -> int:
        return self.node(node_id).cardinality

    def subgraph(self, keep: Iterable[str]) -> "Dag":
        keep = set(keep)
        nodes = [node for node in self._nodes if node.id in keep]
        edges = [(u, v) for u, v in self._graph.edges() if u in keep and v in keep]
        return Dag(nodes, edges, partial=True)

    def with_additions(self, nodes: Sequence[Node], edges: Sequence[Edge]) -> "Dag":
        return Dag(self._nodes + tuple(nodes), list(self._graph.edges()) + list(edges), partial=self._partial)

    @property
    def nx_view(self) -> nx.DiGraph:
        """The frozen internal graph (read-only)."""
        return self._graph

    # -- identity ----------------------------------------------------------

    def _key(self):
        return frozenset(self._nodes), self.edges

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        arrows = ", ".join(f"{u}->{v}" for u, v in self.sorted_edges())
        return f"Dag({len(self._nodes)} nodes: {arrows or 'no edges'})"


@dataclass(frozen=True)
class CiQuery:
    """The conditional independence statement (x ⫫ y | z)."""
    x: FrozenSet[str]
    y: FrozenSet[str]
    z: FrozenSet[str] = frozenset()

    @classmethod
    def of(cls, x: NodeSet, y: NodeSet, z: Optional[NodeSet] = None) -> "CiQuery":
        return cls(as_node_set(x), as_node_set(y), as_node_set(z))

    @property
    def mentioned(self) -> FrozenSet[str]:
        return self.x | self.y | self.z

    def validate(self, g: Dag) -> "CiQuery":
        if not self.x or not self.y:
            raise QueryError(f"query {self}: both independence arguments must be non-empty")
        for a, b, label in ((self.x, self.y, "x/y"), (self.x, self.z, "x/z"), (self.y, self.z, "y/z")):
            overlap = a & b
            if overlap:
                raise QueryError(f"query {self}: {label} overlap on {', '.join(sorted(overlap))}")
        unknown = sorted(n for n in self.mentioned if n not in g)
        if unknown:
            raise QueryError(f"query {self}: unknown node(s) {', '.join(unknown)}")
        return self

    def canonical(self) -> "CiQuery":
        """Symmetric form: (x, y) ordered lexicographically."""
        if sorted(self.y) < sorted(self.x):
            return type(self)(self.y, self.x, self.z)
        return self

    def __str__(self) -> str:
        text = f"{','.join(sorted(self.x))} _||_ {','.join(sorted(self.y))}"
        if self.z:
            text += f" | {','.join(sorted(self.z))}"
        return text


@dataclass(frozen=True)
class UndirectedGraph:
    nodes: FrozenSet[str]
    edges: FrozenSet[FrozenSet[str]]

    def __post_init__(self):
        for edge in self.edges:
            if len(edge) != 2 or not edge <= self.nodes:
                raise GraphStructureError(f"edge {set(edge)} must join two member nodes")

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "UndirectedGraph":
        return cls(frozenset(graph.nodes()), frozenset(frozenset(e) for e in graph.edges()))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(tuple(e) for e in self.edges)
        return graph

    def has_edge(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.edges

    def serialize(self) -> str:
        """Deterministic text: the sorted node line, then one sorted `a -- b` line per edge."""
        lines = ["nodes: " + " ".join(sorted(self.nodes))]
        lines += sorted(" -- ".join(sorted(edge)) for edge in self.edges)
        return "\n".join(lines) + "\n"


def _check_members(g: Dag, s: Iterable[str]) -> FrozenSet[str]:
    s = as_node_set(s)
    unknown = sorted(n for n in s if n not in g)
    if unknown:
        raise QueryError(f"unknown node(s) {', '.join(unknown)}")
    return s


def ancestors(g: Dag, s: NodeSet) -> FrozenSet[str]:
    """`s` together with every node having a directed path into `s`."""
    s = _check_members(g, s)
    result = set(s)
    for node_id in s:
        result |= nx.ancestors(g.nx_view, node_id)
    return frozenset(result)


def ancestral_subgraph(g: Dag, q: CiQuery) -> Dag:
    q.validate(g)
    return g.subgraph(ancestors(g, q.mentioned))


def moralise(g: Dag) -> UndirectedGraph:
    """Marry co-parents of every common child, then drop arrowheads."""
    moral = nx.Graph(g.nx_view.to_undirected(as_view=True))
    for node_id in g.ids:
        moral.add_edges_from(itertools.combinations(g.nx_view.predecessors(node_id), 2))
    return UndirectedGraph.from_networkx(moral)


def _separation_sets(g: UndirectedGraph, x, y, z):
    x, y, z = as_node_set(x), as_node_set(y), as_node_set(z)
    if not x or not y:
        raise QueryError("separation needs non-empty x and y")
    for a, b in ((x, y), (x, z), (y, z)):
        if a & b:
            raise QueryError(f"separation sets overlap on {', '.join(sorted(a & b))}")
    unknown = sorted((x | y | z) - g.nodes)
    if unknown:
        raise QueryError(f"unknown node(s) {', '.join(unknown)}")
    return x, y, z


def u_separated(g: UndirectedGraph, x: NodeSet, y: NodeSet, z: NodeSet = ()) -> bool:
    """True iff x and y fall in different components of g once z is deleted."""
    return connecting_path(g, x, y, z) is None


def connecting_path(g: UndirectedGraph, x: NodeSet, y: NodeSet, z: NodeSet = ()) -> Optional[Tuple[str, ...]]:
    """A shortest path from x to y avoiding z, or None when z separates them."""
    x, y, z = _separation_sets(g, x, y, z)
    graph = g.to_networkx()
    graph.remove_nodes_from(z)
    for component in nx.connected_components(graph):
        sources = sorted(component & x)
        targets = component & y
        if sources and targets:
            lengths, paths = nx.multi_source_dijkstra(graph, set(sources))
            best = min(sorted(targets), key=lambda t: lengths[t])
            return tuple(paths[best])
    return None


def skeleton(g: Dag) -> UndirectedGraph:
    return UndirectedGraph(frozenset(g.ids), frozenset(frozenset(e) for e in g.edges))


def immoralities(g: Dag) -> FrozenSet[Immorality]:
    """Triples (a, c, b) with a -> c <- b and a, b non-adjacent; the pair is stored as a < b."""
    found = set()
    for child in g.ids:
        for a, b in itertools.combinations(sorted(g.nx_view.predecessors(child)), 2):
            if not g.adjacent(a, b):
                found.add((a, child, b))
    return frozenset(found)


def serialize_immoralities(found: Iterable[Immorality]) -> str:
    return "".join(f"{a} -> {c} <- {b}\n" for a, c, b in sorted(found))
