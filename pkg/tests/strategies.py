"""Hypothesis strategies and exhaustive generators for DAG tests."""
import itertools
from typing import Iterator

import networkx as nx
from hypothesis import strategies as st

from cde.generators import node_names
from cde.graph_core import CiQuery, Dag, Node


@st.composite
def dags(draw, min_nodes: int = 1, max_nodes: int = 6, states=st.just(2)) -> Dag:
    """A random DAG: edges follow a drawn permutation, so acyclicity holds by construction."""
    n = draw(st.integers(min_value=min_nodes, max_value=max_nodes))
    names = node_names(n)
    order = draw(st.permutations(names))
    nodes = [Node.domain(name, draw(states)) for name in names]
    edges = []
    for i, j in itertools.combinations(range(n), 2):
        if draw(st.booleans()):
            edges.append((order[i], order[j]))
    return Dag(nodes, edges)


@st.composite
def dag_and_query(draw, min_nodes: int = 2, max_nodes: int = 6):
    """A DAG together with a valid query over its nodes."""
    g = draw(dags(min_nodes=max(min_nodes, 2), max_nodes=max_nodes))
    labels = draw(st.lists(st.sampled_from([0, 1, 2, 3]), min_size=len(g), max_size=len(g)))
    ids = list(g.ids)
    labels[0], labels[1] = 1, 2
    x = frozenset(n for n, lab in zip(ids, labels) if lab == 1)
    y = frozenset(n for n, lab in zip(ids, labels) if lab == 2)
    z = frozenset(n for n, lab in zip(ids, labels) if lab == 3)
    return g, CiQuery(x, y, z)


def all_dags(n: int) -> Iterator[Dag]:
    """Every labelled DAG on n nodes (each pair: absent, forward or backward)."""
    names = node_names(n)
    pairs = list(itertools.combinations(names, 2))
    nodes = [Node.domain(name) for name in names]
    for choice in itertools.product(range(3), repeat=len(pairs)):
        edges = [(a, b) if c == 1 else (b, a) for (a, b), c in zip(pairs, choice) if c]
        if nx.is_directed_acyclic_graph(nx.DiGraph(edges)):
            yield Dag(nodes, edges)
