"""Seeded random models for self-checks and the test-suite."""
from __future__ import annotations

import string
from typing import Optional, Sequence, Union

import numpy as np

from .bayes_net import BayesNet, Cpt
from .graph_core import Dag, Node
from .scm import Scm, lookup_scm
from .utils import state_space_size

Seed = Union[int, np.random.Generator, None]


def _rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def node_names(n: int) -> list:
    """A, B, ... Z, then V26, V27, ..."""
    return [string.ascii_uppercase[i] if i < 26 else f"V{i}" for i in range(n)]


def random_dag(seed: Seed, n: int, edge_prob: float = 0.5, states: Sequence[int] = (2,)) -> Dag:
    """Erdős–Rényi DAG: each pair is joined with `edge_prob`, oriented along a random permutation."""
    rng = _rng(seed)
    names = node_names(n)
    cards = rng.choice(np.asarray(states), size=n)
    order = rng.permutation(n)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((names[order[i]], names[order[j]]))
    return Dag([Node.domain(name, int(k)) for name, k in zip(names, cards)], edges)


def random_cpt(seed: Seed, dag: Dag, node_id: str, alpha: float = 1.0) -> Cpt:
    rng = _rng(seed)
    parents = dag.parents(node_id)
    rows = state_space_size(dag.cardinality(p) for p in parents)
    table = rng.dirichlet(np.full(dag.cardinality(node_id), alpha), size=rows)
    return Cpt(node_id, parents, table)


def random_bayes_net(seed: Seed, dag: Optional[Dag] = None, *, n: int = 4, edge_prob: float = 0.5,
                     states: Sequence[int] = (2,), alpha: float = 1.0) -> BayesNet:
    """Dirichlet(alpha) rows on the given DAG, or on a fresh random one."""
    rng = _rng(seed)
    if dag is None:
        dag = random_dag(rng, n, edge_prob, states)
    return BayesNet(dag, [random_cpt(rng, dag, node_id, alpha) for node_id in dag.ids])


def random_coupling(seed: Seed, shape: Sequence[int] = (2, 2), alpha: float = 1.0) -> np.ndarray:
    """A random joint law (Dirichlet over all cells)."""
    rng = _rng(seed)
    shape = tuple(shape)
    return rng.dirichlet(np.full(state_space_size(shape), alpha)).reshape(shape)


def random_lookup_scm(seed: Seed) -> Scm:
    """Binary look-up SCM with exogenous X and a random law of (Y_0, Y_1)."""
    rng = _rng(seed)
    return lookup_scm(float(rng.uniform(0.05, 0.95)), random_coupling(rng))
