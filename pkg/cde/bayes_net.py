"""
Discrete Bayesian networks: CPTs, exact joints, variable elimination and a
numerical conditional-independence oracle.

Tables are dense numpy arrays. A factor is a pair (variables, array) with one
axis per variable; products are computed with numpy.einsum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConditioningError, GraphStructureError, ProbabilityError, QueryError
from .graph_core import CiQuery, Dag, NodeSet, as_node_set
from .utils import POSITIVE_TOL, PROB_TOL, check_capacity, state_space_size

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Cpt:
    """
    p(node | parents). `table` has one row per joint parent state, row-major in
    `parent_order` (last parent fastest), and one column per node state.
    """
    node: str
    parent_order: Tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim == 1:
            table = table.reshape(1, -1)
        if table.ndim != 2:
            raise ProbabilityError(f"cpt {self.node}: table must be two-dimensional")
        if np.any(table < 0):
            raise ProbabilityError(f"cpt {self.node}: negative probability")
        sums = table.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise ProbabilityError(f"cpt {self.node}: row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        table.setflags(write=False)
        object.__setattr__(self, "parent_order", tuple(self.parent_order))
        object.__setattr__(self, "table", table)

    @property
    def cardinality(self) -> int:
        return self.table.shape[1]

    def factor(self, parent_cards: Sequence[int]) -> np.ndarray:
        """The table as an array with axes (*parent_order, node)."""
        return self.table.reshape(tuple(parent_cards) + (self.cardinality,))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cpt):
            return NotImplemented
        return (self.node, self.parent_order) == (other.node, other.parent_order) and np.array_equal(self.table, other.table)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class JointTable:
    """A distribution over `variable_order`; `probabilities` has one axis per variable."""
    variable_order: Tuple[str, ...]
    probabilities: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float)
        if probs.ndim != len(self.variable_order):
            raise ProbabilityError("joint table needs one axis per variable")
        if self.check:
            if np.any(probs < -POSITIVE_TOL):
                raise ProbabilityError("joint table has negative entries")
            total = probs.sum()
            if abs(total - 1.0) > PROB_TOL:
                raise ProbabilityError(f"joint table sums to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "variable_order", tuple(self.variable_order))
        object.__setattr__(self, "probabilities", probs)

    @property
    def cardinalities(self) -> Tuple[int, ...]:
        return self.probabilities.shape

    @property
    def vector(self) -> np.ndarray:
        """Dense row-major vector over the full state space."""
        return self.probabilities.reshape(-1)

    def axis(self, var: str) -> int:
        try:
            return self.variable_order.index(var)
        except ValueError:
            raise QueryError(f"variable '{var}' is not in the table") from None

    def prob(self, assignment: Mapping[str, int]) -> float:
        """Probability of a (possibly partial) assignment."""
        sub = self.marginalize(assignment.keys())
        return float(sub.probabilities[tuple(assignment[v] for v in sub.variable_order)])

    def marginalize(self, keep: Iterable[str]) -> "JointTable":
        """Sum out every variable not in `keep`; the result keeps table order."""
        keep = set(keep)
        for var in keep:
            self.axis(var)
        drop = tuple(i for i, v in enumerate(self.variable_order) if v not in keep)
        order = tuple(v for v in self.variable_order if v in keep)
        return JointTable(order, self.probabilities.sum(axis=drop), check=False)

    def reorder(self, order: Sequence[str]) -> "JointTable":
        if sorted(order) != sorted(self.variable_order):
            raise QueryError("reorder needs a permutation of the table's variables")
        axes = [self.axis(v) for v in order]
        return JointTable(tuple(order), np.transpose(self.probabilities, axes), check=False)

    def slice(self, assignment: Mapping[str, int]) -> np.ndarray:
        """Unnormalised sub-array with the assigned variables fixed."""
        index = tuple(assignment.get(v, slice(None)) for v in self.variable_order)
        return self.probabilities[index]

    def allclose(self, other: "JointTable", atol: float = PROB_TOL) -> bool:
        if set(self.variable_order) != set(other.variable_order):
            return False
        other = other.reorder(self.variable_order)
        return self.cardinalities == other.cardinalities and bool(
            np.allclose(self.probabilities, other.probabilities, rtol=0.0, atol=atol)
        )

    def cells(self) -> Iterable[Tuple[Tuple[int, ...], float]]:
        """(state tuple, probability) pairs in row-major order."""
        for index in np.ndindex(*self.cardinalities):
            yield index, float(self.probabilities[index])

    def to_dict(self) -> dict:
        return {
            "variable_order": list(self.variable_order),
            "cardinalities": list(self.cardinalities),
            "probabilities": self.vector.tolist(),
        }


class BayesNet:
    """A Dag over Domain and Error nodes with one Cpt per node."""

    def __init__(self, dag: Dag, cpts: Iterable[Cpt]):
        if dag.regime_nodes:
            raise GraphStructureError("a BayesNet has no regime nodes; use AugmentedBayesNet")
        self.dag = dag
        self.cpts: Dict[str, Cpt] = {}
        for cpt in cpts:
            if cpt.node in self.cpts:
                raise GraphStructureError(f"duplicate cpt for '{cpt.node}'")
            self.cpts[cpt.node] = cpt
        validate_cpts(dag, self.cpts, dag.ids)

    def cpt(self, node_id: str) -> Cpt:
        return self.cpts[self.dag.node(node_id).id]

    def factors(self) -> List[Tuple[Tuple[str, ...], np.ndarray]]:
        out = []
        for node_id in self.dag.ids:
            cpt = self.cpts[node_id]
            cards = [self.dag.cardinality(p) for p in cpt.parent_order]
            out.append((cpt.parent_order + (node_id,), cpt.factor(cards)))
        return out

    def __repr__(self) -> str:
        return f"BayesNet({self.dag!r})"


def validate_cpts(dag: Dag, cpts: Mapping[str, Cpt], nodes: Iterable[str], skip_parents: Iterable[str] = ()) -> None:
    """Each listed node has a CPT whose parents are exactly its graph parents and whose shape fits."""
    skip = set(skip_parents)
    for node_id in nodes:
        cpt = cpts.get(node_id)
        if cpt is None:
            raise GraphStructureError(f"missing cpt for '{node_id}'")
        parents = set(dag.parents(node_id)) - skip
        if set(cpt.parent_order) != parents or len(cpt.parent_order) != len(parents):
            raise GraphStructureError(
                f"cpt {node_id}: parents ({', '.join(cpt.parent_order)}) differ from graph parents "
                f"({', '.join(dag.ordered(parents))})"
            )
        rows = state_space_size(dag.cardinality(p) for p in cpt.parent_order)
        if cpt.table.shape != (rows, dag.cardinality(node_id)):
            raise GraphStructureError(
                f"cpt {node_id}: expected {rows} rows of {dag.cardinality(node_id)} probabilities, got shape {cpt.table.shape}"
            )
    extra = set(cpts) - set(nodes)
    if extra:
        raise GraphStructureError(f"cpt given for node(s) without one: {', '.join(sorted(extra))}")


Factor = Tuple[Tuple[str, ...], np.ndarray]


def contract(factors: Sequence[Factor], output: Sequence[str]) -> np.ndarray:
    """Product of factors summed down to `output` axes (einsum with integer subscripts)."""
    symbols: Dict[str, int] = {}
    for variables, _ in factors:
        for var in variables:
            symbols.setdefault(var, len(symbols))
    for var in output:
        symbols.setdefault(var, len(symbols))
    operands: List = []
    for variables, array in factors:
        operands += [array, [symbols[v] for v in variables]]
    operands.append([symbols[v] for v in output])
    if not factors:
        return np.ones(())
    return np.einsum(*operands, optimize=len(factors) > 2)


def joint(bn: BayesNet) -> JointTable:
    """Brute-force joint: the product of all CPTs."""
    order = bn.dag.ids
    check_capacity(state_space_size(bn.dag.cardinality(v) for v in order), "joint table")
    return JointTable(order, contract(bn.factors(), order))


def elimination_order(dag: Dag, factors: Sequence[Factor], keep: Iterable[str]) -> List[str]:
    """Min-degree heuristic over the factor interaction graph; ties by node order."""
    keep = set(keep)
    neighbours: Dict[str, set] = {v: set() for v in dag.ids}
    for variables, _ in factors:
        for v in variables:
            neighbours.setdefault(v, set()).update(w for w in variables if w != v)
    remaining = [v for v in dag.ids if v not in keep]
    order = []
    while remaining:
        best = min(remaining, key=lambda v: (len(neighbours[v]), dag.position(v)))
        order.append(best)
        remaining.remove(best)
        around = neighbours.pop(best)
        for v in around:
            neighbours[v].discard(best)
            neighbours[v].update(w for w in around if w != v)
    return order


def eliminate(dag: Dag, factors: Sequence[Factor], keep: Iterable[str]) -> Factor:
    """Variable elimination down to `keep` (in graph order)."""
    keep = dag.ordered(set(keep))
    pool = list(factors)
    order = elimination_order(dag, pool, keep)
    logger.debug("eliminating %s keeping %s", order, keep)
    for var in order:
        touching = [f for f in pool if var in f[0]]
        if not touching:
            continue
        pool = [f for f in pool if var not in f[0]]
        scope = dag.ordered({v for variables, _ in touching for v in variables} - {var})
        check_capacity(state_space_size(dag.cardinality(v) for v in scope) * dag.cardinality(var), "intermediate factor")
        pool.append((scope, contract(touching, scope)))
    check_capacity(state_space_size(dag.cardinality(v) for v in keep), "marginal table")
    return keep, contract(pool, keep)


def marginal(bn: BayesNet, vars: NodeSet, *, method: str = "elimination") -> JointTable:
    """p(vars), by variable elimination (or brute force over the joint)."""
    target = as_node_set(vars)
    if not target:
        raise QueryError("marginal needs at least one variable")
    for v in target:
        bn.dag.node(v)
    if method == "brute":
        return joint(bn).marginalize(target)
    order, table = eliminate(bn.dag, bn.factors(), target)
    return JointTable(order, table)


def condition_table(table: JointTable, target: Iterable[str], given: Mapping[str, int], dag: Dag) -> JointTable:
    """p(target | given) from a table over target and given."""
    overlap = set(target) & set(given)
    if overlap:
        raise QueryError(f"target and evidence overlap on {', '.join(sorted(overlap))}")
    for var, state in given.items():
        if not 0 <= state < dag.cardinality(var):
            raise QueryError(f"state {state} is out of range for '{var}'")
    sliced = table.slice(given)
    order = tuple(v for v in table.variable_order if v not in given)
    mass = float(sliced.sum())
    if mass <= POSITIVE_TOL:
        event = ", ".join(f"{k}={v}" for k, v in sorted(given.items()))
        raise ConditioningError(f"conditioning event ({event}) has probability {mass!r}")
    return JointTable(order, sliced / mass).reorder(dag.ordered(target))


def conditional(bn: BayesNet, target: NodeSet, given: Mapping[str, int]) -> JointTable:
    """p(target | given), a renormalised slice."""
    target = as_node_set(target)
    table = marginal(bn, target | set(given))
    return condition_table(table, target, given, bn.dag)


def ci_deviation(table: JointTable, q: CiQuery) -> float:
    """
    max |p(x,y|z) - p(x|z) p(y|z)| over every z-slice with p(z) > 1e-12.
    """
    xs, ys, zs = (tuple(v for v in table.variable_order if v in s) for s in (q.x, q.y, q.z))
    sub = table.marginalize(q.mentioned).reorder(xs + ys + zs)
    cards = sub.cardinalities
    nx_, ny_ = state_space_size(cards[:len(xs)]), state_space_size(cards[len(xs):len(xs) + len(ys)])
    nz_ = state_space_size(cards[len(xs) + len(ys):])
    p = sub.probabilities.reshape(nx_, ny_, nz_)
    pz = p.sum(axis=(0, 1))
    live = pz > POSITIVE_TOL
    if not np.any(live):
        return 0.0
    p = p[:, :, live] / pz[live]
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    return float(np.max(np.abs(p - px * py)))


def holds_in_distribution(bn: BayesNet, q: CiQuery, tol: float = PROB_TOL) -> bool:
    """Numerical check of (x ⫫ y | z) in the network's distribution."""
    q.validate(bn.dag)
    table = marginal(bn, q.mentioned)
    return ci_deviation(table, q) <= tol


def recover_cpts(table: JointTable, dag: Dag) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """
    p(v | parents) read back from a joint, for every non-regime node.

    Returns node -> (table, defined) where `defined` flags the rows whose
    parent configuration has positive probability; other rows are NaN.
    """
    out = {}
    for node_id in dag.stochastic_nodes:
        parents = tuple(p for p in dag.parents(node_id) if not dag.node(p).is_regime)
        sub = table.marginalize(parents + (node_id,)).reorder(parents + (node_id,))
        rows = sub.probabilities.reshape(-1, dag.cardinality(node_id))
        mass = rows.sum(axis=1)
        defined = mass > POSITIVE_TOL
        cond = np.full(rows.shape, np.nan)
        cond[defined] = rows[defined] / mass[defined, None]
        out[node_id] = (cond, defined)
    return out
