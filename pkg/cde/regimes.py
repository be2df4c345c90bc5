"""
Augmented DAGs: regime indicators, extended conditional independence (ECI),
ignorability checks, Pearlian augmentation and interventional distributions.

A regime indicator F_V has the values of V plus `idle`; F_V = v is the
surgical intervention setting V to v, F_V = idle the observational regime.
Regime nodes are non-stochastic: they never appear in a JointTable, joints are
always computed per RegimeAssignment.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .bayes_net import BayesNet, Cpt, Factor, JointTable, ci_deviation, contract, validate_cpts
from .ci_engine import CiVerdict, query_ci_moral
from .errors import GraphStructureError, QueryError
from .graph_core import CiQuery, Dag, Node, NodeSet, as_node_set
from .utils import POSITIVE_TOL, PROB_TOL, check_capacity, state_space_size

logger = logging.getLogger(__name__)

IDLE = "idle"
RegimeValue = Union[int, str]


def regime_name(target: str) -> str:
    return f"F_{target}"


class RegimeAssignment(Mapping[str, RegimeValue]):
    """Every regime node of a graph mapped to `idle` or a state of its target."""

    def __init__(self, g: Dag, values: Mapping[str, RegimeValue]):
        regimes = set(g.regime_nodes)
        unknown = sorted(set(values) - regimes)
        if unknown:
            raise QueryError(f"not regime node(s): {', '.join(unknown)}")
        missing = sorted(regimes - set(values))
        if missing:
            raise QueryError(f"regime assignment misses {', '.join(missing)}")
        clean: Dict[str, RegimeValue] = {}
        for regime, value in values.items():
            node = g.node(regime)
            if value == IDLE or value == node.idle_state:
                clean[regime] = IDLE
            elif isinstance(value, (int, np.integer)) and 0 <= value < node.cardinality - 1:
                clean[regime] = int(value)
            else:
                raise QueryError(f"{regime}={value!r}: expected 'idle' or a state of {node.target}")
        self._values = {r: clean[r] for r in g.regime_nodes}
        self._targets = {r: g.node(r).target for r in g.regime_nodes}

    @classmethod
    def build(cls, g: Dag, settings: Optional[Mapping[str, RegimeValue]] = None) -> "RegimeAssignment":
        """Unmentioned regimes are idle."""
        values: Dict[str, RegimeValue] = {r: IDLE for r in g.regime_nodes}
        values.update(settings or {})
        return cls(g, values)

    @classmethod
    def idle(cls, g: Dag) -> "RegimeAssignment":
        return cls.build(g)

    def __getitem__(self, regime: str) -> RegimeValue:
        return self._values[regime]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def state(self, regime: str, g: Dag) -> int:
        """The value as a state index of the regime node (idle is the last state)."""
        value = self._values[regime]
        return g.node(regime).idle_state if value == IDLE else value

    def interventions(self) -> Dict[str, int]:
        """target -> set value, for the non-idle regimes."""
        return {self._targets[r]: v for r, v in self._values.items() if v != IDLE}

    def __repr__(self) -> str:
        return "RegimeAssignment(" + ", ".join(f"{r}={v}" for r, v in self._values.items()) + ")"


def all_assignments(g: Dag) -> Iterator[RegimeAssignment]:
    """Every regime assignment of g (product over regime states)."""
    regimes = g.regime_nodes
    choices = [list(range(g.node(r).cardinality - 1)) + [IDLE] for r in regimes]
    for combo in itertools.product(*choices):
        yield RegimeAssignment(g, dict(zip(regimes, combo)))


@dataclass(frozen=True)
class EciQuery(CiQuery):
    """A CiQuery whose first argument is fully stochastic."""

    def validate(self, g: Dag) -> "EciQuery":
        super().validate(g)
        regimes = sorted(n for n in self.x if g.node(n).is_regime)
        if regimes:
            raise GraphStructureError(
                f"query {self}: first argument must be fully stochastic, found regime node(s) {', '.join(regimes)}"
            )
        return self

    def canonical(self) -> "EciQuery":
        # no symmetry: only x is restricted to stochastic nodes
        return self


def query_eci(g: Dag, q: EciQuery) -> CiVerdict:
    """ECI by the same moralisation criterion as plain CI."""
    if not isinstance(q, EciQuery):
        q = EciQuery(q.x, q.y, q.z)
    q.validate(g)
    return query_ci_moral(g, q)


def augment(g: Dag, targets: NodeSet) -> Dag:
    """Add F_V -> V for every target V."""
    targets = as_node_set(targets)
    added: List[Node] = []
    edges = []
    for target in g.ordered(_known(g, targets)):
        node = g.node(target)
        if node.is_exogenous:
            raise GraphStructureError(f"cannot attach a regime to {node.kind.value} node '{target}'")
        if g.regime_for(target) is not None:
            raise GraphStructureError(f"'{target}' already has regime '{g.regime_for(target)}'")
        name = regime_name(target)
        if name in g:
            raise GraphStructureError(f"cannot add regime '{name}': id already taken")
        added.append(Node.regime(name, node))
        edges.append((name, target))
    if not added:
        return g
    logger.debug("augmenting with %s", ", ".join(n.id for n in added))
    return g.with_additions(added, edges)


def _known(g: Dag, ids: Iterable[str]) -> List[str]:
    for node_id in ids:
        g.node(node_id)
    return list(ids)


def pearl_augment(g: Dag) -> Dag:
    """One regime indicator per domain variable."""
    if g.regime_nodes:
        raise GraphStructureError("graph is already augmented (has regime nodes)")
    return augment(g, g.domain_nodes)


def _regime_of(g: Dag, cause: str) -> str:
    g.node(cause)
    regime = g.regime_for(cause)
    if regime is None:
        raise GraphStructureError(f"'{cause}' has no regime indicator")
    return regime


def check_ignorability(g: Dag, cause: str, effect: NodeSet) -> bool:
    """(effect ⫫ F_cause | cause)."""
    regime = _regime_of(g, cause)
    return query_eci(g, EciQuery.of(effect, regime, cause)).represented


def no_causal_effect(g: Dag, cause: str, effect: NodeSet) -> bool:
    """(effect ⫫ F_cause): the law of effect is the same in every regime of cause."""
    regime = _regime_of(g, cause)
    return query_eci(g, EciQuery.of(effect, regime)).represented


class AugmentedBayesNet:
    """
    A BayesNet whose graph carries regime indicators.

    Every Domain node V with a regime F_V has F_V as the first formal parent of
    its CPT: rows with F_V = idle repeat the observational CPT, rows with
    F_V = v are point masses at v.
    """

    def __init__(self, dag: Dag, cpts: Iterable[Cpt]):
        self.dag = dag
        self.cpts: Dict[str, Cpt] = {c.node: c for c in cpts}
        validate_cpts(dag, self.cpts, dag.stochastic_nodes)
        for regime in dag.regime_nodes:
            target = dag.node(regime).target
            cpt = self.cpts[target]
            if cpt.parent_order[:1] != (regime,):
                raise GraphStructureError(f"cpt {target}: regime '{regime}' must be the first parent")
            blocks = cpt.table.reshape(dag.cardinality(regime), -1, dag.cardinality(target))
            for value in range(dag.cardinality(target)):
                if not np.allclose(blocks[value], np.eye(dag.cardinality(target))[value], atol=PROB_TOL):
                    raise GraphStructureError(f"cpt {target}: rows for {regime}={value} must be point masses at {value}")

    @classmethod
    def from_bayes_net(cls, bn: BayesNet, targets: NodeSet) -> "AugmentedBayesNet":
        dag = augment(bn.dag, targets)
        cpts = []
        for node_id in bn.dag.ids:
            cpt = bn.cpts[node_id]
            regime = dag.regime_for(node_id)
            if regime is None:
                cpts.append(cpt)
                continue
            k = dag.cardinality(node_id)
            rows = cpt.table.shape[0]
            blocks = [np.tile(np.eye(k)[v], (rows, 1)) for v in range(k)] + [cpt.table]
            cpts.append(Cpt(node_id, (regime,) + cpt.parent_order, np.vstack(blocks)))
        return cls(dag, cpts)

    def observational_cpt(self, node_id: str) -> Cpt:
        """The idle-regime CPT (regime parent dropped)."""
        cpt = self.cpts[node_id]
        regime = self.dag.regime_for(node_id)
        if regime is None:
            return cpt
        blocks = cpt.table.reshape(self.dag.cardinality(regime), -1, self.dag.cardinality(node_id))
        return Cpt(node_id, cpt.parent_order[1:], blocks[-1])

    def observational_net(self) -> BayesNet:
        stochastic = self.dag.subgraph(self.dag.stochastic_nodes)
        plain = Dag(stochastic.nodes, stochastic.edges)
        return BayesNet(plain, [self.observational_cpt(n) for n in plain.ids])

    def __repr__(self) -> str:
        return f"AugmentedBayesNet({self.dag!r})"


def _stochastic_order(abn: AugmentedBayesNet) -> Tuple[str, ...]:
    order = abn.dag.stochastic_nodes
    check_capacity(state_space_size(abn.dag.cardinality(v) for v in order), "interventional joint")
    return order


def interventional_joint(abn: AugmentedBayesNet, r: RegimeAssignment) -> JointTable:
    """Truncated factorisation: intervened nodes contribute point masses, idle nodes their observational CPT."""
    dag = abn.dag
    order = _stochastic_order(abn)
    set_values = r.interventions()
    factors: List[Factor] = []
    for node_id in order:
        k = dag.cardinality(node_id)
        if node_id in set_values:
            factors.append(((node_id,), np.eye(k)[set_values[node_id]]))
            continue
        cpt = abn.observational_cpt(node_id)
        factors.append((cpt.parent_order + (node_id,), cpt.factor([dag.cardinality(p) for p in cpt.parent_order])))
    return JointTable(order, contract(factors, order))


def sliced_joint(abn: AugmentedBayesNet, r: RegimeAssignment) -> JointTable:
    """The augmented net as a plain BN, every regime node fixed at its assigned state."""
    dag = abn.dag
    order = _stochastic_order(abn)
    factors: List[Factor] = []
    for node_id in order:
        cpt = abn.cpts[node_id]
        array = cpt.factor([dag.cardinality(p) for p in cpt.parent_order])
        index = tuple(r.state(p, dag) if dag.node(p).is_regime else slice(None) for p in cpt.parent_order)
        kept = tuple(p for p in cpt.parent_order if not dag.node(p).is_regime)
        factors.append((kept + (node_id,), array[index]))
    return JointTable(order, contract(factors, order))


def eci_holds_in_distribution(abn: AugmentedBayesNet, q: EciQuery, tol: float = PROB_TOL) -> bool:
    """
    Numerical ECI check across every regime assignment.

    Stochastic parts must satisfy (x ⫫ y_s | z_s) in each regime; regime nodes
    in y must leave p(x | z_s) unchanged across their values with all other
    regimes held fixed. Regime nodes in z are fixed in turn by the enumeration.
    """
    dag = abn.dag
    if not isinstance(q, EciQuery):
        q = EciQuery(q.x, q.y, q.z)
    q.validate(dag)
    y_regimes = tuple(n for n in dag.regime_nodes if n in q.y)
    y_stochastic = frozenset(n for n in q.y if not dag.node(n).is_regime)
    z_stochastic = frozenset(n for n in q.z if not dag.node(n).is_regime)
    conditionals: Dict[Tuple, List[np.ndarray]] = {}
    for r in all_assignments(dag):
        table = interventional_joint(abn, r)
        if y_stochastic and ci_deviation(table, CiQuery(q.x, y_stochastic, z_stochastic)) > tol:
            logger.debug("ECI %s fails within regime %r", q, r)
            return False
        if y_regimes:
            context = tuple((k, v) for k, v in r.items() if k not in y_regimes)
            conditionals.setdefault(context, []).append(_conditional_of(table, q.x, z_stochastic))
    for group in conditionals.values():
        for (pa, ma), (pb, mb) in itertools.combinations(group, 2):
            both = ma & mb
            if np.any(both) and np.max(np.abs(pa[:, both] - pb[:, both])) > tol:
                return False
    return True


def _conditional_of(table: JointTable, x, z) -> Tuple[np.ndarray, np.ndarray]:
    """p(x | z) as an (x-states, z-states) array plus the mask of z-states with positive mass."""
    xs = tuple(v for v in table.variable_order if v in x)
    zs = tuple(v for v in table.variable_order if v in z)
    sub = table.marginalize(xs + zs).reorder(xs + zs)
    n_x = state_space_size(sub.cardinalities[:len(xs)])
    p = sub.probabilities.reshape(n_x, -1)
    pz = p.sum(axis=0)
    live = pz > POSITIVE_TOL
    cond = np.zeros_like(p)
    cond[:, live] = p[:, live] / pz[live]
    return cond, live
