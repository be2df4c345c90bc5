"""
Structural probabilistic / causal models.

Every Domain node is a deterministic function of its parents and exactly one
Error node; Error nodes are mutually independent finite-atom distributions.
Distributions are computed exactly by enumerating error configurations
(vectorised over the configuration grid with numpy).

The probability-integral-transform construction realises the Uniform[0, 1]
error of each node by atomising at the breakpoints of its conditional CDFs,
with the generalised inverse F^-1(e) = min{y : F(y) >= e}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import linprog

from .bayes_net import BayesNet, JointTable
from .errors import ConditioningError, ConsistencyError, GraphStructureError, ProbabilityError, QueryError, ScopeError
from .graph_core import Dag, Node, NodeKind, NodeSet
from .regimes import RegimeAssignment, augment
from .utils import POSITIVE_TOL, PROB_TOL, check_capacity, state_space_size

logger = logging.getLogger(__name__)


class Atom(NamedTuple):
    probability: float
    value: int


@dataclass(frozen=True)
class ErrorSpec:
    """
    Distribution of an Error node as atoms (probability, state index).

    `levels` optionally records, per state, the uniform quantile the state
    stands for (set by the probability-integral-transform construction).
    """
    node: str
    atoms: Tuple[Atom, ...]
    levels: Optional[Tuple[float, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        atoms = tuple(Atom(float(p), int(v)) for p, v in self.atoms)
        if any(a.probability < 0 for a in atoms):
            raise ProbabilityError(f"error distribution {self.node}: negative probability")
        total = sum(a.probability for a in atoms)
        if abs(total - 1.0) > PROB_TOL:
            raise ProbabilityError(f"error distribution {self.node}: probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_probabilities(cls, node: str, probabilities: Sequence[float], levels=None) -> "ErrorSpec":
        return cls(node, tuple(Atom(p, i) for i, p in enumerate(probabilities)), levels)

    def probabilities(self, cardinality: int) -> np.ndarray:
        out = np.zeros(cardinality)
        for atom in self.atoms:
            if not 0 <= atom.value < cardinality:
                raise GraphStructureError(f"error distribution {self.node}: state {atom.value} out of range")
            out[atom.value] += atom.probability
        return out


@dataclass(frozen=True, eq=False)
class StructuralFunction:
    """Deterministic node = f(parents); `table` maps each joint parent state (row-major) to a state."""
    node: str
    parent_order: Tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=np.int64).reshape(-1)
        table.setflags(write=False)
        object.__setattr__(self, "parent_order", tuple(self.parent_order))
        object.__setattr__(self, "table", table)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StructuralFunction):
            return NotImplemented
        return (self.node, self.parent_order) == (other.node, other.parent_order) and np.array_equal(self.table, other.table)

    __hash__ = None


class Scm:
    """
    A Dag over Domain + Error (+ optional Regime) nodes, one ErrorSpec per
    Error node and one StructuralFunction per Domain node. Regime parents are
    not arguments of a structural function: an active regime overrides it.
    """

    def __init__(self, dag: Dag, errors: Iterable[ErrorSpec], functions: Iterable[StructuralFunction]):
        self.dag = dag
        self.errors: Dict[str, ErrorSpec] = {e.node: e for e in errors}
        self.functions: Dict[str, StructuralFunction] = {f.node: f for f in functions}
        self._validate()

    def _validate(self) -> None:
        dag = self.dag
        if set(self.errors) != set(dag.error_nodes):
            raise GraphStructureError(
                "error distributions must be given for exactly the error nodes; mismatch on "
                + ", ".join(sorted(set(self.errors) ^ set(dag.error_nodes)))
            )
        if set(self.functions) != set(dag.domain_nodes):
            raise GraphStructureError(
                "structural functions must be given for exactly the domain nodes; mismatch on "
                + ", ".join(sorted(set(self.functions) ^ set(dag.domain_nodes)))
            )
        for node_id, spec in self.errors.items():
            spec.probabilities(dag.cardinality(node_id))
        for node_id in dag.domain_nodes:
            fn = self.functions[node_id]
            parents = [p for p in dag.parents(node_id) if not dag.node(p).is_regime]
            errors = [p for p in parents if dag.node(p).kind is NodeKind.ERROR]
            if len(errors) != 1:
                raise GraphStructureError(f"domain node '{node_id}' needs exactly one error parent, has {len(errors)}")
            if set(fn.parent_order) != set(parents) or len(fn.parent_order) != len(parents):
                raise GraphStructureError(f"function {node_id}: arguments differ from graph parents")
            if fn.parent_order[-1] != errors[0]:
                raise GraphStructureError(f"function {node_id}: the error parent '{errors[0]}' must come last")
            rows = state_space_size(dag.cardinality(p) for p in fn.parent_order)
            if fn.table.shape != (rows,):
                raise GraphStructureError(f"function {node_id}: expected {rows} outputs, got {fn.table.size}")
            if fn.table.size and (fn.table.min() < 0 or fn.table.max() >= dag.cardinality(node_id)):
                raise GraphStructureError(f"function {node_id}: output state out of range")

    def augment(self, targets: Optional[NodeSet] = None) -> "Scm":
        """Attach regime indicators (every domain node by default)."""
        dag = augment(self.dag, self.dag.domain_nodes if targets is None else targets)
        return Scm(dag, self.errors.values(), self.functions.values())

    def __repr__(self) -> str:
        return f"Scm({self.dag!r})"


class _ErrorGrid(NamedTuple):
    states: Dict[str, np.ndarray]  # error node -> state per configuration
    weights: np.ndarray


def _error_grid(s: Scm) -> _ErrorGrid:
    """All error configurations with positive probability, in a fixed order."""
    supports = []
    for node_id in s.dag.error_nodes:
        probs = s.errors[node_id].probabilities(s.dag.cardinality(node_id))
        states = np.flatnonzero(probs > 0)
        supports.append((node_id, states, probs[states]))
    check_capacity(state_space_size(len(st) for _, st, _ in supports), "error configurations")
    if not supports:
        return _ErrorGrid({}, np.ones(1))
    mesh = np.meshgrid(*[st for _, st, _ in supports], indexing="ij")
    wmesh = np.meshgrid(*[w for _, _, w in supports], indexing="ij")
    states = {node_id: m.reshape(-1) for (node_id, _, _), m in zip(supports, mesh)}
    weights = np.prod(np.stack([w.reshape(-1) for w in wmesh]), axis=0)
    logger.debug("enumerating %d error configurations", weights.size)
    return _ErrorGrid(states, weights)


def _evaluate(s: Scm, grid: _ErrorGrid, overrides: Mapping[str, int]) -> Dict[str, np.ndarray]:
    """Domain values for every error configuration, with `overrides` forced."""
    values: Dict[str, np.ndarray] = dict(grid.states)
    size = grid.weights.size
    for node_id in s.dag.topological_order():
        node = s.dag.node(node_id)
        if node.kind is not NodeKind.DOMAIN:
            continue
        if node_id in overrides:
            values[node_id] = np.full(size, overrides[node_id], dtype=np.int64)
            continue
        fn = s.functions[node_id]
        cards = [s.dag.cardinality(p) for p in fn.parent_order]
        index = np.ravel_multi_index([values[p] for p in fn.parent_order], cards) if cards else np.zeros(size, dtype=np.int64)
        values[node_id] = fn.table[index]
    return values


def _resolve_overrides(s: Scm, r) -> Dict[str, int]:
    if r is None:
        return {}
    if not isinstance(r, RegimeAssignment):
        r = RegimeAssignment.build(s.dag, r)
    return r.interventions()


def spm_joint(s: Scm, r: Optional[RegimeAssignment] = None) -> JointTable:
    """Law of the Domain nodes under regime assignment r (None: all idle)."""
    order = s.dag.domain_nodes
    cards = tuple(s.dag.cardinality(v) for v in order)
    check_capacity(state_space_size(cards), "structural joint")
    grid = _error_grid(s)
    values = _evaluate(s, grid, _resolve_overrides(s, r))
    flat = np.zeros(state_space_size(cards))
    index = np.ravel_multi_index([values[v] for v in order], cards) if order else np.zeros(grid.weights.size, dtype=np.int64)
    np.add.at(flat, index, grid.weights)
    return JointTable(order, flat.reshape(cards))


def _inverse_cdf_levels(rows: np.ndarray) -> np.ndarray:
    """Sorted distinct CDF breakpoints over all rows, ending at 1."""
    cdf = np.cumsum(rows, axis=1)
    cdf[:, -1] = 1.0
    points = np.sort(cdf.reshape(-1))
    levels: List[float] = []
    for point in points:
        if point <= POSITIVE_TOL:
            continue
        if not levels or point - levels[-1] > POSITIVE_TOL:
            levels.append(float(point))
    levels[-1] = 1.0
    return np.array(levels)


def _pit_node(dag: Dag, bn: BayesNet, node_id: str, error_id: str) -> Tuple[Node, ErrorSpec, StructuralFunction]:
    cpt = bn.cpts[node_id]
    levels = _inverse_cdf_levels(cpt.table)
    widths = np.diff(np.concatenate([[0.0], levels]))
    cdf = np.cumsum(cpt.table, axis=1)
    cdf[:, -1] = 1.0
    # state for (row, level): min{y : F_row(y) >= level}
    outputs = np.argmax(cdf[:, None, :] >= levels[None, :, None] - POSITIVE_TOL, axis=2)
    if len(levels) == 1:  # deterministic node: pad with a null atom
        widths = np.array([1.0, 0.0])
        levels = np.array([1.0, 1.0])
        outputs = np.repeat(outputs, 2, axis=1)
    error = Node.error(error_id, len(levels))
    spec = ErrorSpec.from_probabilities(error_id, widths, levels=tuple(levels))
    fn = StructuralFunction(node_id, cpt.parent_order + (error_id,), outputs.reshape(-1))
    return error, spec, fn


def _error_id(dag: Dag, node_id: str) -> str:
    error_id = f"E_{node_id}"
    if error_id in dag:
        raise GraphStructureError(f"cannot add error node '{error_id}': id already taken")
    return error_id


def _require_domain_net(bn: BayesNet) -> None:
    if bn.dag.error_nodes:
        raise GraphStructureError("structural construction expects a BayesNet over domain nodes only")


def build_spm(bn: BayesNet) -> Scm:
    """Probability-integral-transform SPM: one error node per domain node."""
    _require_domain_net(bn)
    dag = bn.dag
    error_nodes, specs, functions, edges = [], [], [], []
    for node_id in dag.ids:
        error, spec, fn = _pit_node(dag, bn, node_id, _error_id(dag, node_id))
        error_nodes.append(error)
        specs.append(spec)
        functions.append(fn)
        edges.append((error.id, node_id))
    return Scm(dag.with_additions(error_nodes, edges), specs, functions)


@dataclass(frozen=True, eq=False)
class Coupling:
    """
    Joint law of the potential responses (Y_row)_row of one node, one axis per
    joint parent state of its CPT (row-major order of the CPT).
    """
    node: str
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if np.any(table < 0) or abs(table.sum() - 1.0) > PROB_TOL:
            raise ProbabilityError(f"coupling for {self.node} is not a distribution")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def marginals(self) -> np.ndarray:
        axes = range(self.table.ndim)
        return np.stack([self.table.sum(axis=tuple(a for a in axes if a != i)) for i in axes])

    @classmethod
    def independent(cls, bn: BayesNet, node: str) -> "Coupling":
        rows = bn.cpt(node).table
        table = np.ones(())
        for row in rows:
            table = np.multiply.outer(table, row)
        return cls(node, table)

    @classmethod
    def comonotone(cls, bn: BayesNet, node: str) -> "Coupling":
        """All potential responses driven by one shared uniform (the PIT construction)."""
        rows = bn.cpt(node).table
        levels = _inverse_cdf_levels(rows)
        widths = np.diff(np.concatenate([[0.0], levels]))
        cdf = np.cumsum(rows, axis=1)
        cdf[:, -1] = 1.0
        table = np.zeros((rows.shape[1],) * rows.shape[0])
        for level, width in zip(levels, widths):
            cell = tuple(int(np.argmax(c >= level - POSITIVE_TOL)) for c in cdf)
            table[cell] += width
        return cls(node, table)


def build_spm_copula(bn: BayesNet, node: str, coupling: Coupling) -> Scm:
    """
    SPM whose error for `node` is the vector of its potential responses with
    the given dependence; the structural function is the look-up
    f(pa, e) = e[pa]. Other nodes use the PIT construction.
    """
    _require_domain_net(bn)
    rows = bn.cpt(node).table
    if coupling.table.shape != (rows.shape[1],) * rows.shape[0]:
        raise ConsistencyError(f"coupling for {node} needs {rows.shape[0]} axes of size {rows.shape[1]}")
    if not np.allclose(coupling.marginals(), rows, rtol=0.0, atol=PROB_TOL):
        raise ConsistencyError(f"coupling marginals do not match the CPT rows of {node}")
    base = build_spm(bn)
    error_id = f"E_{node}"
    cells = [cell for cell in np.ndindex(*coupling.table.shape) if coupling.table[cell] > 0]
    probs = [float(coupling.table[cell]) for cell in cells]
    if len(cells) == 1:
        cells.append(cells[0])
        probs.append(0.0)
    outputs = np.array([[cell[row] for cell in cells] for row in range(rows.shape[0])])
    nodes = [Node.error(error_id, len(cells)) if n.id == error_id else n for n in base.dag.nodes]
    dag = Dag(nodes, base.dag.edges)
    errors = [ErrorSpec.from_probabilities(error_id, probs) if e.node == error_id else e for e in base.errors.values()]
    fn = StructuralFunction(node, bn.cpt(node).parent_order + (error_id,), outputs.reshape(-1))
    functions = [fn if f.node == node else f for f in base.functions.values()]
    return Scm(dag, errors, functions)


@dataclass(frozen=True, eq=False)
class PotentialResponseJoint:
    """Joint law of (Y_x)_x; axis x is the potential response of `outcome` under cause := x."""
    cause: str
    outcome: str
    table: np.ndarray
    degenerate: bool = False

    def marginal(self, x: int) -> np.ndarray:
        return self.table.sum(axis=tuple(a for a in range(self.table.ndim) if a != x))


def _check_pair(s: Scm, cause: str, outcome: str) -> None:
    for node_id in (cause, outcome):
        if s.dag.node(node_id).kind is not NodeKind.DOMAIN:
            raise QueryError(f"'{node_id}' is not a domain node")
    if cause == outcome:
        raise QueryError("cause and outcome must differ")


def potential_response_joint(s: Scm, cause: str, outcome: str) -> PotentialResponseJoint:
    """Evaluate the outcome under cause := x for every x on one shared error draw."""
    _check_pair(s, cause, outcome)
    k_x, k_y = s.dag.cardinality(cause), s.dag.cardinality(outcome)
    check_capacity(k_y ** k_x, "potential-response table")
    grid = _error_grid(s)
    responses = [_evaluate(s, grid, {cause: x})[outcome] for x in range(k_x)]
    flat = np.zeros(k_y ** k_x)
    np.add.at(flat, np.ravel_multi_index(responses, (k_y,) * k_x), grid.weights)
    degenerate = outcome not in s.dag.descendants(cause)
    if degenerate:
        logger.warning("'%s' is not an ancestor of '%s': all potential responses coincide", cause, outcome)
    return PotentialResponseJoint(cause, outcome, flat.reshape((k_y,) * k_x), degenerate)


def probability_of_causation(s: Scm, cause: str, outcome: str) -> float:
    """PC = P(Y_0 = 0 | X = 1, Y_1 = 1), by enumeration over error configurations."""
    _check_pair(s, cause, outcome)
    if s.dag.cardinality(cause) != 2 or s.dag.cardinality(outcome) != 2:
        raise ScopeError("probability of causation is defined here for binary cause and outcome only")
    grid = _error_grid(s)
    x = _evaluate(s, grid, {})[cause]
    y0 = _evaluate(s, grid, {cause: 0})[outcome]
    y1 = _evaluate(s, grid, {cause: 1})[outcome]
    given = (x == 1) & (y1 == 1)
    denominator = float(grid.weights[given].sum())
    if denominator <= POSITIVE_TOL:
        raise ConditioningError(f"P({cause}=1, {outcome}_1=1) = {denominator!r}: probability of causation undefined")
    return float(grid.weights[given & (y0 == 0)].sum()) / denominator


class PcObservation(BaseModel):
    """Observed rates p(Y=1 | X=0) and p(Y=1 | X=1), read as potential-response marginals under ignorability."""
    model_config = ConfigDict(frozen=True)

    p0: float = Field(ge=0.0, le=1.0)
    p1: float = Field(gt=0.0, le=1.0)


class PcBounds(NamedTuple):
    lower: float
    upper: float
    lower_coupling: np.ndarray  # 2x2 law of (Y_0, Y_1) attaining the lower endpoint
    upper_coupling: np.ndarray


PC_ASSUMPTION = (
    "assumes ignorability: the law of each potential response Y_x equals the observed p(Y | X=x)"
)


def _binary_coupling(p0: float, p1: float, q: float) -> np.ndarray:
    """Law of (Y_0, Y_1) with P(Y_0=1)=p0, P(Y_1=1)=p1 and P(Y_0=0, Y_1=1)=q."""
    return np.array([[1.0 - p0 - q, q], [p0 - p1 + q, p1 - q]]).clip(min=0.0)


def pc_bounds(obs, *, method: str = "vertices") -> PcBounds:
    """
    Tight bounds on PC over every coupling of (Y_0, Y_1) with the observed marginals.

    PC = P(Y_0=0, Y_1=1) / P(Y_1=1) is linear in the coupling, so the extremes
    sit at extreme points of the Fréchet set. `method="linprog"` solves the
    same programme with scipy.
    """
    if not isinstance(obs, PcObservation):
        obs = PcObservation.model_validate(obs)
    p0, p1 = obs.p0, obs.p1
    if method == "vertices":
        candidates = [0.0, p1 - p0, 1.0 - p0, p1]
        feasible = [q for q in candidates if max(0.0, p1 - p0) - PROB_TOL <= q <= min(1.0 - p0, p1) + PROB_TOL]
        q_low, q_high = min(feasible), max(feasible)
    elif method == "linprog":
        q_low, q_high = _linprog_extremes(p0, p1)
    else:
        raise QueryError(f"unknown bounds method '{method}'")
    q_low = max(q_low, max(0.0, p1 - p0))
    q_high = min(q_high, min(1.0 - p0, p1))
    return PcBounds(q_low / p1, q_high / p1, _binary_coupling(p0, p1, q_low), _binary_coupling(p0, p1, q_high))


def _linprog_extremes(p0: float, p1: float) -> Tuple[float, float]:
    # cells (y0, y1) in order 00, 01, 10, 11
    a_eq = np.array([
        [0, 0, 1, 1],   # P(Y_0 = 1)
        [0, 1, 0, 1],   # P(Y_1 = 1)
        [1, 1, 1, 1],
    ], dtype=float)
    b_eq = np.array([p0, p1, 1.0])
    objective = np.array([0, 1, 0, 0], dtype=float)
    low = linprog(objective, A_eq=a_eq, b_eq=b_eq, bounds=[(0, 1)] * 4, method="highs")
    high = linprog(-objective, A_eq=a_eq, b_eq=b_eq, bounds=[(0, 1)] * 4, method="highs")
    if not (low.success and high.success):
        raise ConsistencyError(f"no coupling with marginals p0={p0}, p1={p1}")
    return float(low.x[1]), float(high.x[1])


def lookup_scm(p_x: float, coupling: np.ndarray) -> Scm:
    """
    The simple SCM X = f_X(E_X), Y = L_Y(X, (Y_0, Y_1)): the error of Y is the
    potential-response pair with law `coupling` (2x2, axes Y_0, Y_1), and X is
    exogenous with P(X=1) = p_x.
    """
    coupling = np.asarray(coupling, dtype=float)
    if coupling.shape != (2, 2):
        raise ScopeError("lookup_scm takes a 2x2 coupling of (Y_0, Y_1)")
    nodes = [Node.domain("X"), Node.domain("Y"), Node.error("E_X"), Node.error("E_Y", 4)]
    dag = Dag(nodes, [("E_X", "X"), ("X", "Y"), ("E_Y", "Y")])
    errors = [
        ErrorSpec.from_probabilities("E_X", [1.0 - p_x, p_x]),
        ErrorSpec.from_probabilities("E_Y", coupling.reshape(-1)),
    ]
    # E_Y state 2*y0 + y1; L_Y(x, (y0, y1)) = y_x
    table_y = [(e // 2) if x == 0 else (e % 2) for x in range(2) for e in range(4)]
    functions = [StructuralFunction("X", ("E_X",), [0, 1]), StructuralFunction("Y", ("X", "E_Y"), table_y)]
    return Scm(dag, errors, functions)
