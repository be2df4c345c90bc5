"""
Text format for graphs, Bayesian networks and structural models.

One declaration per line, `#` starts a comment:

    var <id> [states=<k>]
    error <id> [states=<k>]
    regime <id> targets <var-id>
    edge <from> -> <to>
    cpt <var> [| <p1,p2,...>] : <row-major probabilities>
    fn <var> [| <p1,p2,...>] : <row-major output states>
    errdist <err> : <q1,q2,...>

A regime declaration implies the edge to its target. A file yields the richest
structure its declarations support: Dag, BayesNet, AugmentedBayesNet or Scm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from lark import Lark, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from .bayes_net import BayesNet, Cpt
from .errors import CdeError, ParseError, QueryError, SemanticError
from .graph_core import CiQuery, Dag, Node, NodeKind
from .regimes import AugmentedBayesNet, EciQuery
from .scm import ErrorSpec, Scm, StructuralFunction
from .utils import state_space_size

logger = logging.getLogger(__name__)

Model = Union[Dag, BayesNet, AugmentedBayesNet, Scm]

GRAPH_GRAMMAR = r"""
start: (statement? _NL)* statement?

?statement: var_decl
          | error_decl
          | regime_decl
          | edge_decl
          | cpt_decl
          | fn_decl
          | errdist_decl

var_decl: "var" ID states?
error_decl: "error" ID states?
states: "states" "=" INT
regime_decl: "regime" ID "targets" ID
edge_decl: "edge" ID "->" ID
cpt_decl: "cpt" ID parents? ":" numbers
fn_decl: "fn" ID parents? ":" integers
errdist_decl: "errdist" ID ":" numbers
parents: "|" ID ("," ID)*
numbers: NUMBER ("," NUMBER)*
integers: INT ("," INT)*

ID: /[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /#[^\n]*/
_NL: /\r?\n/

%import common.INT
%import common.NUMBER
%ignore /[ \t\f]+/
%ignore COMMENT
"""

QUERY_GRAMMAR = r"""
start: ids _INDEP ids (_GIVEN ids)?
ids: ID ("," ID)*

_INDEP: "_||_" | "⫫"
_GIVEN: "|"
ID: /[A-Za-z_][A-Za-z0-9_]*/

%ignore /[ \t]+/
"""

_graph_parser = Lark(GRAPH_GRAMMAR, parser="lalr", propagate_positions=True, maybe_placeholders=False)
_query_parser = Lark(QUERY_GRAMMAR, parser="lalr")


def _syntax_error(exc: UnexpectedInput) -> ParseError:
    line = getattr(exc, "line", -1)
    line = line if line and line > 0 else None
    column = exc.column if line is not None else None
    if isinstance(exc, UnexpectedCharacters):
        message = f"unexpected character {exc.char!r}"
    elif isinstance(exc, UnexpectedEOF):
        message = "unexpected end of input"
    elif isinstance(exc, UnexpectedToken):
        token = exc.token
        message = "unexpected end of input" if token.type == "$END" else f"unexpected token {str(token)!r}"
    else:
        message = "syntax error"
    return ParseError(message, line, column)


def _semantic(tree: Tree, message: str) -> SemanticError:
    return SemanticError(f"line {tree.meta.line}: {message}")


@dataclass
class _Declarations:
    """Everything a file declares, with the line of each declaration."""
    nodes: Dict[str, Tuple[NodeKind, int, Optional[str], Tree]] = field(default_factory=dict)
    edges: List[Tuple[str, str, Tree]] = field(default_factory=list)
    cpts: Dict[str, Tuple[Tuple[str, ...], List[float], Tree]] = field(default_factory=dict)
    functions: Dict[str, Tuple[Tuple[str, ...], List[int], Tree]] = field(default_factory=dict)
    errdists: Dict[str, Tuple[List[float], Tree]] = field(default_factory=dict)

    def declare(self, tree: Tree, node_id: str, kind: NodeKind, states: int, target: Optional[str] = None) -> None:
        if node_id in self.nodes:
            raise _semantic(tree, f"duplicate node id '{node_id}' (first declared on line {self.nodes[node_id][3].meta.line})")
        if states < 2:
            raise _semantic(tree, f"node '{node_id}' must have at least 2 states")
        self.nodes[node_id] = (kind, states, target, tree)

    def require(self, tree: Tree, node_id: str) -> None:
        if node_id not in self.nodes:
            raise _semantic(tree, f"undeclared node '{node_id}'")


def _ids(tree: Optional[Tree]) -> Tuple[str, ...]:
    return tuple(str(t) for t in tree.children) if tree is not None else ()


def _collect(tree: Tree) -> _Declarations:
    decls = _Declarations()
    for stmt in tree.children:
        kind = stmt.data
        args = stmt.children
        if kind in ("var_decl", "error_decl"):
            states = int(args[1].children[0]) if len(args) > 1 else 2
            decls.declare(stmt, str(args[0]), NodeKind.DOMAIN if kind == "var_decl" else NodeKind.ERROR, states)
        elif kind == "regime_decl":
            decls.declare(stmt, str(args[0]), NodeKind.REGIME, 2, target=str(args[1]))
        elif kind == "edge_decl":
            decls.edges.append((str(args[0]), str(args[1]), stmt))
        elif kind in ("cpt_decl", "fn_decl"):
            node_id = str(args[0])
            parents = _ids(args[1]) if len(args) == 3 else ()
            values = args[-1].children
            other = decls.functions if kind == "cpt_decl" else decls.cpts
            if node_id in other:
                raise _semantic(stmt, f"node '{node_id}' has both a cpt and a fn declaration")
            target = decls.cpts if kind == "cpt_decl" else decls.functions
            if node_id in target:
                raise _semantic(stmt, f"duplicate {kind[:-5]} for '{node_id}'")
            if kind == "cpt_decl":
                target[node_id] = (parents, [float(v) for v in values], stmt)
            else:
                target[node_id] = (parents, [int(v) for v in values], stmt)
        elif kind == "errdist_decl":
            node_id = str(args[0])
            if node_id in decls.errdists:
                raise _semantic(stmt, f"duplicate errdist for '{node_id}'")
            decls.errdists[node_id] = ([float(v) for v in args[1].children], stmt)
    return decls


def _build_dag(decls: _Declarations) -> Dag:
    nodes: Dict[str, Node] = {}
    for node_id, (kind, states, target, tree) in decls.nodes.items():
        if kind is NodeKind.REGIME:
            continue
        nodes[node_id] = Node(node_id, kind, states)
    edges: List[Tuple[str, str]] = []
    for node_id, (kind, _, target, tree) in decls.nodes.items():
        if kind is not NodeKind.REGIME:
            continue
        if target not in nodes or nodes[target].kind is not NodeKind.DOMAIN:
            raise _semantic(tree, f"regime '{node_id}' must target a declared var, got '{target}'")
        nodes[node_id] = Node.regime(node_id, nodes[target])
        edges.append((node_id, target))
    for parent, child, tree in decls.edges:
        decls.require(tree, parent)
        decls.require(tree, child)
        if parent == child:
            raise _semantic(tree, f"self-loop on '{parent}'")
        if (parent, child) in edges:
            if nodes[parent].is_regime:
                continue
            raise _semantic(tree, f"duplicate edge {parent} -> {child}")
        edges.append((parent, child))
    ordered = [nodes[node_id] for node_id in decls.nodes]
    return Dag(ordered, edges)


def _check_parents(dag: Dag, node_id: str, parents: Tuple[str, ...], tree: Tree, *, skip_regime: bool) -> None:
    expected = set(dag.parents(node_id))
    given = set(parents)
    regime = dag.regime_for(node_id)
    if skip_regime and regime is not None and regime not in given:
        expected.discard(regime)
    if given != expected or len(parents) != len(given):
        raise _semantic(tree, f"'{node_id}' lists parents ({', '.join(parents)}) but the graph has ({', '.join(dag.parents(node_id))})")


def _table(dag: Dag, node_id: str, parents: Tuple[str, ...], values: List, tree: Tree, what: str) -> np.ndarray:
    rows = state_space_size(dag.cardinality(p) for p in parents)
    cols = dag.cardinality(node_id) if what == "cpt" else 1
    if len(values) != rows * cols:
        raise _semantic(tree, f"{what} {node_id} needs {rows * cols} values, got {len(values)}")
    return np.array(values).reshape(rows, cols) if what == "cpt" else np.array(values)


def _located(tree: Tree, build):
    """Run a constructor, pinning any domain error to the declaration's line."""
    try:
        return build()
    except CdeError as exc:
        raise type(exc)(f"line {tree.meta.line}: {exc}") from exc


def _build_cpts(dag: Dag, decls: _Declarations) -> List[Cpt]:
    cpts = []
    for node_id, (parents, values, tree) in decls.cpts.items():
        decls.require(tree, node_id)
        if dag.node(node_id).is_regime:
            raise _semantic(tree, f"regime node '{node_id}' takes no cpt")
        _check_parents(dag, node_id, parents, tree, skip_regime=True)
        regime = dag.regime_for(node_id)
        table = _table(dag, node_id, parents, values, tree, "cpt")
        if regime is not None and regime not in parents:
            # observational cpt: stack the point-mass blocks with idle last
            k = dag.cardinality(node_id)
            blocks = [np.tile(np.eye(k)[v], (table.shape[0], 1)) for v in range(k)] + [table]
            table = np.vstack(blocks)
            parents = (regime,) + parents
        cpts.append(_located(tree, lambda: Cpt(node_id, parents, table)))
    for node_id, (probs, tree) in decls.errdists.items():
        decls.require(tree, node_id)
        cpts.append(_located(tree, lambda: Cpt(node_id, (), np.array(probs))))
    return cpts


def _build_scm(dag: Dag, decls: _Declarations) -> Scm:
    if decls.cpts:
        first = next(iter(decls.cpts.values()))[2]
        raise _semantic(first, "a structural model declares fn lines, not cpt lines")
    functions, errors = [], []
    for node_id, (parents, values, tree) in decls.functions.items():
        decls.require(tree, node_id)
        if dag.node(node_id).kind is not NodeKind.DOMAIN:
            raise _semantic(tree, f"fn is declared for var nodes only, '{node_id}' is not one")
        _check_parents(dag, node_id, parents, tree, skip_regime=True)
        table = _table(dag, node_id, parents, values, tree, "fn")
        functions.append(_located(tree, lambda: StructuralFunction(node_id, parents, table)))
    for node_id, (probs, tree) in decls.errdists.items():
        decls.require(tree, node_id)
        if dag.node(node_id).kind is not NodeKind.ERROR:
            raise _semantic(tree, f"errdist is declared for error nodes only, '{node_id}' is not one")
        if len(probs) != dag.cardinality(node_id):
            raise _semantic(tree, f"errdist {node_id} needs {dag.cardinality(node_id)} values, got {len(probs)}")
        errors.append(_located(tree, lambda: ErrorSpec.from_probabilities(node_id, probs)))
    return Scm(dag, errors, functions)


def parse_graph_file(source: Union[str, bytes]) -> Model:
    """Parse the text format; the result is the richest structure the file supports."""
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8 ({exc.reason})") from exc
    try:
        tree = _graph_parser.parse(source)
    except UnexpectedInput as exc:
        raise _syntax_error(exc) from None
    decls = _collect(tree)
    dag = _build_dag(decls)
    if decls.functions:
        model: Model = _build_scm(dag, decls)
    elif decls.cpts or decls.errdists:
        cpts = _build_cpts(dag, decls)
        model = AugmentedBayesNet(dag, cpts) if dag.regime_nodes else BayesNet(dag, cpts)
    else:
        model = dag
    logger.debug("parsed %r", model)
    return model


def load_graph_file(path: Union[str, Path]) -> Model:
    return parse_graph_file(Path(path).read_bytes())


def parse_query(text: str, g: Optional[Dag] = None) -> CiQuery:
    """
    Parse `X1,X2 _||_ Y1,Y2 | Z1,Z2`. With a graph the query is validated and
    becomes an EciQuery whenever it mentions a regime node.
    """
    try:
        tree = _query_parser.parse(text.strip())
    except UnexpectedInput as exc:
        raise _syntax_error(exc) from None
    sets = [frozenset(str(t) for t in part.children) for part in tree.children]
    x, y = sets[0], sets[1]
    z = sets[2] if len(sets) > 2 else frozenset()
    query = CiQuery(x, y, z)
    for a, b in ((x, y), (x, z), (y, z)):
        if a & b:
            raise QueryError(f"query {text.strip()!r}: '{sorted(a & b)[0]}' appears in two arguments")
    if g is None:
        return query
    if any(n in g and g.node(n).is_regime for n in query.mentioned):
        return EciQuery(x, y, z).validate(g)
    return query.validate(g)


def _number(value: float) -> str:
    return repr(float(value))


def _node_lines(dag: Dag) -> List[str]:
    lines = []
    for node in dag.nodes:
        if node.is_regime:
            lines.append(f"regime {node.id} targets {node.target}")
            continue
        keyword = "var" if node.kind is NodeKind.DOMAIN else "error"
        suffix = f" states={node.cardinality}" if node.cardinality != 2 else ""
        lines.append(f"{keyword} {node.id}{suffix}")
    for parent, child in dag.sorted_edges():
        if not dag.node(parent).is_regime:
            lines.append(f"edge {parent} -> {child}")
    return lines


def _head(keyword: str, node_id: str, parents: Tuple[str, ...]) -> str:
    return f"{keyword} {node_id}" + (f" | {','.join(parents)}" if parents else "")


def dumps(model: Model) -> str:
    """Serialise any parsed structure; parsing the text gives the same structure back."""
    if isinstance(model, Dag):
        return "\n".join(_node_lines(model)) + "\n"
    lines = _node_lines(model.dag)
    if isinstance(model, (BayesNet, AugmentedBayesNet)):
        for node_id in model.dag.stochastic_nodes:
            cpt = model.observational_cpt(node_id) if isinstance(model, AugmentedBayesNet) else model.cpts[node_id]
            if model.dag.node(node_id).kind is NodeKind.ERROR:
                lines.append(f"errdist {node_id} : " + ", ".join(_number(p) for p in cpt.table[0]))
                continue
            values = ", ".join(_number(p) for p in cpt.table.reshape(-1))
            lines.append(f"{_head('cpt', node_id, cpt.parent_order)} : {values}")
    elif isinstance(model, Scm):
        for node_id in model.dag.domain_nodes:
            fn = model.functions[node_id]
            lines.append(f"{_head('fn', node_id, fn.parent_order)} : " + ", ".join(str(int(v)) for v in fn.table))
        for node_id in model.dag.error_nodes:
            probs = model.errors[node_id].probabilities(model.dag.cardinality(node_id))
            lines.append(f"errdist {node_id} : " + ", ".join(_number(p) for p in probs))
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return "\n".join(lines) + "\n"
