"""
Query evaluation shared by the command line and the HTTP service.

Each builder parses its inputs against a loaded model, runs one library
operation and wraps the answer in the CommandResult schema.
"""
from __future__ import annotations

from typing import Dict, Optional, Sequence, Tuple

from app.schemas.query import CommandResult

from .bayes_net import BayesNet, JointTable, condition_table, conditional, marginal as bn_marginal
from .ci_engine import Method, markov_equivalent, query_ci
from .errors import QueryError, SemanticError
from .graph_core import Dag
from .parser import Model, parse_query
from .regimes import AugmentedBayesNet, query_eci
from .scm import PC_ASSUMPTION, PcObservation, Scm, pc_bounds, spm_joint


KIND_NAMES = {
    Dag: "dag",
    BayesNet: "bayes-net",
    AugmentedBayesNet: "augmented-bayes-net",
    Scm: "scm",
}


def dag_of(model: Model) -> Dag:
    return model if isinstance(model, Dag) else model.dag


def require_kind(model: Model, kinds: Tuple[type, ...], command: str) -> None:
    if not isinstance(model, kinds):
        wanted = " or ".join(KIND_NAMES[k] for k in kinds)
        raise SemanticError(f"'{command}' needs a {wanted}; the file declares a {KIND_NAMES[type(model)]}")


def ci_result(model: Model, query_text: str, method: Method = Method.MORALISATION) -> CommandResult:
    g = dag_of(model)
    q = parse_query(query_text, g)
    verdict = query_ci(g, q, method)
    return CommandResult(
        command="ci" if Method(method) is Method.MORALISATION else "dsep",
        inputs={"query": str(q), "method": Method(method).value},
        result=verdict.represented,
        witness=list(verdict.witness) or None,
    )


def eci_result(model: Model, query_text: str) -> CommandResult:
    g = dag_of(model)
    q = parse_query(query_text, g)
    verdict = query_eci(g, q)
    return CommandResult(command="eci", inputs={"query": str(q)}, result=verdict.represented,
                         witness=list(verdict.witness) or None)


def equiv_result(model: Model, other: Model) -> CommandResult:
    return CommandResult(command="equiv", inputs={}, result=markov_equivalent(dag_of(model), dag_of(other)))


def pc_bounds_result(p0: float, p1: float, method: str = "vertices") -> CommandResult:
    bounds = pc_bounds(PcObservation(p0=p0, p1=p1), method=method)
    return CommandResult(
        command="pc-bounds",
        inputs={"p0": p0, "p1": p1, "method": method, "assumption": PC_ASSUMPTION},
        result={
            "lower": bounds.lower,
            "upper": bounds.upper,
            "lower_coupling": bounds.lower_coupling.tolist(),
            "upper_coupling": bounds.upper_coupling.tolist(),
        },
    )


def marginal_table(model: Model, variables: Sequence[str], given: Optional[Dict[str, int]] = None,
                   method: str = "elimination") -> JointTable:
    """Observational p(variables | given) from a network or a structural model."""
    require_kind(model, (BayesNet, AugmentedBayesNet, Scm), "marginal")
    given = dict(given or {})
    if not variables:
        raise QueryError("marginal needs at least one variable")
    if isinstance(model, Scm):
        full = spm_joint(model)
        table = full.marginalize(set(variables) | set(given))
        if given:
            return condition_table(table, variables, given, model.dag)
        return table.reorder(model.dag.ordered(variables))
    bn = model.observational_net() if isinstance(model, AugmentedBayesNet) else model
    if given:
        return conditional(bn, variables, given)
    return bn_marginal(bn, variables, method=method)


def marginal_result(model: Model, variables: Sequence[str], given: Optional[Dict[str, int]] = None,
                    method: str = "elimination") -> CommandResult:
    table = marginal_table(model, variables, given, method)
    return CommandResult(
        command="marginal",
        inputs={"variables": list(variables), "given": dict(given or {})},
        result=table.to_dict(),
    )
