"""
Command-line front end.

Every command evaluates one query and prints a single-line verdict (or a
table) on stdout; `--json` prints the CommandResult schema instead. Exit
status: 0 after a successful evaluation whatever the verdict, 2 for usage,
parse and semantic errors, 1 for evaluation errors (capacity, conditioning).
"""
from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
from pydantic import ValidationError

from app.core.config import settings
from app.schemas.query import CommandResult

from .bayes_net import BayesNet, JointTable, ci_deviation, joint
from .ci_engine import (
    Method,
    enumerate_equivalence_class,
    represented_ci_set,
)
from .errors import CdeError, QueryError
from .generators import random_bayes_net
from .graph_core import Dag, NodeKind
from .parser import Model, dumps, load_graph_file
from .queries import (
    KIND_NAMES,
    ci_result,
    dag_of,
    eci_result,
    equiv_result,
    marginal_table,
    pc_bounds_result,
    require_kind,
)
from .regimes import (
    IDLE,
    AugmentedBayesNet,
    RegimeAssignment,
    augment as augment_dag,
    interventional_joint,
    pearl_augment,
    regime_name,
)
from .scm import (
    PC_ASSUMPTION,
    Coupling,
    Scm,
    build_spm,
    build_spm_copula,
    potential_response_joint,
    probability_of_causation,
    spm_joint,
)
from .utils import format_float, setup_rotating_logger

logger = logging.getLogger(__name__)


# -- output helpers -----------------------------------------------------------

def _emit(result: CommandResult, as_json: bool, text: str) -> None:
    if as_json:
        click.echo(json.dumps(result.dump(), sort_keys=True))
    else:
        click.echo(text)


def _verdict(value: bool) -> str:
    return "true" if value else "false"


def _table_lines(table: JointTable) -> str:
    lines = []
    for states, p in table.cells():
        cells = " ".join(f"{v}={s}" for v, s in zip(table.variable_order, states))
        lines.append(f"{cells} : {format_float(p)}")
    return "\n".join(lines)


def _edge_line(g: Dag) -> str:
    return ", ".join(f"{u} -> {v}" for u, v in g.sorted_edges()) or "(no edges)"


def _names(text: Optional[str]) -> List[str]:
    return [part.strip() for part in (text or "").split(",") if part.strip()]


def _parse_settings(pairs: Sequence[str]) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key or not raw:
            raise QueryError(f"--set expects NAME=VALUE, got {pair!r}")
        if raw == IDLE:
            values[key] = IDLE
        else:
            try:
                values[key] = int(raw)
            except ValueError:
                raise QueryError(f"--set {key}: value must be 'idle' or a state index, got {raw!r}") from None
    return values


def _assignments(pairs: Sequence[str]) -> Dict[str, int]:
    out = {}
    for key, value in _parse_settings(pairs).items():
        if value == IDLE:
            raise QueryError(f"{key}: conditioning needs a state index")
        out[key] = value
    return out


def _regime_settings(g: Dag, pairs: Sequence[str]) -> Tuple[List[str], Dict[str, object]]:
    """Targets that still need a regime indicator, and the settings keyed by regime id."""
    missing: List[str] = []
    settings_by_regime: Dict[str, object] = {}
    for key, value in _parse_settings(pairs).items():
        if key in g and g.node(key).is_regime:
            settings_by_regime[key] = value
            continue
        target = key[2:] if key.startswith("F_") and key not in g else key
        if target not in g or g.node(target).kind is not NodeKind.DOMAIN:
            raise QueryError(f"--set {key}: no regime node or domain node of that name")
        regime = g.regime_for(target)
        if regime is None:
            missing.append(target)
            regime = regime_name(target)
        settings_by_regime[regime] = value
    return missing, settings_by_regime


# -- click plumbing ---------------------------------------------------------------

def handle_errors(func):
    """Map library errors to exit codes; messages go to stderr."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CdeError as exc:
            logger.error("%s failed: %s", func.__name__, exc)
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except ValidationError as exc:
            logger.error("%s failed: %s", func.__name__, exc)
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    return wrapper


graph_option = click.option(
    "-g", "--graph", "graph_path", required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Graph / BN / SCM file.",
)
query_option = click.option("-q", "--query", "query_text", required=True, help='e.g. "B,R _||_ G1,Y1 | A,N"')
json_option = click.option("--json", "as_json", is_flag=True, help="Emit the JSON result schema.")
witness_option = click.option("--witness", is_flag=True, help="Print a connecting path when not represented.")


@click.group()
@click.version_option(settings.app_version, prog_name="cde")
def cli():
    """Causal DAG explorer: CI, ECI, interventions and probability of causation."""
    log_dir = settings.log_dir
    log_dir.mkdir(parents=True, exist_ok=True)
    level = getattr(logging, settings.CDE_LOG_LEVEL.upper(), logging.INFO)
    setup_rotating_logger(str(log_dir / "cde.log"), "cde", level=level)


def _ci_command(model: Model, query_text: str, method: Method, as_json: bool, witness: bool) -> None:
    result = ci_result(model, query_text, method)
    text = _verdict(result.result)
    if witness and result.witness:
        text += "\nwitness: " + " - ".join(result.witness)
    _emit(result, as_json, text)


@cli.command()
@graph_option
@query_option
@click.option("--method", type=click.Choice([m.value for m in Method]), default=Method.MORALISATION.value)
@json_option
@witness_option
@handle_errors
def ci(graph_path, query_text, method, as_json, witness):
    """Is (X _||_ Y | Z) represented? (moralisation criterion)"""
    _ci_command(load_graph_file(graph_path), query_text, Method(method), as_json, witness)


@cli.command()
@graph_option
@query_option
@json_option
@witness_option
@handle_errors
def dsep(graph_path, query_text, as_json, witness):
    """Is (X _||_ Y | Z) represented? (d-separation)"""
    _ci_command(load_graph_file(graph_path), query_text, Method.DSEPARATION, as_json, witness)


@cli.command()
@graph_option
@click.option("-h", "--other", "other_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Second graph file.")
@json_option
@handle_errors
def equiv(graph_path, other_path, as_json):
    """Are the two graphs Markov equivalent?"""
    result = equiv_result(load_graph_file(graph_path), load_graph_file(other_path))
    _emit(result, as_json, _verdict(result.result))


@cli.command("class")
@graph_option
@json_option
@handle_errors
def class_(graph_path, as_json):
    """List the Markov equivalence class of the graph."""
    g = dag_of(load_graph_file(graph_path))
    members = sorted(enumerate_equivalence_class(g), key=lambda d: d.sorted_edges())
    result = CommandResult(command="class", inputs={}, result=[[list(e) for e in d.sorted_edges()] for d in members])
    _emit(result, as_json, "\n".join([f"{len(members)} member(s)"] + [_edge_line(d) for d in members]))


@cli.command("augment")
@graph_option
@click.option("--all", "all_nodes", is_flag=True, help="Pearlian augmentation: every domain node.")
@click.option("--targets", help="Comma-separated domain nodes.")
@json_option
@handle_errors
def augment_cmd(graph_path, all_nodes, targets, as_json):
    """Add regime indicators and print the augmented graph (or network)."""
    if all_nodes == bool(targets):
        raise click.UsageError("give exactly one of --all and --targets")
    model = load_graph_file(graph_path)
    require_kind(model, (Dag, BayesNet, Scm), "augment")
    g = dag_of(model)
    chosen = list(g.domain_nodes) if all_nodes else _names(targets)
    if isinstance(model, Dag):
        out: Model = pearl_augment(model) if all_nodes else augment_dag(model, chosen)
    elif isinstance(model, BayesNet):
        out = AugmentedBayesNet.from_bayes_net(model, chosen)
    else:
        out = model.augment(chosen)
    text = dumps(out).rstrip("\n")
    _emit(CommandResult(command="augment", inputs={"targets": chosen}, result=text), as_json, text)


@cli.command()
@graph_option
@query_option
@json_option
@witness_option
@handle_errors
def eci(graph_path, query_text, as_json, witness):
    """Is the extended conditional independence represented?"""
    result = eci_result(load_graph_file(graph_path), query_text)
    text = _verdict(result.result)
    if witness and result.witness:
        text += "\nwitness: " + " - ".join(result.witness)
    _emit(result, as_json, text)


@cli.command()
@graph_option
@click.option("--set", "pairs", multiple=True, help="Regime setting F_X=1 (or F_X=idle); repeatable.")
@click.option("--vars", "variables", help="Report the marginal of these nodes only.")
@json_option
@handle_errors
def intervene(graph_path, pairs, variables, as_json):
    """Interventional joint by truncated factorisation (or by the structural model)."""
    model = load_graph_file(graph_path)
    require_kind(model, (BayesNet, AugmentedBayesNet, Scm), "intervene")
    missing, by_regime = _regime_settings(dag_of(model), pairs)
    if isinstance(model, BayesNet):
        model = AugmentedBayesNet.from_bayes_net(model, missing)
    elif isinstance(model, Scm) and missing:
        model = model.augment(missing)
    r = RegimeAssignment.build(model.dag, by_regime)
    table = spm_joint(model, r) if isinstance(model, Scm) else interventional_joint(model, r)
    if variables:
        table = table.marginalize(_names(variables))
    result = CommandResult(command="intervene", inputs={"set": {k: v for k, v in r.items()}}, result=table.to_dict())
    _emit(result, as_json, _table_lines(table))


@cli.command()
@graph_option
@click.option("--vars", "variables", required=True, help="Comma-separated query nodes.")
@click.option("--given", "pairs", multiple=True, help="Evidence NODE=STATE; repeatable.")
@click.option("--method", type=click.Choice(["elimination", "brute"]), default="elimination")
@json_option
@handle_errors
def marginal(graph_path, variables, pairs, method, as_json):
    """Marginal (or conditional) distribution in the observational regime."""
    names, given = _names(variables), _assignments(pairs)
    table = marginal_table(load_graph_file(graph_path), names, given, method)
    result = CommandResult(command="marginal", inputs={"variables": names, "given": given}, result=table.to_dict())
    _emit(result, as_json, _table_lines(table))


@cli.command()
@graph_option
@click.option("--cause", required=True)
@click.option("--outcome", required=True)
@json_option
@handle_errors
def pc(graph_path, cause, outcome, as_json):
    """Probability of causation P(Y_0=0 | X=1, Y_1=1) in a structural model."""
    model = load_graph_file(graph_path)
    require_kind(model, (Scm,), "pc")
    value = probability_of_causation(model, cause, outcome)
    result = CommandResult(command="pc", inputs={"cause": cause, "outcome": outcome}, result=value)
    _emit(result, as_json, format_float(value))


@cli.command("pc-bounds")
@click.option("--p0", type=float, required=True, help="p(Y=1 | X=0)")
@click.option("--p1", type=float, required=True, help="p(Y=1 | X=1)")
@click.option("--method", type=click.Choice(["vertices", "linprog"]), default="vertices")
@json_option
@handle_errors
def pc_bounds_cmd(p0, p1, method, as_json):
    """Tight bounds on the probability of causation from observational rates."""
    result = pc_bounds_result(p0, p1, method)
    click.echo(f"note: {PC_ASSUMPTION}", err=True)
    text = f"lower={format_float(result.result['lower'])} upper={format_float(result.result['upper'])}"
    _emit(result, as_json, text)


@cli.command("spm-from-bn")
@graph_option
@click.option("--node", help="Give this node's error the coupling below.")
@click.option("--coupling", type=click.Choice(["comonotone", "independent"]), default="comonotone")
@json_option
@handle_errors
def spm_from_bn(graph_path, node, coupling, as_json):
    """Structural model realising the network (probability integral transform)."""
    model = load_graph_file(graph_path)
    require_kind(model, (BayesNet,), "spm-from-bn")
    if node:
        make = Coupling.comonotone if coupling == "comonotone" else Coupling.independent
        scm = build_spm_copula(model, node, make(model, node))
    else:
        scm = build_spm(model)
    text = dumps(scm).rstrip("\n")
    _emit(CommandResult(command="spm-from-bn", inputs={"node": node, "coupling": coupling}, result=text), as_json, text)


@cli.command()
@graph_option
@click.option("--cause", required=True)
@click.option("--outcome", required=True)
@json_option
@handle_errors
def counterfactual(graph_path, cause, outcome, as_json):
    """Joint law of the potential responses of the outcome."""
    model = load_graph_file(graph_path)
    require_kind(model, (Scm,), "counterfactual")
    prj = potential_response_joint(model, cause, outcome)
    if prj.degenerate:
        click.echo(f"warning: {cause} is not an ancestor of {outcome}; all potential responses coincide", err=True)
    labels = [f"{outcome}_{x}" for x in range(prj.table.ndim)]
    lines = []
    for states, p in JointTable(tuple(labels), prj.table).cells():
        lines.append(" ".join(f"{lab}={s}" for lab, s in zip(labels, states)) + f" : {format_float(p)}")
    result = CommandResult(
        command="counterfactual",
        inputs={"cause": cause, "outcome": outcome},
        result={"variables": labels, "probabilities": prj.table.reshape(-1).tolist(), "degenerate": prj.degenerate},
    )
    _emit(result, as_json, "\n".join(lines))


def soundness_check(g: Dag, seed: int, max_query_size: int = 2) -> Tuple[int, Optional[str]]:
    """Represented CIs checked in a seeded random network on g; returns (count, first violation)."""
    plain = Dag([n for n in g.nodes if not n.is_regime], [(u, v) for u, v in g.edges if not g.node(u).is_regime])
    table = joint(random_bayes_net(seed, plain))
    represented = sorted(represented_ci_set(plain, max_query_size), key=str)
    for q in represented:
        if ci_deviation(table, q) > 1e-9:
            return len(represented), str(q)
    return len(represented), None


@cli.command()
@graph_option
@click.option("--seed", type=int, help="Also run a soundness self-check on random CPTs.")
@json_option
@handle_errors
def validate(graph_path, seed, as_json):
    """Parse a file, report what it declares, and optionally self-check it."""
    model = load_graph_file(graph_path)
    g = dag_of(model)
    report = {
        "kind": KIND_NAMES[type(model)],
        "nodes": len(g),
        "edges": len(g.edges),
        "regimes": len(g.regime_nodes),
        "errors": len(g.error_nodes),
    }
    lines = [f"{report['kind']}: {report['nodes']} nodes, {report['edges']} edges"]
    if seed is not None:
        checked, violation = soundness_check(g, seed)
        report.update(seed=seed, checked=checked, violation=violation)
        lines.append(f"soundness: {'ok' if violation is None else 'violated by ' + violation} ({checked} represented CIs)")
    _emit(CommandResult(command="validate", inputs={"seed": seed}, result=report), as_json, "\n".join(lines))


def main():
    cli()


if __name__ == "__main__":
    main()
