"""
Tests for the query builders shared by the CLI and the HTTP service.
"""
import numpy as np
import pytest

from app.api import queries as routes
from cde import queries
from cde.ci_engine import Method
from cde.errors import QueryError, SemanticError
from cde.queries import (
    ci_result,
    dag_of,
    eci_result,
    equiv_result,
    marginal_result,
    marginal_table,
    pc_bounds_result,
)


def test_ci_result_by_moralisation(load_fixture):
    result = ci_result(load_fixture("collider.dag"), "A _||_ C | B")
    assert result.command == "ci"
    assert result.result is False
    assert result.witness == ["A", "C"]
    assert result.inputs == {"query": "A _||_ C | B", "method": "moralisation"}


def test_ci_result_by_dseparation(load_fixture):
    result = ci_result(load_fixture("collider.dag"), "A _||_ C | B", Method.DSEPARATION)
    assert result.command == "dsep"
    assert result.witness == ["A", "B", "C"]
    assert ci_result(load_fixture("chain.bn"), "A _||_ C | B").dump()["result"] is True


def test_eci_and_equiv_results(load_fixture):
    assert eci_result(load_fixture("instrumental_augmented.dag"), "U,Z _||_ F_X").result is True
    assert equiv_result(load_fixture("chain.dag"), load_fixture("fork.dag")).result is True
    assert equiv_result(load_fixture("chain.dag"), load_fixture("collider.dag")).result is False


def test_marginal_needs_a_distribution(load_fixture):
    with pytest.raises(SemanticError, match="needs a bayes-net"):
        marginal_table(load_fixture("chain.dag"), ["A"])
    with pytest.raises(QueryError, match="at least one variable"):
        marginal_table(load_fixture("chain.bn"), [])


def test_marginal_of_network_and_structural_model(load_fixture):
    given = marginal_result(load_fixture("chain.bn"), ["B"], {"A": 1})
    assert given.inputs == {"variables": ["B"], "given": {"A": 1}}
    np.testing.assert_allclose(given.result["probabilities"], [0.2, 0.8])
    table = marginal_table(load_fixture("simple.scm"), ["X"])
    np.testing.assert_allclose(table.probabilities, [0.4, 0.6])


def test_pc_bounds_result_carries_assumption_and_couplings():
    result = pc_bounds_result(0.25, 0.5)
    assert result.result["lower"] == pytest.approx(0.5)
    assert result.result["upper"] == pytest.approx(1.0)
    assert np.asarray(result.result["lower_coupling"]).shape == (2, 2)
    assert "ignorability" in result.inputs["assumption"]


def test_dag_of_unwraps_models(load_fixture):
    bn = load_fixture("chain.bn")
    assert dag_of(bn) is bn.dag
    assert dag_of(bn.dag) is bn.dag


def test_http_routes_use_the_shared_builders():
    assert routes.ci_result is queries.ci_result
    assert routes.marginal_result is queries.marginal_result
    assert not hasattr(queries, "click")
