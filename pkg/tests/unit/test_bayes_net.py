"""
Unit tests for CPTs, joints, variable elimination and the numerical CI oracle.
"""
import numpy as np
import pytest

from cde.bayes_net import (
    BayesNet,
    Cpt,
    JointTable,
    ci_deviation,
    condition_table,
    conditional,
    elimination_order,
    holds_in_distribution,
    joint,
    marginal,
    recover_cpts,
)
from cde.errors import CapacityError, ConditioningError, GraphStructureError, ProbabilityError, QueryError
from cde.generators import random_bayes_net
from cde.graph_core import CiQuery, Dag, Node


def single_node_net():
    return BayesNet(Dag([Node.domain("A")]), [Cpt("A", (), [0.3, 0.7])])


def copy_net():
    return BayesNet(
        Dag.from_edges([("A", "B")]),
        [Cpt("A", (), [0.3, 0.7]), Cpt("B", ("A",), [[1.0, 0.0], [0.0, 1.0]])],
    )


def test_joint_of_single_node():
    table = joint(single_node_net())
    assert table.variable_order == ("A",)
    np.testing.assert_allclose(table.vector, [0.3, 0.7])


def test_copy_cpt_gives_diagonal_joint():
    table = joint(copy_net())
    np.testing.assert_allclose(table.probabilities, [[0.3, 0.0], [0.0, 0.7]])


def test_chain_joint_cell(load_fixture):
    bn = load_fixture("chain.bn")
    table = joint(bn)
    assert table.prob({"A": 1, "B": 1, "C": 0}) == pytest.approx(0.7 * 0.8 * 0.25)
    assert table.vector.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("rows, fragment", [
    ([[0.5, 0.6]], "sums to"),
    ([[-0.1, 1.1]], "negative"),
])
def test_cpt_rows_must_be_distributions(rows, fragment):
    with pytest.raises(ProbabilityError, match=fragment):
        Cpt("A", (), rows)


def test_cpt_shape_and_parents_must_match_graph():
    g = Dag.from_edges([("A", "B")])
    with pytest.raises(GraphStructureError, match="parents"):
        BayesNet(g, [Cpt("A", (), [0.5, 0.5]), Cpt("B", (), [0.5, 0.5])])
    with pytest.raises(GraphStructureError, match="rows"):
        BayesNet(g, [Cpt("A", (), [0.5, 0.5]), Cpt("B", ("A",), [[0.5, 0.5]])])
    with pytest.raises(GraphStructureError, match="missing"):
        BayesNet(g, [Cpt("A", (), [0.5, 0.5])])


def test_bayes_net_rejects_regime_nodes(load_fixture):
    g = load_fixture("augmented_chain.dag")
    with pytest.raises(GraphStructureError, match="regime"):
        BayesNet(g, [])


def test_marginal_matches_brute_force(load_fixture):
    bn = load_fixture("instrumental.bn")
    for vars in (["Y"], ["Z", "Y"], ["U", "X"], ["Z", "U", "X", "Y"]):
        ve = marginal(bn, vars)
        brute = marginal(bn, vars, method="brute")
        assert ve.allclose(brute, atol=1e-12)


def test_marginal_of_instrumental_net(load_fixture):
    bn = load_fixture("instrumental.bn")
    u_z = marginal(bn, ["U", "Z"])
    expected = np.outer([0.6, 0.4], [0.2, 0.5, 0.3])
    np.testing.assert_allclose(u_z.reorder(["U", "Z"]).probabilities, expected, atol=1e-12)


def test_marginal_requires_known_variables(load_fixture):
    bn = load_fixture("chain.bn")
    with pytest.raises(QueryError):
        marginal(bn, [])
    with pytest.raises(QueryError, match="Q"):
        marginal(bn, ["Q"])


def test_elimination_order_prefers_low_degree(load_fixture):
    bn = load_fixture("chain.bn")
    assert elimination_order(bn.dag, bn.factors(), {"C"}) == ["A", "B"]


def test_conditional_of_chain(load_fixture):
    bn = load_fixture("chain.bn")
    table = conditional(bn, {"C"}, {"A": 0})
    # p(C=1 | A=0) = 0.9 * 0.4 + 0.1 * 0.75
    assert table.prob({"C": 1}) == pytest.approx(0.9 * 0.4 + 0.1 * 0.75)


def test_condition_table_errors():
    bn = copy_net()
    table = joint(bn)
    with pytest.raises(QueryError, match="overlap"):
        condition_table(table, ["A"], {"A": 0}, bn.dag)
    with pytest.raises(QueryError, match="out of range"):
        condition_table(table, ["B"], {"A": 2}, bn.dag)
    zero = JointTable(("A", "B"), [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ConditioningError):
        condition_table(zero, ["B"], {"A": 1}, bn.dag)


def test_joint_table_validation():
    with pytest.raises(ProbabilityError):
        JointTable(("A",), [0.2, 0.2])
    with pytest.raises(ProbabilityError):
        JointTable(("A", "B"), [0.5, 0.5])


def test_joint_capacity_guard(small_capacity):
    bn = random_bayes_net(0, n=7, edge_prob=0.0)
    with pytest.raises(CapacityError, match="CDE_MAX_CELLS"):
        joint(bn)


def test_ci_deviation_is_zero_for_product_table():
    table = JointTable(("A", "B"), np.outer([0.3, 0.7], [0.4, 0.6]))
    assert ci_deviation(table, CiQuery.of("A", "B")) == pytest.approx(0.0, abs=1e-15)
    assert ci_deviation(JointTable(("A", "B"), [[0.5, 0.0], [0.0, 0.5]]), CiQuery.of("A", "B")) == pytest.approx(0.25)


def test_collider_independence_fails_given_child(rng):
    g = Dag.from_edges([("A", "B"), ("C", "B")])
    bn = random_bayes_net(rng, g)
    assert holds_in_distribution(bn, CiQuery.of("A", "C"))
    assert not holds_in_distribution(bn, CiQuery.of("A", "C", "B"), tol=1e-6)


def test_recover_cpts_round_trip(load_fixture):
    bn = load_fixture("instrumental.bn")
    recovered = recover_cpts(joint(bn), bn.dag)
    for node_id, (table, defined) in recovered.items():
        assert defined.all()
        np.testing.assert_allclose(table, bn.cpt(node_id).table, atol=1e-9)


def test_recover_cpts_marks_zero_mass_rows():
    recovered = recover_cpts(joint(BayesNet(
        Dag.from_edges([("A", "B")]),
        [Cpt("A", (), [1.0, 0.0]), Cpt("B", ("A",), [[0.2, 0.8], [0.5, 0.5]])],
    )), Dag.from_edges([("A", "B")]))
    table, defined = recovered["B"]
    assert defined.tolist() == [True, False]
    assert np.isnan(table[1]).all()
