"""
Unit tests for regime indicators, ECI queries and interventional distributions.
"""
import numpy as np
import pytest

from cde.bayes_net import BayesNet, Cpt, marginal
from cde.errors import GraphStructureError, QueryError
from cde.generators import random_bayes_net
from cde.graph_core import Dag, Node
from cde.regimes import (
    IDLE,
    AugmentedBayesNet,
    EciQuery,
    RegimeAssignment,
    all_assignments,
    augment,
    check_ignorability,
    eci_holds_in_distribution,
    interventional_joint,
    no_causal_effect,
    pearl_augment,
    query_eci,
    sliced_joint,
)


def test_augment_adds_one_indicator_per_target():
    g = augment(Dag.from_edges([("A", "B")]), {"A"})
    assert g.regime_nodes == ("F_A",)
    assert g.node("F_A").target == "A"
    assert g.edges == {("F_A", "A"), ("A", "B")}


def test_augment_instrumental_graph_matches_fixture(load_fixture):
    assert augment(load_fixture("instrumental.dag"), "X") == load_fixture("instrumental_augmented.dag")


def test_augment_rejects_bad_targets(load_fixture):
    g = load_fixture("instrumental_augmented_spm.dag")
    with pytest.raises(GraphStructureError, match="already has regime"):
        augment(g, {"X"})
    with pytest.raises(GraphStructureError, match="error node"):
        augment(g, {"E_Y"})
    with pytest.raises(QueryError):
        augment(g, {"Q"})


def test_pearl_augment_covers_every_domain_node(load_fixture):
    g = pearl_augment(load_fixture("pearl.dag"))
    assert set(g.regime_nodes) == {"F_A", "F_B", "F_C", "F_D", "F_E"}
    with pytest.raises(GraphStructureError, match="already augmented"):
        pearl_augment(g)


def test_ignorability_of_simple_augmented_graph(load_fixture):
    g = load_fixture("ignorability.bn").dag
    assert check_ignorability(g, "A", "B")
    assert query_eci(g, EciQuery.of("B", "F_A", "A")).represented
    assert not no_causal_effect(g, "A", "B")


def test_example_chain_ignorability(load_fixture):
    g = load_fixture("augmented_chain.dag")
    assert query_eci(g, EciQuery.of("A", "C", {"F_A", "B"})).represented
    assert check_ignorability(g, "A", {"B", "C"})
    assert not no_causal_effect(g, "A", {"B", "C"})


@pytest.mark.parametrize("name", ["augmented_reverse_chain.dag", "augmented_fork.dag"])
def test_a_does_not_cause_b_or_c(load_fixture, name):
    g = load_fixture(name)
    assert no_causal_effect(g, "A", {"B", "C"})
    assert query_eci(g, EciQuery.of("A", "C", {"F_A", "B"})).represented


def test_instrumental_regime_queries(load_fixture):
    g = load_fixture("instrumental_augmented.dag")
    assert no_causal_effect(g, "X", {"U", "Z"})
    assert query_eci(g, EciQuery.of("Y", "F_X", {"Z", "U", "X"})).represented
    assert not check_ignorability(g, "X", "Y")


def test_regime_in_first_argument_is_rejected(load_fixture):
    g = load_fixture("augmented_chain.dag")
    with pytest.raises(GraphStructureError, match="fully stochastic"):
        query_eci(g, EciQuery.of("F_A", "C"))


def test_ignorability_needs_a_regime(load_fixture):
    g = load_fixture("instrumental_augmented.dag")
    with pytest.raises(GraphStructureError, match="no regime"):
        check_ignorability(g, "Y", "Z")


def test_regime_assignment_normalises_values(load_fixture):
    g = load_fixture("augmented_chain.dag")
    r = RegimeAssignment.build(g, {"F_A": 2})
    assert r["F_A"] == IDLE
    assert r.interventions() == {}
    r = RegimeAssignment.build(g, {"F_A": 1})
    assert r.interventions() == {"A": 1}
    assert r.state("F_A", g) == 1
    assert RegimeAssignment.idle(g).state("F_A", g) == 2


@pytest.mark.parametrize("values, fragment", [
    ({"F_B": 0}, "not regime"),
    ({"F_A": 5}, "expected 'idle'"),
    ({"F_A": "on"}, "expected 'idle'"),
])
def test_regime_assignment_rejects_bad_values(load_fixture, values, fragment):
    g = load_fixture("augmented_chain.dag")
    with pytest.raises(QueryError, match=fragment):
        RegimeAssignment.build(g, values)


def test_all_assignments_enumerates_target_states_and_idle(load_fixture):
    g = load_fixture("instrumental_augmented.dag")
    assert [r["F_X"] for r in all_assignments(g)] == [0, 1, IDLE]


def test_parsed_augmented_net_stacks_point_masses(load_fixture):
    abn = load_fixture("ignorability.bn")
    assert isinstance(abn, AugmentedBayesNet)
    cpt = abn.cpts["A"]
    assert cpt.parent_order == ("F_A",)
    np.testing.assert_allclose(cpt.table, [[1.0, 0.0], [0.0, 1.0], [0.3, 0.7]])
    np.testing.assert_allclose(abn.observational_cpt("A").table, [[0.3, 0.7]])


def test_intervention_gives_observational_conditional(load_fixture):
    abn = load_fixture("ignorability.bn")
    r = RegimeAssignment.build(abn.dag, {"F_A": 1})
    table = interventional_joint(abn, r)
    assert table.prob({"B": 1}) == pytest.approx(0.8)
    assert table.allclose(sliced_joint(abn, r), atol=1e-12)


def test_idle_regime_reproduces_observational_joint(load_fixture):
    abn = load_fixture("ignorability.bn")
    table = interventional_joint(abn, RegimeAssignment.idle(abn.dag))
    assert table.prob({"B": 1}) == pytest.approx(0.7 * 0.8 + 0.3 * 0.1)


def test_intervening_on_effect_leaves_causes_alone(rng):
    bn = random_bayes_net(rng, Dag.from_edges([("B", "A"), ("C", "B")]))
    abn = AugmentedBayesNet.from_bayes_net(bn, {"A"})
    observed = marginal(bn, {"B", "C"})
    for value in (0, 1):
        table = interventional_joint(abn, RegimeAssignment.build(abn.dag, {"F_A": value}))
        assert table.marginalize({"B", "C"}).allclose(observed, atol=1e-12)


def test_observational_net_round_trip(rng):
    bn = random_bayes_net(rng, n=4)
    abn = AugmentedBayesNet.from_bayes_net(bn, bn.dag.ids[:2])
    back = abn.observational_net()
    assert back.dag == bn.dag
    for node_id in bn.dag.ids:
        assert back.cpts[node_id] == bn.cpts[node_id]


def test_augmented_net_validates_regime_rows():
    a = Node.domain("A")
    g = Dag([a, Node.regime("F_A", a)], [("F_A", "A")])
    with pytest.raises(GraphStructureError, match="point masses"):
        AugmentedBayesNet(g, [Cpt("A", ("F_A",), [[0.5, 0.5], [0.0, 1.0], [0.3, 0.7]])])
    AugmentedBayesNet(g, [Cpt("A", ("F_A",), [[1.0, 0.0], [0.0, 1.0], [0.3, 0.7]])])


def test_augmented_net_requires_regime_as_first_parent():
    a, b = Node.domain("A"), Node.domain("B")
    g = Dag([a, b, Node.regime("F_B", b)], [("A", "B"), ("F_B", "B")])
    rows = [[1.0, 0.0]] * 2 + [[0.0, 1.0]] * 2 + [[0.4, 0.6], [0.9, 0.1]]
    cpt_a = Cpt("A", (), [0.5, 0.5])
    AugmentedBayesNet(g, [cpt_a, Cpt("B", ("F_B", "A"), rows)])
    with pytest.raises(GraphStructureError, match="first parent"):
        AugmentedBayesNet(g, [cpt_a, Cpt("B", ("A", "F_B"), np.array(rows).reshape(3, 2, 2).transpose(1, 0, 2).reshape(6, 2))])


def test_eci_in_distribution(load_fixture):
    abn = load_fixture("ignorability.bn")
    assert eci_holds_in_distribution(abn, EciQuery.of("B", "F_A", "A"))
    assert not eci_holds_in_distribution(abn, EciQuery.of("B", "F_A"))


def test_bayes_net_and_augmented_net_agree_on_idle_marginals(rng):
    bn = random_bayes_net(rng, n=3)
    abn = AugmentedBayesNet.from_bayes_net(bn, bn.dag.ids)
    assert isinstance(abn.observational_net(), BayesNet)
    idle = interventional_joint(abn, RegimeAssignment.idle(abn.dag))
    assert idle.allclose(marginal(bn, bn.dag.ids), atol=1e-12)
