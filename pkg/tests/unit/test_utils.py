"""
Tests for configuration, shared helpers and the seeded generators.
"""
import logging

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.config import Settings
from cde.errors import CapacityError
from cde.generators import node_names, random_bayes_net, random_coupling, random_dag, random_lookup_scm
from cde.utils import check_capacity, format_float, setup_rotating_logger, state_space_size


def test_settings_defaults(monkeypatch):
    monkeypatch.delenv("CDE_MAX_CELLS", raising=False)
    monkeypatch.delenv("CDE_LOG_DIR", raising=False)
    s = Settings(_env_file=None)
    assert s.max_cells == 2 ** 24
    assert s.log_dir.parts[-2:] == (".cde", "logs")


def test_settings_read_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("CDE_MAX_CELLS", "1000")
    monkeypatch.setenv("CDE_LOG_DIR", str(tmp_path))
    s = Settings(_env_file=None)
    assert s.max_cells == 1000
    assert s.log_dir == tmp_path


def test_settings_reject_non_positive_capacity(monkeypatch):
    monkeypatch.setenv("CDE_MAX_CELLS", "0")
    with pytest.raises(ValidationError):
        Settings(_env_file=None)


@pytest.mark.parametrize("value, text", [
    (0.5, "0.5"),
    (1.0, "1.0"),
    (0.0, "0.0"),
    (1 / 3, "0.333333333333"),
    (0.1 + 0.2, "0.3"),
    (1e-20, "1e-20"),
])
def test_format_float(value, text):
    assert format_float(value) == text


def test_check_capacity(small_capacity):
    check_capacity(64, "table")
    with pytest.raises(CapacityError, match="table needs 65 cells"):
        check_capacity(65, "table")
    assert state_space_size([2, 3, 4]) == 24
    assert state_space_size([]) == 1


def test_rotating_logger_is_not_duplicated(tmp_path):
    log_file = str(tmp_path / "x.log")
    first = setup_rotating_logger(log_file, "cde.test_rotating", level=logging.DEBUG)
    second = setup_rotating_logger(log_file, "cde.test_rotating")
    try:
        assert first is second
        assert len(first.handlers) == 1
        first.info("hello")
        assert "hello" in (tmp_path / "x.log").read_text(encoding="utf-8")
    finally:
        for handler in list(first.handlers):
            first.removeHandler(handler)
            handler.close()


def test_node_names():
    assert node_names(3) == ["A", "B", "C"]
    assert node_names(28)[-2:] == ["V26", "V27"]


def test_generators_are_seeded():
    assert random_dag(3, 6) == random_dag(3, 6)
    a = random_bayes_net(11, n=4, states=(2, 3))
    b = random_bayes_net(11, n=4, states=(2, 3))
    assert a.dag == b.dag
    assert all(a.cpts[n] == b.cpts[n] for n in a.dag.ids)


def test_random_dag_respects_edge_probability():
    assert not random_dag(0, 5, edge_prob=0.0).edges
    assert len(random_dag(0, 5, edge_prob=1.0).edges) == 10


def test_random_coupling_and_lookup_model(rng):
    coupling = random_coupling(rng, (2, 3))
    assert coupling.shape == (2, 3)
    assert coupling.sum() == pytest.approx(1.0)
    s = random_lookup_scm(rng)
    assert s.dag.domain_nodes == ("X", "Y")
    assert np.isclose(s.errors["E_Y"].probabilities(4).sum(), 1.0)
