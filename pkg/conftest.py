"""
Pytest configuration and fixtures for the cde tests.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

repo_dir = Path(__file__).parent
if str(repo_dir) not in sys.path:
    sys.path.insert(0, str(repo_dir))


@pytest.fixture(scope="session")
def repo_root():
    """Return the repository root directory."""
    return Path(__file__).parent


@pytest.fixture(scope="session")
def corpus_dir(repo_root):
    """Return the directory of shipped graph / network / SCM files."""
    return repo_root / "corpus"


@pytest.fixture(scope="session")
def golden_dir(repo_root):
    return repo_root / "tests" / "golden"


@pytest.fixture(scope="session")
def load_fixture(corpus_dir):
    """
    Parse a corpus file by name.

    Usage:
        def test_something(load_fixture):
            g = load_fixture("instrumental.dag")
    """
    from cde.parser import load_graph_file

    def _load(name):
        return load_graph_file(corpus_dir / name)

    return _load


@pytest.fixture
def rng():
    """A seeded numpy generator; every test gets a fresh one."""
    return np.random.default_rng(20240229)


@pytest.fixture(autouse=True)
def isolated_log_dir(tmp_path, monkeypatch):
    """
    Point the rotating CLI log at a temporary directory.

    This keeps test runs from writing to ~/.cde/logs.
    """
    import logging
    from app.core.config import settings

    log_dir = tmp_path / "logs"
    monkeypatch.setattr(settings, "CDE_LOG_DIR", str(log_dir))
    yield log_dir

    cde_logger = logging.getLogger("cde")
    for handler in list(cde_logger.handlers):
        if str(getattr(handler, "baseFilename", "")).startswith(str(log_dir)):
            cde_logger.removeHandler(handler)
            handler.close()


@pytest.fixture
def small_capacity(monkeypatch):
    """Shrink the dense-table capacity guard to 64 cells."""
    from app.core.config import settings

    monkeypatch.setattr(settings, "CDE_MAX_CELLS", 64)
    return 64


@pytest.fixture
def cli_runner():
    from click.testing import CliRunner

    return CliRunner()


@pytest.fixture
def client():
    """
    Create a test client for API endpoints.
    """
    from fastapi.testclient import TestClient
    from app.main import app

    with TestClient(app) as test_client:
        yield test_client


# Pytest hooks
def pytest_collection_modifyitems(config, items):
    """
    Mark tests by location: tests/unit -> unit, tests/integration -> integration.
    """
    for item in items:
        nodeid = item.nodeid.replace("\\", "/")
        if "tests/unit/" in nodeid:
            item.add_marker(pytest.mark.unit)
        if "tests/integration/" in nodeid:
            item.add_marker(pytest.mark.integration)
