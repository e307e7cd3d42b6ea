import json

import numpy as np
import pytest

from toonpairs.fixtures import make_fixture_corpus

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """32-record synthetic corpus shared by the dataset-level tests (read-only)."""
    root = tmp_path_factory.mktemp("corpus")
    return make_fixture_corpus(root)


def write_config(path, data):
    path.write_text(json.dumps(data))
    return path
