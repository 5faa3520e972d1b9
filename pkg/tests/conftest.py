import json
import warnings
from pathlib import Path

import pytest

from policytone import cli, minicorpus


@pytest.fixture(scope="session")
def frozen():
    """Pinned oracle values; regenerate with tests/make_frozen.py."""
    path = Path(__file__).parent / "frozen.json"
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def mini_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("mini")
    minicorpus.generate(root, seed=7)
    return root


@pytest.fixture(scope="session")
def mini_out(mini_root):
    """One full pipeline run over the synthetic corpus, shared by tests."""
    with warnings.catch_warnings():
        # The corpus spans a single governor, so these drops are expected.
        warnings.filterwarnings(
            "ignore", message="dummy '(rajan|patel)' never active")
        rc = cli.main(["run-all", "--config", str(mini_root / "config.yaml")])
    assert rc == 0
    return mini_root / "out"
