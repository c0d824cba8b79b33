import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_repos import build_corpus, build_mini_repo  # noqa: E402


@pytest.fixture(scope="session")
def corpus_fixture(tmp_path_factory):
    return build_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def mini_repo(tmp_path_factory):
    return build_mini_repo(tmp_path_factory.mktemp("mini"))
