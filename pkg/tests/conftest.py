"""Session fixtures: ingested fixture repositories, cached once per run.

Fixture repos are far below the paper's 1 MB floor, so configs here relax
the size thresholds; the filter acceptance test exercises the real
defaults itself.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from support import FIXTURES, ingest_fixture


@pytest.fixture(scope="session")
def fixture_cache(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("cache")


@pytest.fixture(scope="session")
def pyfix_ws(fixture_cache):
    return ingest_fixture(FIXTURES / "pyfix_repo", fixture_cache)


@pytest.fixture(scope="session")
def jsuite_ws(fixture_cache):
    return ingest_fixture(FIXTURES / "jsuite_repo", fixture_cache)


@pytest.fixture(scope="session")
def lightning_ws(fixture_cache):
    return ingest_fixture(FIXTURES / "golden" / "lightning_repo", fixture_cache)


@pytest.fixture(scope="session")
def tutorial_ws(fixture_cache):
    return ingest_fixture(FIXTURES / "golden" / "tutorial_repo", fixture_cache)


@pytest.fixture(scope="session")
def picgo_ws(fixture_cache):
    return ingest_fixture(FIXTURES / "golden" / "picgo_repo", fixture_cache)


@pytest.fixture(scope="session")
def dump_ws(fixture_cache):
    return ingest_fixture(FIXTURES / "golden" / "dump_repo", fixture_cache)
