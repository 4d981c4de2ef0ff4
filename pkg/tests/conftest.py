import sys
from pathlib import Path

import pytest

# Allow test modules to import shared helpers from each other
# (tests/ is not a package).
sys.path.insert(0, str(Path(__file__).resolve().parent))

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def algebras_dir() -> Path:
    """The shipped JSON corpus used by the CLI-facing tests."""
    d = REPO_ROOT / "algebras"
    assert d.is_dir(), "corpus directory missing; run `python -m vla.catalog algebras`"
    return d
