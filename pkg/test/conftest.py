"""Shared fixtures."""
import pytest

from effent import qcore


@pytest.fixture(autouse=True)
def restore_default_tol():
    """The command line may replace the global tolerance; every test starts from the library default."""
    saved = qcore.DEFAULT_TOL
    yield
    qcore.set_default_tol(saved)
