import sys
import warnings
from functools import lru_cache

import pytest

from deformcavity.shapes import TruncationWarning, expand
from deformcavity.spectrum import CATALOG


@lru_cache(maxsize=None)
def catalog_expansion(name, a_max=30):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return expand(CATALOG[name], a_max=a_max)


@pytest.fixture(scope="session")
def expansions():
    return {name: catalog_expansion(name) for name in CATALOG}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
