import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from morphounify.grammar import Grammar  # noqa: E402


@pytest.fixture(scope="session")
def demo() -> Grammar:
    return Grammar.demo()
