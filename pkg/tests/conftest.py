"""
Shared fixtures for the gadgetgrade test suite.
"""

import sys
from pathlib import Path

import pytest
from loguru import logger

from app.config import AnalysisConfig
from app.ingest.parser import parse_dump

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    """Keep GADGETGRADE_* settings from the developer's shell out of the tests"""
    import os

    for key in list(os.environ):
        if key.startswith("GADGETGRADE_"):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture(autouse=True)
def reset_logging():
    """Commands replace loguru's sinks; point them back at the live stderr afterwards"""
    yield
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="WARNING")


@pytest.fixture
def config():
    return AnalysisConfig()


@pytest.fixture
def make_corpus():
    """Build a corpus from gadget bodies, one per address"""
    def _make(*bodies, label="test", config=None):
        lines = [f"0x{0x401000 + 0x10 * i:x} : {body}" for i, body in enumerate(bodies)]
        return parse_dump("\n".join(lines), config, label)
    return _make


@pytest.fixture
def make_gadget(make_corpus):
    def _make(body):
        return make_corpus(body).gadgets[0]
    return _make


@pytest.fixture
def golden_path():
    return FIXTURES / "golden_dump.txt"


@pytest.fixture
def golden_text(golden_path):
    return golden_path.read_text(encoding="utf-8")


@pytest.fixture
def golden_corpus(golden_text):
    return parse_dump(golden_text, None, "golden")


@pytest.fixture(scope="session")
def enumerated():
    """(body, gadget) for every alphabet gadget with up to two middle instructions"""
    from . import oracle

    bodies = list(oracle.gadget_bodies())
    text = "\n".join(f"0x{0x10000 + i:x} : {' ; '.join(body)}" for i, body in enumerate(bodies))
    corpus = parse_dump(text, None, "alphabet")
    assert len(corpus) == len(bodies)
    return list(zip(bodies, corpus.gadgets))
