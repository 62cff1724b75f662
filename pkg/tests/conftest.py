from __future__ import annotations

import logging

import pytest
from hypothesis import HealthCheck, settings

from mtbmc import corpus
from mtbmc.frontend import load

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

logging.getLogger("mtbmc").setLevel(logging.ERROR)


@pytest.fixture(scope="session")
def programs():
    """name -> (typed program, expected verdict) for the built-in corpus."""
    return {name: (load(src, f"{name}.mtc"), exp) for name, (src, exp) in corpus.benchmarks().items()}
