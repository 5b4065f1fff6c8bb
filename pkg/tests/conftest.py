from __future__ import annotations

import pytest

from airsteward.planner import default_knowledge_base
from airsteward.sim import default_sim_params


@pytest.fixture(scope="session")
def kb():
    return default_knowledge_base()


@pytest.fixture(scope="session")
def sim_params():
    return default_sim_params()
