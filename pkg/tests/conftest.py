import os

import pytest
from hypothesis import settings

settings.register_profile("relpot", max_examples=40, deadline=None)
settings.load_profile("relpot")


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    # results never depend on the worker count; keep the test box to one process
    monkeypatch.setenv("RELPOT_THREADS", os.environ.get("RELPOT_THREADS", "1"))
