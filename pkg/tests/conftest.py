import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from scmref.acm import TechProfile  # noqa: E402

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")


@pytest.fixture
def generic_tech():
    return TechProfile(n=1.2, m=1.25)


@pytest.fixture
def fdsoi_tech():
    return TechProfile(n=1.2, m=1.0)
