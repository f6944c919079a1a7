from __future__ import annotations

import pytest

from oltrsim.core import AttractionProfile, PositionBias
from oltrsim.data_ingest import builtin_profile


@pytest.fixture(scope="session")
def profile10() -> AttractionProfile:
    """The canonical 10-item MovieLens-derived profile."""
    return builtin_profile("movielens10")


@pytest.fixture(scope="session")
def bias3() -> PositionBias:
    return PositionBias((0.95, 0.90, 0.85))
