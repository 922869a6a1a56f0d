import pytest

from htbif.model import ModelParams


@pytest.fixture
def desk() -> ModelParams:
    """Default desk-scale configuration: b = d = 1, a = c = 1, lam = 25, mu = 50."""
    return ModelParams()
