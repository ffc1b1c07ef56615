import json

import pytest

from levystop import catalog, set_language
from levystop.models import Family, LevyModel


@pytest.fixture(autouse=True)
def english():
    set_language("en")
    yield
    set_language("en")


@pytest.fixture
def models():
    return catalog()


@pytest.fixture
def bm():
    return LevyModel(Family.BROWNIAN_DRIFT, mu=0.0, sigma=1.0)


@pytest.fixture
def bm_down():
    """Brownian motion drifting down, Phi(0) = 2"""
    return LevyModel(Family.BROWNIAN_DRIFT, mu=-1.0, sigma=1.0)


@pytest.fixture
def model_file(tmp_path):
    def write(model, name="model.json"):
        path = tmp_path / name
        payload = model.to_dict() if isinstance(model, LevyModel) else model
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return write
