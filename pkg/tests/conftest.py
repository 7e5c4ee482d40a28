from importlib import resources

import pytest
from hypothesis import settings

from aleatoric import model

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def _fixture_path(name):
    return resources.files("aleatoric.fixtures").joinpath(name)


@pytest.fixture(scope="session")
def dice():
    return model.load_path(_fixture_path("dice.json"))


@pytest.fixture(scope="session")
def pig():
    return model.load_path(_fixture_path("pig.json"))


@pytest.fixture(scope="session")
def kripke():
    return model.load_kripke_path(_fixture_path("kripke.json"))


@pytest.fixture(scope="session")
def fixture_dir():
    return _fixture_path("")
