import pytest

from zakradar.ddcore import make_config
from zakradar.filters import FilterSpec


@pytest.fixture(scope="session")
def cfg():
    return make_config()


@pytest.fixture(scope="session")
def specs():
    return {"sinc": FilterSpec.sinc(), "gs": FilterSpec.gaussian_sinc(), "gauss": FilterSpec.gaussian()}
