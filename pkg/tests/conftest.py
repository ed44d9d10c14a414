import pytest

from minmaps import presets


@pytest.fixture(scope="session")
def z2_33():
    return presets.z_squared_field(n=33)


@pytest.fixture(scope="session")
def z2_65():
    return presets.z_squared_field(n=65)


@pytest.fixture(scope="session")
def z2_mixed_33():
    return presets.z_squared_mixed_field(n=33)


@pytest.fixture(scope="session")
def paper_33():
    return presets.paper_example_field(nx=33)


@pytest.fixture(scope="session")
def identity_33():
    return presets.identity_hyperbolic_field()


@pytest.fixture(scope="session")
def constant_33():
    return presets.constant_field()


@pytest.fixture(scope="session")
def mobius_33():
    return presets.mobius_field()


@pytest.fixture(scope="session")
def affine_33():
    return presets.affine_field()
