import pytest

from gafsim.fock import build_basis, make_basis_kernel
from gafsim.measure import RhoField, WeightSpec

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def weight2():
    return WeightSpec.radial_power(2.0)


@pytest.fixture(scope="session")
def weight3():
    return WeightSpec.radial_power(3.0)


@pytest.fixture(scope="session")
def weight4():
    return WeightSpec.radial_power(4.0)


@pytest.fixture(scope="session")
def basis2_L10():
    return build_basis(2.0, 10.0, 1.5)


@pytest.fixture(scope="session")
def kernel2_L10(basis2_L10):
    return make_basis_kernel(basis2_L10)


@pytest.fixture(scope="session")
def basis3_L5():
    return build_basis(3.0, 5.0, 1.4)


@pytest.fixture(scope="session")
def kernel3_L5(basis3_L5):
    return make_basis_kernel(basis3_L5)


@pytest.fixture(scope="session")
def field2_L20(weight2):
    return RhoField(weight2, L=20.0)
