import pytest

from leothermal import OrbitEnvironment, builtin_stack, discretize, periodic_steady_state, uniform_field

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def builtin_cycle():
    """Converged orbit of the built-in stack at full resolution (201 nodes, tol 0.1 K)."""
    mesh = discretize(builtin_stack(), 201)
    return periodic_steady_state(uniform_field(mesh), mesh, OrbitEnvironment(), tol=0.1)


@pytest.fixture
def acceptance_line():
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
