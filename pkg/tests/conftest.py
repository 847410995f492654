import pytest

from ramzzz.arch import DramArchSpec, PowerStateSpec, load_arch_spec


def toy_spec(powers, energies=None, resync=None, name="toy"):
    """Chain with the clock at 1 GHz so resync ns == cycles."""
    energies = energies or [None] * len(powers)
    resync = resync or [1.0] * len(powers)
    states = [PowerStateSpec("ACT", 1.0, 0)]
    states += [PowerStateSpec(f"S{i + 1}", p, r, e)
               for i, (p, e, r) in enumerate(zip(powers, energies, resync))]
    return DramArchSpec(name, tuple(states), cpu_freq_ghz=1.0)


@pytest.fixture
def ddr3():
    return load_arch_spec("DDR3")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
