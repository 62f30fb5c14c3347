import random

import pytest

from reactive_kernel.core import interface_signal, signal
from reactive_kernel.generate import random_program


def names(*xs):
    return [signal(x) for x in xs]


def iface(*xs):
    return frozenset(interface_signal(x) for x in xs)


@pytest.fixture
def s():
    return signal("s")


def random_programs(count, seed, **kw):
    """A reproducible list of ``(program, interface)`` pairs."""
    rng = random.Random(seed)
    return [random_program(rng, **kw) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
