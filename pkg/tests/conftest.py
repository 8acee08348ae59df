import itertools

import pytest

from smash2.pfsa import Pfsa

ACCEPTANCE_LINES: list[str] = []


def machine_g():
    # order-1 Markov chain, P(0 | last 0) = .6, P(0 | last 1) = .4
    return Pfsa.from_rows([(0.6, 0.4), (0.4, 0.6)], [[0, 1], [0, 1]])


def machine_h():
    # order-2 Markov chain on states q00, q01, q10, q11; q_ab --s--> q_bs
    p0 = [0.3, 0.2, 0.8, 0.7]
    return Pfsa.from_rows([(p, 1 - p) for p in p0], [[(i % 2) * 2, (i % 2) * 2 + 1] for i in range(4)])


def fair_coin():
    return Pfsa.from_rows([(0.5, 0.5)], [[0, 0]])


def duplicated_g():
    # q0 split into two copies with identical rows; incoming 0-edges alternate between them
    return Pfsa.from_rows(
        [(0.6, 0.4), (0.6, 0.4), (0.4, 0.6)],
        [[1, 2], [0, 2], [0, 2]],
    )


def all_words(k, d):
    return [list(w) for w in itertools.product(range(k), repeat=d)]


@pytest.fixture
def G():
    return machine_g()


@pytest.fixture
def H():
    return machine_h()


@pytest.fixture
def coin():
    return fair_coin()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
