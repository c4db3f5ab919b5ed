import numpy as np
import pytest
from hypothesis import strategies as st

from delaygames.automata import LearningParams
from delaygames.game_core import MultiLevelGame, StochasticBimatrix, builtin_game

prob = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
state = st.tuples(prob, prob, prob, prob)


@st.composite
def games(draw):
    vals = draw(st.lists(prob, min_size=16, max_size=16))
    m = np.array(vals).reshape(4, 2, 2)
    return MultiLevelGame(StochasticBimatrix(m[0], m[1]), StochasticBimatrix(m[2], m[3]))


@st.composite
def learning_params(draw):
    beta = draw(st.floats(min_value=0.01, max_value=0.99))
    alpha = draw(st.floats(min_value=0.001, max_value=0.999)) * beta
    theta = draw(st.floats(min_value=0.001, max_value=1.0))
    return LearningParams(alpha, beta, theta)


def random_instance(rng):
    m = rng.random((4, 2, 2))
    game = MultiLevelGame(StochasticBimatrix(m[0], m[1]), StochasticBimatrix(m[2], m[3]))
    beta = rng.uniform(0.05, 0.95)
    params = LearningParams(rng.uniform(0.05, 0.95) * beta, beta, rng.uniform(0.01, 1.0))
    return game, params, rng.random(4)


@pytest.fixture
def game2():
    return builtin_game(2)


@pytest.fixture
def default_params():
    return LearningParams(0.02, 0.4, 0.1)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
