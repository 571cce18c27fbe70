import pytest

from taxiassure.sim import PRESETS, TRAIN_ENVS, generate_missions
from taxiassure.training import train_model


@pytest.fixture(scope="session")
def train_trajs():
    # 26 missions x 200 steps = 5,200 frames over the two training conditions
    return generate_missions([PRESETS[e] for e in TRAIN_ENVS], 26, 200, seed=1)


@pytest.fixture(scope="session")
def trained(train_trajs):
    return train_model(train_trajs)


@pytest.fixture(scope="session")
def model(trained):
    return trained[0]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
