import pytest

from affordsim.genbench import GenConfig, build_dataset
from affordsim.world import RoomType, build_scene

# lines reported by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


SMALL_CONFIG = dict(n_demos=48, seed=3, n_scenes_seen=4, n_scenes_unseen=2,
                    split_fractions={"train": 0.5, "valid": 0.25, "test": 0.25})


@pytest.fixture(scope="session")
def small_ds():
    return build_dataset(GenConfig(**SMALL_CONFIG))


@pytest.fixture
def kitchen():
    return build_scene(7, RoomType.KITCHEN)


@pytest.fixture
def bathroom():
    return build_scene(7, RoomType.BATHROOM)
