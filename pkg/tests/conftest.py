import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridshield.arena import gridworld_from_ascii
from gridshield.maps import MAZE_5X5


@pytest.fixture(scope="session")
def maze():
    """The six-decision 5x5 maze with three parallel corridors."""
    return gridworld_from_ascii(MAZE_5X5)


@pytest.fixture(scope="session")
def corridor3():
    """A 1x3 straight corridor: two decision endpoints."""
    return gridworld_from_ascii("...")
