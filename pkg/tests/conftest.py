import numpy as np
import pytest

from dc2g.dataset import WorldSpec, generate_world
from dc2g.semantic import Palette


@pytest.fixture(scope="session")
def palette():
    return Palette.default()


@pytest.fixture(scope="session")
def t5(palette):
    """The pinned 5x5 fixture: road row 4, driveway (3,2), walkway (2,2),
    goal (1,2), house around the door, grass elsewhere."""
    return generate_world(WorldSpec(seed=0, height=5, width=5), palette)


# hand-derived distances to the T5 goal (1,2); -2 marks untraversable
T5_DIST = np.array(
    [
        [-2, -2, -2, -2, -2],
        [-2, -2, 0, -2, -2],
        [-2, -2, 1, -2, -2],
        [-2, -2, 2, -2, -2],
        [5, 4, 3, 4, 5],
    ],
    dtype=np.int32,
)

# encode_c2g grays for T5: d_max = 5, gray = round(255 * (1 - d/6))
T5_GRAY = {0: 255, 1: 213, 2: 170, 3: 128, 4: 85, 5: 43}
