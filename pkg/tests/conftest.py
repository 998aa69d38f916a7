from pathlib import Path

import numpy as np
import pytest

from panelrank import make_panel

DATA_DIR = Path(__file__).resolve().parents[1] / "data" / "synthetic"


@pytest.fixture
def worked_3x2():
    """Three entities, two categories, fully symmetric under row/col swap."""
    return make_panel("2024", ["a", "b", "c"], ["g1", "g2"],
                      np.array([[2.0, 0.0], [1.0, 1.0], [0.0, 2.0]]))


@pytest.fixture
def worked_2x2():
    """Two entities, two categories, one structural zero."""
    return make_panel("2024", ["a", "b"], ["g1", "g2"],
                      np.array([[1.0, 1.0], [1.0, 0.0]]))


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def random_panel(rng: np.random.Generator, n_entities: int, n_categories: int,
                 low: float = 1.0, high: float = 100.0, year: str = "y"):
    """Strictly positive random panel with labeled rows and columns."""
    scores = rng.uniform(low, high, size=(n_entities, n_categories))
    return make_panel(year, [f"e{i:02d}" for i in range(n_entities)],
                      [f"c{j:02d}" for j in range(n_categories)], scores)
