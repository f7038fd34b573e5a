"""
Shared pytest fixtures and configuration for the entire test suite.
"""

import os
import sys
import json
import shutil
import tempfile
from typing import Any, Dict, Generator, List

import pytest

# Add project root to Python path for imports
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# Set test environment variables
os.environ["ENVIRONMENT"] = "test"
os.environ["HARDYLAB_THREADS"] = "1"
os.environ["HARDYLAB_LOG_LEVEL"] = "WARNING"

from projects.hardylab.core.caching import get_operator_cache
from projects.hardylab.core.grid import Cube, Grid
from projects.hardylab.core.vexp import ExponentProfile
from projects.hardylab.weights.weights import MatrixWeight, weight_from_preset


@pytest.fixture(scope="session")
def test_env_vars() -> Dict[str, str]:
    """Provide test environment variables."""
    return {
        "ENVIRONMENT": "test",
        "HARDYLAB_THREADS": "1",
        "HARDYLAB_LOG_LEVEL": "WARNING"
    }


@pytest.fixture(scope="function")
def temp_dir() -> Generator[str, None, None]:
    """Create a temporary directory for test files."""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture(autouse=True)
def clean_operator_cache() -> Generator[None, None, None]:
    """Every test starts from an empty operator cache."""
    get_operator_cache().invalidate_cache()
    yield
    get_operator_cache().invalidate_cache()


@pytest.fixture(scope="function")
def grid_1d() -> Grid:
    """32 cells on [-4, 4]"""
    return Grid(1, 5, 4.0)


@pytest.fixture(scope="function")
def grid_2d() -> Grid:
    """16 x 16 cells on [-2, 2]^2"""
    return Grid(2, 4, 2.0)


@pytest.fixture(scope="function")
def p_two(grid_1d) -> ExponentProfile:
    return ExponentProfile.constant(grid_1d, 2.0)


@pytest.fixture(scope="function")
def identity_weight(grid_1d) -> MatrixWeight:
    return weight_from_preset(grid_1d, "identity", {"m": 2})


@pytest.fixture(scope="function")
def diag_weight(grid_1d) -> MatrixWeight:
    return weight_from_preset(grid_1d, "diag_power", {"a": [0.5, 0.25]})


@pytest.fixture(scope="function")
def small_catalog(grid_1d) -> List[Cube]:
    """A handful of cubes of several sizes inside the box"""
    return [
        Cube((0.0,), 2.0),
        Cube((-1.0,), 2.0),
        Cube((1.5,), 1.0),
        Cube((0.0,), 4.0),
        Cube((-2.0,), 4.0),
    ]


@pytest.fixture(scope="function")
def config_data() -> Dict[str, Any]:
    """Small but complete experiment configuration"""
    return {
        "grid": {"n": 1, "J": 5, "L_box": 4.0},
        "exponent": {"preset": "constant", "params": {"p": 2.0}},
        "weight": {"preset": "identity", "params": {"m": 2}},
        "catalog": {"random_count": 2, "seed": 7, "min_edge": 1.0},
        "decomposition": {"s": 0, "K_levels": 3},
        "kernel": {"name": "hilbert"},
        "suite": {"count": 2, "seed": 11}
    }


@pytest.fixture(scope="function")
def config_file(temp_dir, config_data) -> str:
    """config_data written to a JSON file"""
    path = os.path.join(temp_dir, "config.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config_data, handle)
    return path


@pytest.fixture(scope="function")
def grid_fine() -> Grid:
    """64 cells on [-4, 4]"""
    return Grid(1, 6, 4.0)


@pytest.fixture(scope="function")
def fine_p_two(grid_fine) -> ExponentProfile:
    return ExponentProfile.constant(grid_fine, 2.0)


@pytest.fixture(scope="function")
def fine_identity(grid_fine) -> MatrixWeight:
    return weight_from_preset(grid_fine, "identity", {"m": 2})
