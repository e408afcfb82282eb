"""Shared fixtures: JIT warmup and synthetic demo workspaces.

The small 128 px world is generated once per session and copied per test
when a test needs to mutate it; large worlds used by the acceptance tests
live in test_acceptance.py so only that module pays their cost.
"""

import shutil

import pytest

from heatlab import kernels
from heatlab.synthetic import SyntheticSpec, write_synthetic_workspace
from heatlab.workspace import catalog_scenes


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # pay the numba JIT cost before any timed section runs
    kernels.warmup()


@pytest.fixture(scope="session")
def small_world_dir(tmp_path_factory):
    """Pristine 128 px demo city. Session-wide; treat as read-only."""
    root = tmp_path_factory.mktemp("world128") / "synthville"
    write_synthetic_workspace(SyntheticSpec(size=128, n_scenes=12, seed=7), root)
    return root


@pytest.fixture(scope="session")
def small_ws_ro(small_world_dir):
    """Catalog over the pristine small world. Read-only."""
    return catalog_scenes(small_world_dir)


@pytest.fixture()
def small_ws(small_world_dir, tmp_path):
    """Private mutable copy of the small world."""
    dst = tmp_path / "synthville"
    shutil.copytree(small_world_dir, dst)
    return catalog_scenes(dst)
