"""
Pytest configuration and shared fixtures for testing.
"""

import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np
import pytest

# Tests never need durable writes
os.environ.setdefault("CVDSTORE_FSYNC", "false")

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.types import DType, VersionMeta  # noqa: E402
from src.core.version_graph import VersionGraph, build_version_graph  # noqa: E402
from src.engine import VersioningEngine  # noqa: E402
from src.storage.manifest import disarm_failpoints  # noqa: E402

# Four versions with one merge: v4 derives from v2 and v3
MERGE_RLISTS = {
    1: [1, 2, 3],
    2: [2, 3, 4],
    3: [3, 5, 6, 7],
    4: [2, 3, 4, 5, 6, 7],
}
MERGE_PARENTS = {2: [1], 3: [1], 4: [2, 3]}

PEOPLE_SCHEMA = [("id", DType.INTEGER), ("name", DType.TEXT), ("age", DType.INTEGER)]
PEOPLE_ROWS = [
    (1, "ada", 36),
    (2, "bob", 41),
    (3, "cyd", 29),
    (4, "dee", 52),
    (5, "eve", 33),
]


def make_graph(
    rlists: Mapping[int, Iterable[int]],
    parents: Optional[Mapping[int, Sequence[int]]] = None,
    attributes: Optional[Mapping[int, Sequence[int]]] = None,
) -> VersionGraph:
    """Version graph from explicit rlists and parent lists."""
    parents = parents or {}
    attributes = attributes or {}
    metas = [
        VersionMeta(
            vid=vid,
            parents=tuple(parents.get(vid, ())),
            attributes=tuple(attributes.get(vid, (1,))),
        )
        for vid in sorted(rlists)
    ]
    return build_version_graph(metas, {vid: list(r) for vid, r in rlists.items()})


def random_tree(
    rng: np.random.Generator,
    n_versions: int,
    root_records: int = 20,
    max_new: int = 8,
) -> VersionGraph:
    """Random version tree where children only inherit from their parent."""
    rlists: Dict[int, np.ndarray] = {1: np.arange(1, root_records + 1)}
    parents: Dict[int, list] = {}
    next_rid = root_records + 1
    for vid in range(2, n_versions + 1):
        parent = int(rng.integers(1, vid))
        base = rlists[parent]
        keep = base[rng.random(base.size) > rng.uniform(0.0, 0.5)]
        n_new = int(rng.integers(1, max_new + 1))
        fresh = np.arange(next_rid, next_rid + n_new)
        next_rid += n_new
        rlists[vid] = np.concatenate([keep, fresh])
        parents[vid] = [parent]
    return make_graph(rlists, parents)


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_path = tempfile.mkdtemp()
    yield Path(temp_path)
    # Cleanup
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def engine(temp_dir):
    """Versioning engine over an empty root."""
    yield VersioningEngine(temp_dir / "root")
    disarm_failpoints()


@pytest.fixture
def people(engine):
    """CVD 'people' whose v1 holds five keyed rows."""
    engine.init("people", PEOPLE_SCHEMA, primary_key=["id"], rows=PEOPLE_ROWS)
    return engine


@pytest.fixture
def merge_graph():
    return make_graph(MERGE_RLISTS, MERGE_PARENTS)


@pytest.fixture
def chain_graph():
    """v1 -> v2 -> v3 -> v4, each version drops one record and adds two."""
    return make_graph(
        {1: [1, 2, 3, 4], 2: [2, 3, 4, 5, 6], 3: [3, 4, 5, 6, 7, 8], 4: [4, 5, 6, 7, 8, 9, 10]},
        {2: [1], 3: [2], 4: [3]},
    )


@pytest.fixture
def tree_factory():
    return random_tree
