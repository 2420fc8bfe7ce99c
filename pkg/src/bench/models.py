"""
Abstract cost comparison of five ways to store a versioned relation.

The scenario checks out a version ``v_i`` and commits the edited table
back as ``v_j`` with ``n_inserts`` new records and ``n_deletes`` removed
ones. Costs are counted in cells stored and rows touched, with ``width``
data attributes per record:

    combined-table      one table, every record carries its version array
    split-by-vlist      data table plus (rid, vlist) versioning table
    split-by-rlist      data table plus (vid, rlist) versioning table
    delta               per-version inserts and tombstones against a base
    table-per-version   every version stored as its own table
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..core.exceptions import ParameterError
from ..core.types import VersionId
from ..core.version_graph import VersionGraph, kept_parent

logger = logging.getLogger(__name__)

MODELS = ("combined-table", "split-by-vlist", "split-by-rlist", "delta", "table-per-version")


@dataclass(frozen=True)
class ModelCost:
    storage_cells: int
    commit_touch_count: int
    checkout_touch_count: int


@dataclass
class ModelCostReport:
    costs: Dict[str, ModelCost]
    checkout_vid: VersionId

    def __getitem__(self, model: str) -> ModelCost:
        return self.costs[model]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "model": model,
                "storage_cells": cost.storage_cells,
                "commit_touch_count": cost.commit_touch_count,
                "checkout_touch_count": cost.checkout_touch_count,
            }
            for model, cost in self.costs.items()
        ]
        columns = ["model", "storage_cells", "commit_touch_count", "checkout_touch_count"]
        return pd.DataFrame(rows, columns=columns)


def delta_rows(graph: VersionGraph) -> Dict[VersionId, int]:
    """Inserted plus tombstoned rows of each version against its base."""
    rows = {}
    for vid in graph.vids:
        base = kept_parent(graph, vid)
        if base is None:
            rows[vid] = graph.record_count(vid)
            continue
        mine, theirs = graph.rlist(vid), graph.rlist(base)
        rows[vid] = int(np.setdiff1d(mine, theirs).size + np.setdiff1d(theirs, mine).size)
    return rows


def _lineage(graph: VersionGraph, vid: VersionId) -> List[VersionId]:
    chain = [vid]
    while (base := kept_parent(graph, chain[-1])) is not None:
        chain.append(base)
    return chain


def compare_models(
    graph: VersionGraph,
    width: int,
    checkout_vid: Optional[VersionId] = None,
    n_inserts: int = 0,
    n_deletes: int = 0,
) -> ModelCostReport:
    """Cost of checkout-then-commit under every data model.

    ``checkout_vid`` defaults to the latest version.
    """
    if width < 1:
        raise ParameterError("width must be at least 1")
    if len(graph) == 0:
        raise ParameterError("cannot compare models on an empty graph")
    vi = max(graph.vids) if checkout_vid is None else checkout_vid
    if vi not in graph:
        raise ParameterError(f"v{vi} is not in the graph")
    if n_inserts < 0 or not 0 <= n_deletes <= graph.record_count(vi):
        raise ParameterError("insert and delete counts must fit the checked-out version")

    n_records = graph.n_records
    n_edges = graph.total_edges
    n_versions = len(graph)
    size_i = graph.record_count(vi)
    size_j = size_i + n_inserts - n_deletes
    deltas = delta_rows(graph)

    costs = {
        "combined-table": ModelCost(
            storage_cells=n_records * width + n_edges,
            commit_touch_count=size_j,
            checkout_touch_count=n_records,
        ),
        "split-by-vlist": ModelCost(
            storage_cells=n_records * (width + 1) + n_records + n_edges,
            commit_touch_count=size_j + n_inserts,
            checkout_touch_count=2 * n_records,
        ),
        "split-by-rlist": ModelCost(
            storage_cells=n_records * (width + 1) + n_versions + n_edges,
            commit_touch_count=1 + n_inserts,
            checkout_touch_count=1 + n_records,
        ),
        "delta": ModelCost(
            storage_cells=sum(deltas.values()) * (width + 1) + n_versions,
            commit_touch_count=n_inserts + n_deletes + 1,
            checkout_touch_count=sum(deltas[v] for v in _lineage(graph, vi)),
        ),
        "table-per-version": ModelCost(
            storage_cells=n_edges * width,
            commit_touch_count=size_j,
            checkout_touch_count=size_i,
        ),
    }
    return ModelCostReport(costs, vi)
