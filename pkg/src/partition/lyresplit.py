"""
LyreSplit: recursive edge-cut partitioning of a version tree.

A partition with records R, versions V and bipartite edges E is split
while |R|·|V|·δ > |E|, at an edge whose weight is at most δ|R|. Each level
of recursion grows storage by at most a factor (1+δ), so a run that stops
at depth ℓ satisfies S ≤ (1+δ)^ℓ|R| and C_avg ≤ (1/δ)·|E|/|V|.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from ..core.exceptions import EmptyScopeError, InvariantViolationError, ParameterError
from ..core.types import VersionId
from ..core.version_graph import VersionGraph
from .scheme import Edge, PartitioningScheme

logger = logging.getLogger(__name__)

PICKERS = ("balance", "min_weight")


class TreeView:
    """Array form of a version tree in preorder, reused across runs."""

    def __init__(self, tree: VersionGraph):
        if len(tree) == 0:
            raise EmptyScopeError("cannot partition an empty version graph")
        if not tree.is_tree():
            raise ParameterError("LyreSplit needs a version tree; run dag_to_tree first")
        roots = tree.roots()
        if len(roots) != 1:
            raise ParameterError(f"version tree must have one root, found {len(roots)}")

        self.graph = tree
        order: List[VersionId] = []
        stack = [roots[0]]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(tree.children(v)))

        index = {v: i for i, v in enumerate(order)}
        self.keys = order
        self.index = index
        self.parent = [-1] * len(order)
        self.weight = [0] * len(order)
        self.records = [tree.record_count(v) for v in order]
        self.common_attrs = [0] * len(order)
        all_attrs: Set[int] = set()
        for v in order:
            all_attrs |= tree.attributes(v)
        for i, v in enumerate(order):
            parents = tree.parents(v)
            if parents:
                p = parents[0]
                self.parent[i] = index[p]
                self.weight[i] = tree.weight(p, v)
                self.common_attrs[i] = len(tree.attributes(p) & tree.attributes(v))
        self.n_attributes = len(all_attrs)

    def __len__(self) -> int:
        return len(self.keys)


@dataclass
class _Partition:
    nodes: List[int]
    level: int


def _subtree_totals(
    view: TreeView, nodes: List[int]
) -> Tuple[Dict[int, int], Dict[int, int], Dict[int, int]]:
    """Per-node subtree size, record count and edge count within ``nodes``.

    Record counts telescope: a subtree's records are its root's records plus,
    per child subtree, the child subtree's records minus the edge weight.
    """
    size = {i: 1 for i in nodes}
    recs = {i: view.records[i] for i in nodes}
    edges = dict(recs)
    root = nodes[0]
    for i in reversed(nodes):
        if i == root:
            continue
        p = view.parent[i]
        size[p] += size[i]
        recs[p] += recs[i] - view.weight[i]
        edges[p] += edges[i]
    return size, recs, edges


def _balance_key(view: TreeView, i: int, size: Dict[int, int], recs: Dict[int, int],
                 n_versions: int, n_records: int) -> Tuple[int, int, VersionId]:
    child_records = recs[i]
    rest_records = n_records - recs[i] + view.weight[i]
    return (abs(2 * size[i] - n_versions), abs(child_records - rest_records), view.keys[i])


def pick_edge_cut(
    view: TreeView,
    candidates: List[int],
    size: Dict[int, int],
    recs: Dict[int, int],
    n_versions: int,
    n_records: int,
    picker: str = "balance",
) -> int:
    """Choose the child node whose incoming edge is cut.

    ``balance`` minimizes the version-count difference of the two sides,
    then the record-count difference, then the child vid. ``min_weight``
    takes the lightest edge, then the smallest child vid.
    """
    if not candidates:
        raise InvariantViolationError("no candidate edge although the split condition holds")
    if picker == "balance":
        return min(
            candidates, key=lambda i: _balance_key(view, i, size, recs, n_versions, n_records)
        )
    if picker == "min_weight":
        return min(candidates, key=lambda i: (view.weight[i], view.keys[i]))
    raise ParameterError(f"unknown edge picker '{picker}'")


def lyresplit(
    tree: VersionGraph,
    delta: float,
    picker: str = "balance",
    schema_aware: bool = False,
    view: Optional[TreeView] = None,
) -> PartitioningScheme:
    """Partition a version tree with threshold ``delta`` in (0, 1]."""
    if not (0.0 < delta <= 1.0):
        raise ParameterError(f"delta must be in (0, 1], got {delta}")
    if picker not in PICKERS:
        raise ParameterError(f"unknown edge picker '{picker}'")
    view = view or TreeView(tree)

    final: List[List[int]] = []
    cut_edges: Set[Edge] = set()
    depth = 0
    stack = [_Partition(list(range(len(view))), 0)]
    while stack:
        part = stack.pop()
        nodes = part.nodes
        size, recs, edges = _subtree_totals(view, nodes)
        root = nodes[0]
        n_v, n_r, n_e = size[root], recs[root], edges[root]

        if not n_r * n_v * delta > n_e:
            final.append(nodes)
            depth = max(depth, part.level)
            continue

        if schema_aware:
            bound = delta * view.n_attributes * n_r
            candidates = [
                i for i in nodes[1:] if view.common_attrs[i] * view.weight[i] <= bound
            ]
        else:
            bound = delta * n_r
            candidates = [i for i in nodes[1:] if view.weight[i] <= bound]
        cut = pick_edge_cut(view, candidates, size, recs, n_v, n_r, picker)

        start = nodes.index(cut)
        stop = start + size[cut]
        child_block = nodes[start:stop]
        rest = nodes[:start] + nodes[stop:]
        cut_edges.add((view.keys[view.parent[cut]], view.keys[cut]))
        logger.debug(
            f"split |V|={n_v} |R|={n_r} |E|={n_e} at edge "
            f"v{view.keys[view.parent[cut]]}->v{view.keys[cut]} (w={view.weight[cut]})"
        )
        stack.append(_Partition(rest, part.level + 1))
        stack.append(_Partition(child_block, part.level + 1))

    groups = [[view.keys[i] for i in nodes] for nodes in final]
    return PartitioningScheme.from_groups(
        view.graph,
        groups,
        delta_used=delta,
        recursion_levels=depth,
        cut_edges=frozenset(cut_edges),
        algorithm="lyresplit",
    )


def schema_aware_candidates(
    tree: VersionGraph,
    delta: float,
    n_attributes: Optional[int] = None,
    n_records: Optional[int] = None,
) -> Set[Edge]:
    """Edges with a(u,v)·w(u,v) ≤ δ·|A|·|R|, a = attributes common to u and v.

    With a static schema (a = |A| on every edge) this is {e : w ≤ δ|R|}.
    """
    view = TreeView(tree)
    n_attrs = view.n_attributes if n_attributes is None else n_attributes
    total = tree.n_records if n_records is None else n_records
    bound = delta * n_attrs * total
    return {
        (view.keys[view.parent[i]], view.keys[i])
        for i in range(1, len(view))
        if view.common_attrs[i] * view.weight[i] <= bound
    }
