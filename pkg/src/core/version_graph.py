"""
Version graph: the DAG of derivation edges between versions.

Edges carry ``weight`` = number of records shared by parent and child.
Nodes carry ``records`` (|R(v)|), ``level`` (root = 1), ``attributes``
(the version's attr_ids) and ``frequency`` (checkout frequency f_v).
"""

import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .exceptions import EmptyScopeError, MissingVersionError, StructuralCorruptionError
from .types import BipartiteStats, VersionId, VersionMeta

logger = logging.getLogger(__name__)


def as_rlist(rids: Iterable[int]) -> np.ndarray:
    """Sorted, duplicate-free int64 array of record ids."""
    if isinstance(rids, np.ndarray):
        return np.unique(rids.astype(np.int64, copy=False))
    return np.unique(np.fromiter(rids, dtype=np.int64))


class VersionGraph:
    """Read-only view over a version DAG and its rlists."""

    def __init__(
        self,
        dag: nx.DiGraph,
        rlists: Mapping[VersionId, np.ndarray],
        source: Optional["VersionGraph"] = None,
        n_duplicated: int = 0,
    ):
        self.dag = dag
        self._rlists: Dict[VersionId, np.ndarray] = dict(rlists)
        self.source = source
        self.n_duplicated = n_duplicated
        self._max_rid = max((int(r[-1]) for r in self._rlists.values() if r.size), default=-1)

    @property
    def max_rid(self) -> int:
        return self._max_rid

    # Structure -------------------------------------------------------------

    @property
    def vids(self) -> List[VersionId]:
        return sorted(self.dag.nodes)

    def __len__(self) -> int:
        return self.dag.number_of_nodes()

    def __contains__(self, vid: object) -> bool:
        return vid in self.dag

    def parents(self, vid: VersionId) -> List[VersionId]:
        return sorted(self.dag.predecessors(vid))

    def children(self, vid: VersionId) -> List[VersionId]:
        return sorted(self.dag.successors(vid))

    def roots(self) -> List[VersionId]:
        return sorted(v for v in self.dag.nodes if self.dag.in_degree(v) == 0)

    def is_tree(self) -> bool:
        return all(d <= 1 for _, d in self.dag.in_degree())

    def edges(self) -> List[Tuple[VersionId, VersionId, int]]:
        return sorted((u, v, int(d["weight"])) for u, v, d in self.dag.edges(data=True))

    def weight(self, parent: VersionId, child: VersionId) -> int:
        return int(self.dag.edges[parent, child]["weight"])

    def level(self, vid: VersionId) -> int:
        return int(self.dag.nodes[vid]["level"])

    def attributes(self, vid: VersionId) -> frozenset:
        return self.dag.nodes[vid].get("attributes", frozenset())

    def frequency(self, vid: VersionId) -> int:
        return int(self.dag.nodes[vid].get("frequency", 1))

    def topological_order(self) -> List[VersionId]:
        return list(nx.lexicographical_topological_sort(self.dag))

    # Records ---------------------------------------------------------------

    def rlist(self, vid: VersionId) -> np.ndarray:
        return self._rlists[vid]

    def record_count(self, vid: VersionId) -> int:
        return int(self._rlists[vid].size)

    @property
    def total_edges(self) -> int:
        """|E| = sum of |R(v)| over all versions."""
        return sum(int(r.size) for r in self._rlists.values())

    @property
    def n_records(self) -> int:
        return self.count_records(self._rlists.keys())

    def count_records(self, vids: Iterable[VersionId]) -> int:
        """|union of rlists| using a scratch bitset over record ids."""
        mark = np.zeros(self._max_rid + 1, dtype=bool)
        count = 0
        for v in vids:
            arr = self._rlists[v]
            fresh = arr[~mark[arr]]
            count += int(fresh.size)
            mark[fresh] = True
        return count

    def record_set(self, vids: Iterable[VersionId]) -> np.ndarray:
        """Sorted union of the rlists of ``vids``."""
        mark = np.zeros(self._max_rid + 1, dtype=bool)
        for v in vids:
            mark[self._rlists[v]] = True
        return np.flatnonzero(mark).astype(np.int64)


def build_version_graph(
    metadata: Iterable[VersionMeta],
    versioning: Mapping[VersionId, Sequence[int]],
) -> VersionGraph:
    """Build the weighted version DAG from metadata rows and rlists."""
    metas = {m.vid: m for m in metadata}
    dag = nx.DiGraph()
    rlists: Dict[VersionId, np.ndarray] = {}

    for vid, meta in metas.items():
        if vid not in versioning:
            raise MissingVersionError(f"version v{vid} has no versioning entry")
        rlists[vid] = as_rlist(versioning[vid])
        dag.add_node(
            vid,
            records=int(rlists[vid].size),
            attributes=frozenset(meta.attributes),
            frequency=int(meta.checkout_frequency),
        )

    for vid, meta in metas.items():
        for parent in meta.parents:
            if parent not in metas:
                raise MissingVersionError(f"version v{vid} references unknown parent v{parent}")
            common = np.intersect1d(rlists[parent], rlists[vid], assume_unique=True)
            dag.add_edge(parent, vid, weight=int(common.size))

    if not nx.is_directed_acyclic_graph(dag):
        cycle = nx.find_cycle(dag)
        raise StructuralCorruptionError(f"version graph contains a cycle: {cycle}")

    _assign_levels(dag)
    return VersionGraph(dag, rlists)


def _assign_levels(dag: nx.DiGraph) -> None:
    for vid in nx.topological_sort(dag):
        preds = list(dag.predecessors(vid))
        dag.nodes[vid]["level"] = 1 + max((dag.nodes[p]["level"] for p in preds), default=0)


def kept_parent(graph: VersionGraph, vid: VersionId) -> Optional[VersionId]:
    """Parent on the maximum-weight incoming edge; ties go to the lower vid."""
    parents = graph.parents(vid)
    if not parents:
        return None
    return min(parents, key=lambda p: (-graph.weight(p, vid), p))


def dag_to_tree(graph: VersionGraph) -> Tuple[VersionGraph, int]:
    """Reduce a version DAG to a tree by keeping each node's heaviest in-edge.

    Records a merge node inherits only through dropped edges become fresh
    conceptual records (|R̂|) so the tree's own bipartite graph satisfies the
    telescoping identity. Returns ``(tree, n_duplicated)``; the tree keeps a
    reference to the DAG in ``tree.source``.
    """
    if graph.is_tree():
        return graph, 0

    tree = nx.DiGraph()
    tree.add_nodes_from(graph.dag.nodes(data=True))
    next_id = graph.max_rid + 1
    aligned: Dict[VersionId, np.ndarray] = {}
    rlists: Dict[VersionId, np.ndarray] = {}
    duplicated = 0

    for vid in graph.topological_order():
        orig = graph.rlist(vid)
        parent = kept_parent(graph, vid)
        if parent is None:
            aligned[vid] = orig
            rlists[vid] = orig
            continue

        tree.add_edge(parent, vid, weight=graph.weight(parent, vid))
        parent_orig = graph.rlist(parent)
        ids = orig.copy()
        if parent_orig.size:
            pos = np.searchsorted(parent_orig, orig)
            pos_c = np.minimum(pos, parent_orig.size - 1)
            in_parent = parent_orig[pos_c] == orig
            ids[in_parent] = aligned[parent][pos_c[in_parent]]
        else:
            in_parent = np.zeros(orig.size, dtype=bool)

        dropped = [p for p in graph.parents(vid) if p != parent]
        if dropped:
            others = np.concatenate([graph.rlist(p) for p in dropped])
            inherited = ~in_parent & np.isin(orig, others)
            k = int(np.count_nonzero(inherited))
            if k:
                ids[inherited] = np.arange(next_id, next_id + k, dtype=np.int64)
                next_id += k
                duplicated += k
                logger.debug(f"v{vid}: {k} records inherited through dropped edges")

        aligned[vid] = ids
        rlists[vid] = np.sort(ids)

    _assign_levels(tree)
    return VersionGraph(tree, rlists, source=graph, n_duplicated=duplicated), duplicated


def bipartite_stats(
    graph: VersionGraph, vids: Optional[Iterable[VersionId]] = None
) -> BipartiteStats:
    """Exact (|V|, |R|, |E|) of the whole graph or of a subset of versions."""
    scope = graph.vids if vids is None else list(vids)
    if not scope:
        raise EmptyScopeError("bipartite statistics over an empty scope")
    missing = [v for v in scope if v not in graph]
    if missing:
        raise MissingVersionError(f"unknown versions {missing}")
    return BipartiteStats(
        n_versions=len(scope),
        n_records=graph.count_records(scope),
        n_edges=sum(graph.record_count(v) for v in scope),
        n_duplicated=graph.n_duplicated if vids is None else 0,
    )
