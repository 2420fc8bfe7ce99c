"""
Binary search on δ for a storage budget γ.

Larger δ admits more split edges, so storage grows and checkout cost
shrinks as δ increases. The search looks for a scheme with
band·γ ≤ S ≤ γ on the interval [|E|/(|R||V|), 1].
"""

import logging
from typing import Callable, Optional, Tuple

from ..config import settings
from ..core.exceptions import InfeasibleBudgetError
from ..core.version_graph import VersionGraph
from .lyresplit import TreeView, lyresplit
from .scheme import PartitioningScheme

logger = logging.getLogger(__name__)


def bisect_delta(
    run: Callable[[float], PartitioningScheme],
    measure: Callable[[PartitioningScheme], int],
    lo: float,
    gamma: float,
    band: Optional[float] = None,
    tolerance: Optional[float] = None,
    floor: Optional[PartitioningScheme] = None,
) -> Tuple[float, PartitioningScheme]:
    """Bisect δ in [lo, 1] until ``band·γ ≤ measure(scheme) ≤ γ``.

    ``floor`` (default ``run(lo)``) is the minimum-storage scheme and must
    be feasible. When the interval collapses without
    hitting the band, the feasible scheme with the largest measured
    storage is returned.
    """
    band = settings.partition.band if band is None else band
    tolerance = settings.partition.tolerance if tolerance is None else tolerance

    hi = 1.0
    top = run(hi)
    top_s = measure(top)
    if top_s <= gamma:
        logger.debug(f"delta=1 already within budget (S={top_s}, gamma={gamma})")
        return hi, top

    best_delta = lo
    best = floor if floor is not None else run(lo)
    best_s = measure(best)
    if best_s > gamma:
        raise InfeasibleBudgetError(f"storage budget {gamma} is below the minimum {best_s}")
    if best_s >= band * gamma:
        return best_delta, best

    steps = 0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2.0
        scheme = run(mid)
        s = measure(scheme)
        steps += 1
        logger.debug(f"bisect step {steps}: delta={mid:.6g} S={s} gamma={gamma}")
        if s <= gamma:
            if s > best_s:
                best_delta, best, best_s = mid, scheme, s
            if s >= band * gamma:
                return mid, scheme
            lo = mid
        else:
            hi = mid

    logger.warning(
        f"no scheme in [{band}*gamma, gamma] (gamma={gamma}); "
        f"falling back to delta={best_delta:.6g} with S={best_s}"
    )
    return best_delta, best


def binary_search_delta(
    tree: VersionGraph,
    gamma: float,
    picker: Optional[str] = None,
    schema_aware: bool = False,
    band: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> Tuple[float, PartitioningScheme]:
    """Find δ* whose LyreSplit scheme uses storage within [band·γ, γ].

    For a tree produced by ``dag_to_tree`` storage is measured on the
    original DAG and the returned scheme carries the DAG's counts.
    """
    picker = picker or settings.partition.picker
    target = tree.source or tree
    n_records = target.n_records
    if gamma < n_records:
        raise InfeasibleBudgetError(f"storage budget {gamma} is below |R|={n_records}")

    view = TreeView(tree)
    tree_records = tree.n_records
    if tree_records == 0:
        return 1.0, PartitioningScheme.single_partition(target)
    lo = min(1.0, tree.total_edges / (tree_records * len(tree)))

    def run(delta: float) -> PartitioningScheme:
        scheme = lyresplit(tree, delta, picker=picker, schema_aware=schema_aware, view=view)
        return scheme.rebased(target) if target is not tree else scheme

    floor = PartitioningScheme.from_groups(
        target, [target.vids], delta_used=lo, algorithm="lyresplit"
    )
    return bisect_delta(run, lambda s: s.storage_cost(), lo, gamma, band, tolerance, floor)
