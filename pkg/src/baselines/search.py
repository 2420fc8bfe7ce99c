"""Binary search on a baseline's knob (BC for Agglo, K for KMeans) for a budget γ."""

import logging
from dataclasses import replace
from typing import Callable, Optional, Tuple

from ..config import settings
from ..core.exceptions import InfeasibleBudgetError
from ..core.version_graph import VersionGraph
from ..partition.scheme import PartitioningScheme
from .agglo import agglo
from .base import BaselineConfig
from .kmeans import kmeans

logger = logging.getLogger(__name__)


def _bisect_knob(
    run: Callable[[int], PartitioningScheme],
    lo: int,
    hi: int,
    gamma: float,
    grows_with_knob: bool,
    band: float,
) -> Tuple[int, PartitioningScheme]:
    """Integer bisection over [lo, hi] for band·γ ≤ S ≤ γ.

    ``grows_with_knob`` tells whether storage rises with the knob (K) or
    falls with it (BC). Without a band hit the feasible scheme with the
    lowest checkout cost wins.
    """
    cheap, rich = (lo, hi) if grows_with_knob else (hi, lo)
    floor = run(cheap)
    if floor.storage_cost() > gamma:
        raise InfeasibleBudgetError(
            f"storage budget {gamma} is below the baseline minimum {floor.storage_cost()}"
        )
    best_knob, best = cheap, floor
    top = run(rich)
    if top.storage_cost() <= gamma:
        return rich, top

    # invariant: cheap is feasible, rich is not
    while abs(rich - cheap) > 1:
        mid = (cheap + rich) // 2
        scheme = run(mid)
        s = scheme.storage_cost()
        logger.debug(f"knob={mid} S={s} gamma={gamma}")
        if s <= gamma:
            if scheme.checkout_cost() < best.checkout_cost():
                best_knob, best = mid, scheme
            if s >= band * gamma:
                return mid, scheme
            cheap = mid
        else:
            rich = mid

    logger.warning(f"no baseline scheme in [{band}*gamma, gamma]; using knob={best_knob}")
    return best_knob, best


def search_budget(
    graph: VersionGraph,
    gamma: float,
    config: Optional[BaselineConfig] = None,
    band: Optional[float] = None,
) -> Tuple[int, PartitioningScheme]:
    """Best scheme of ``config.algorithm`` whose storage fits ``γ``.

    Returns the chosen knob value (BC or K) and its scheme.
    """
    config = config or BaselineConfig()
    band = settings.partition.band if band is None else band
    n_records = graph.n_records
    if gamma < n_records:
        raise InfeasibleBudgetError(f"storage budget {gamma} is below |R|={n_records}")

    if config.algorithm == "kmeans":
        def run(k: int) -> PartitioningScheme:
            return kmeans(graph, replace(config, n_partitions=k))

        return _bisect_knob(run, 1, len(graph), gamma, True, band)

    largest = max(graph.record_count(v) for v in graph.vids)

    def run_bc(bc: int) -> PartitioningScheme:
        return agglo(graph, replace(config, capacity=bc))

    return _bisect_knob(run_bc, largest, max(n_records, largest), gamma, False, band)
