"""Clustering baselines for comparison with LyreSplit."""

from .agglo import agglo, minhash_signatures, sample_tau
from .base import BaselineConfig, Deadline, incidence_matrix
from .kmeans import kmeans
from .search import search_budget

__all__ = [
    "BaselineConfig",
    "Deadline",
    "agglo",
    "incidence_matrix",
    "kmeans",
    "minhash_signatures",
    "sample_tau",
    "search_budget",
]
