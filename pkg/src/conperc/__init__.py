"""Classical and concurrence percolation on hierarchical flowers and real networks."""

__version__ = "0.1.0"

from .connectivity import CLASSICAL, QUANTUM, Calculus, PathEnsemble, ensemble_crossing, para, seri
from .flower import (
    FlowerSpec,
    decompose_paths,
    dimension,
    finite_size_threshold,
    nu_exact,
    nu_fit,
    rg_map,
    sponge_crossing,
    threshold_exact,
)
from .weights import DomainError, LinkWeight

__all__ = [
    "CLASSICAL",
    "QUANTUM",
    "Calculus",
    "DomainError",
    "FlowerSpec",
    "LinkWeight",
    "PathEnsemble",
    "decompose_paths",
    "dimension",
    "ensemble_crossing",
    "finite_size_threshold",
    "nu_exact",
    "nu_fit",
    "para",
    "rg_map",
    "seri",
    "sponge_crossing",
    "threshold_exact",
]
