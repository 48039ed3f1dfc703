"""Epidemics, local quarantine and multi-scale local structure on networks."""

from .graph import (
    ConvergenceError,
    Graph,
    GraphFormatError,
    epidemic_strength,
    from_edges,
    giant_component,
    lambda1,
    load_edge_list,
    save_edge_list,
    set_stats,
    triangle_weights,
)

__version__ = "0.1.0"
