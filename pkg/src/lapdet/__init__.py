"""Minimum determinant of the weighted graph Laplacian.

Multigraphs and spanning trees, the min-det solver, its maximum-entropy dual,
beta-density certificates and minimal-core deflation.
"""
__version__ = "0.1.0"

from .beta import BetaPmf
from .multigraph import GraphError, Multigraph

__all__ = ["BetaPmf", "GraphError", "Multigraph", "__version__"]
