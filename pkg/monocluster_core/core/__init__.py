"""Core package for the monocluster expansion.

Implementation modules are not imported at package import time. Import
specific modules directly, e.g.:

    from monocluster_core.core.cluster_graph import ClusterGraph

"""

__all__ = [
    'kernel',
    'mayer_lattice',
    'polymer',
    'cluster_graph',
    'interpolation',
    'series',
    'wick',
    'simplex',
    'gaussian_engine',
    'bounds_suite',
    'worker_pool',
]
