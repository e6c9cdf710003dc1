"""Monocluster expansion verifier.

Mayer-space combinatorics (polymers, roofs, cluster-graphs), interpolated
covariances and Gaussian series evaluation for checking the bosonic
monocluster expansion on finite discretized models.
"""

__version__ = "0.1.0"

# Import directly from modules when needed; nothing is imported eagerly.

__all__ = [
    'Kernel',
    'Window',
    'Polymer',
    'ClusterGraph',
    'DiscretizedModel',
    'LambdaSeries',
    'BoundConstants',
    'ConfigLoader',
    'RunConfig',
]
