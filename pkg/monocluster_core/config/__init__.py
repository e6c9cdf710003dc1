"""Run configuration for the monocluster CLI.

Import specific components directly from their modules (for example,
`from monocluster_core.config.loader import ConfigLoader`).
"""

__all__ = [
    'run_config',
    'loader',
    'validator',
]
