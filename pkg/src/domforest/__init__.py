"""Random-forest visual controller for cloth manipulation.

A desk-scale workbench: mass-spring cloth simulation, single-view depth
rendering, Gabor-patch features, mean-shift action labeling, a random-forest
controller trained by dataset-aggregation imitation learning, baseline
controllers, and a live human-in-the-loop session server.
"""

from .kernels import get_backend

__version__ = "0.1.0"

__all__ = ["get_backend", "__version__"]
