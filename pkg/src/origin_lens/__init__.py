"""origin-lens: image origin identification (photo vs rendered vs GAN).

A compact CNN is trained on edge-rich local patches; whole-image decisions
come from majority voting over patch predictions. The package also ships
handcrafted-feature baselines and a post-processing robustness harness.
"""

from .labels import OriginLabel

__version__ = "0.1.0"

__all__ = ["OriginLabel", "__version__"]
