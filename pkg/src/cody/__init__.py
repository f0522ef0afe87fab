"""Pixel-based soft actor-critic with a contrastive latent-dynamics
representation objective (prediction + temporal and multi-view InfoNCE)."""

from cody.config import ABLATIONS, TrainConfig

__version__ = "0.1.0"

__all__ = ["ABLATIONS", "TrainConfig", "__version__"]
