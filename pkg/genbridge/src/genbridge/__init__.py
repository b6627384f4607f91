"""HTTP sidecar exposing image generation and captioning to the simulator.

The service speaks exactly the wire protocol the simulator's remote backend
expects; the shipped "stub" models (echo / constant caption) let the whole
protocol surface run and be contract-tested without any model weights.
"""

from .config import ConfigError, ServiceConfig
from .service import create_app

__all__ = ["ConfigError", "ServiceConfig", "create_app"]
