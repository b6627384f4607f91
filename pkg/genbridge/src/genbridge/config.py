"""Service configuration, sourced from the environment.

Every knob has a GENBRIDGE_* variable so the sidecar can be configured
where it is deployed, with no config file to ship.
"""

from __future__ import annotations

import os
from dataclasses import dataclass


class ConfigError(ValueError):
    """Bad service configuration."""


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8077
    image_model: str = "stub"
    caption_model: str = "stub"
    device: str = "cpu"
    strength: float = 0.5
    max_request_bytes: int = 1 << 20
    max_concurrency: int = 1
    stub_caption: str = "a tangram figure"

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port out of range: {self.port}")
        if self.max_request_bytes <= 0:
            raise ConfigError("max_request_bytes must be positive")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if not 0.0 <= self.strength <= 1.0:
            raise ConfigError(f"strength must lie in [0, 1], got {self.strength}")
        if not self.stub_caption.strip():
            raise ConfigError("stub caption must be nonempty")

    @classmethod
    def from_env(cls, env: dict | None = None) -> "ServiceConfig":
        env = os.environ if env is None else env

        def pick(name: str, default, cast):
            raw = env.get(f"GENBRIDGE_{name}")
            if raw is None:
                return default
            try:
                return cast(raw)
            except ValueError as err:
                raise ConfigError(f"GENBRIDGE_{name}={raw!r}: {err}") from err

        return cls(
            host=pick("HOST", cls.host, str),
            port=pick("PORT", cls.port, int),
            image_model=pick("IMAGE_MODEL", cls.image_model, str),
            caption_model=pick("CAPTION_MODEL", cls.caption_model, str),
            device=pick("DEVICE", cls.device, str),
            strength=pick("STRENGTH", cls.strength, float),
            max_request_bytes=pick("MAX_BYTES", cls.max_request_bytes, int),
            max_concurrency=pick("MAX_CONCURRENCY", cls.max_concurrency, int),
            stub_caption=pick("STUB_CAPTION", cls.stub_caption, str),
        )
