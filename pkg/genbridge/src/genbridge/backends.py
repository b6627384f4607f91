"""Model backends behind the two endpoints.

A backend is a tiny object with a snapshot id, an explicit `load()`, and
one inference method. The registries below are the extension seam: a real
diffusion or captioning model plugs in as another entry; the service and
protocol layers never change. Only the weightless stub models ship here.
"""

from __future__ import annotations

from .config import ConfigError, ServiceConfig


class StubImageModel:
    """Echoes the init image back: img2img with strength pinned to zero.

    Byte-exact echo, so seeded-determinism of the protocol holds trivially.
    """

    snapshot_id = "stub-echo-0001"

    def __init__(self, cfg: ServiceConfig):
        self.device = cfg.device
        self.loaded = False

    def load(self) -> None:
        self.loaded = True

    def imagine(self, prompt: str, image_png: bytes, strength: float,
                seed: int) -> bytes:
        return image_png


class StubCaptionModel:
    """Captions every image with one configured string."""

    snapshot_id = "stub-caption-0001"

    def __init__(self, cfg: ServiceConfig):
        self.text = cfg.stub_caption
        self.loaded = False

    def load(self) -> None:
        self.loaded = True

    def caption(self, image_png: bytes) -> str:
        return self.text


IMAGE_MODELS = {"stub": StubImageModel}
CAPTION_MODELS = {"stub": StubCaptionModel}


def build_image_model(cfg: ServiceConfig):
    try:
        return IMAGE_MODELS[cfg.image_model](cfg)
    except KeyError:
        raise ConfigError(
            f"unknown image model {cfg.image_model!r}; "
            f"known: {sorted(IMAGE_MODELS)}") from None


def build_caption_model(cfg: ServiceConfig):
    try:
        return CAPTION_MODELS[cfg.caption_model](cfg)
    except KeyError:
        raise ConfigError(
            f"unknown caption model {cfg.caption_model!r}; "
            f"known: {sorted(CAPTION_MODELS)}") from None
