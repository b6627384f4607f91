"""The FastAPI application: three routes, strict wire-protocol bodies.

Request handling order is size limit, then model readiness, then body
validation, so an overloaded or still-loading service never spends time
decoding payloads. Every response carries the model snapshot ids in
X-Image-Model / X-Caption-Model headers for provenance. The service keeps
no per-client state; two identical requests yield identical bytes.
"""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, Response

from tntsim import wire

from .backends import build_caption_model, build_image_model
from .config import ServiceConfig


def _json(status: int, payload: bytes) -> Response:
    return Response(content=payload, status_code=status,
                    media_type="application/json")


def create_app(cfg: ServiceConfig | None = None, *,
               preload: bool = True) -> FastAPI:
    """Build the service; `preload=False` leaves the models unloaded until
    the startup event fires (or `app.state.load_models()` is called)."""
    cfg = cfg or ServiceConfig.from_env()
    image = build_image_model(cfg)
    caption = build_caption_model(cfg)

    def loaded() -> bool:
        return image.loaded and caption.loaded

    def load_models() -> None:
        if not loaded():
            image.load()
            caption.load()

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        load_models()
        yield

    app = FastAPI(title="genbridge", docs_url=None, redoc_url=None,
                  openapi_url=None, lifespan=lifespan)
    gate = asyncio.Semaphore(cfg.max_concurrency)
    app.state.config = cfg
    app.state.load_models = load_models
    if preload:
        load_models()

    @app.middleware("http")
    async def snapshot_headers(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Image-Model"] = image.snapshot_id
        response.headers["X-Caption-Model"] = caption.snapshot_id
        return response

    def gatekeep(body: bytes) -> Response | None:
        if len(body) > cfg.max_request_bytes:
            return _json(413, wire.encode_error("request body too large"))
        if not loaded():
            return _json(503, wire.encode_error("model not loaded"))
        return None

    @app.get(wire.HEALTH_PATH)
    async def health() -> Response:
        status = "ok" if loaded() else "loading"
        return _json(200, wire.encode_health_response(status,
                                                      cfg.image_model))

    @app.post(wire.IMAGINE_PATH)
    async def imagine(request: Request) -> Response:
        body = await request.body()
        if (early := gatekeep(body)) is not None:
            return early
        try:
            req = wire.decode_imagine_request(body)
        except wire.WireProtocolError as err:
            return _json(400, wire.encode_error(str(err)))
        async with gate:
            png = image.imagine(req["prompt"], req["image_png"],
                                req["strength"], req["seed"])
        return _json(200, wire.encode_imagine_response(png))

    @app.post(wire.CAPTION_PATH)
    async def handle_caption(request: Request) -> Response:
        body = await request.body()
        if (early := gatekeep(body)) is not None:
            return early
        try:
            wire.decode_caption_request(body)
        except wire.WireProtocolError as err:
            return _json(400, wire.encode_error(str(err)))
        async with gate:
            text = caption.caption(body)
        return _json(200, wire.encode_caption_response(text))

    return app
