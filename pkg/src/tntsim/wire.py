"""HTTP wire protocol shared by the remote backend and the image service.

Endpoints (JSON bodies, UTF-8):

    POST /v1/imagine  {"prompt", "init_image_png_b64", "strength", "seed"}
                      -> 200 {"image_png_b64"}
    POST /v1/caption  {"image_png_b64"} -> 200 {"text"}
    GET  /v1/health   -> 200 {"status", "backend"}
    errors            -> 4xx/5xx {"error"}

This module owns the byte-level encoding (PNG round trips, base64, JSON
schemas), a replayable fixture transport so client code can be tested with
no live service, and a transport-agnostic contract suite that both the
client and any server implementation must pass.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import io
import json
import re
from typing import Callable

import numpy as np

IMAGINE_PATH = "/v1/imagine"
CAPTION_PATH = "/v1/caption"
HEALTH_PATH = "/v1/health"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class WireProtocolError(ValueError):
    """A body failed to parse or validate against the protocol schema."""


def array_to_png(pixels: np.ndarray) -> bytes:
    """Encode a 2-d array as grayscale PNG; {0,1} arrays map to {0,255}."""
    from PIL import Image

    a = np.asarray(pixels)
    if a.ndim != 2:
        raise WireProtocolError("image array must be 2-d")
    if a.dtype != np.uint8:
        a = a.astype(np.uint8)
    if a.max(initial=0) <= 1:
        a = a * 255
    buf = io.BytesIO()
    Image.fromarray(a, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def png_to_array(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a binary uint8 array (threshold at mid-gray)."""
    from PIL import Image

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as err:
        # decoder messages embed object reprs; keep the body deterministic
        raise WireProtocolError(
            f"undecodable PNG: {type(err).__name__}") from err
    gray = np.asarray(img.convert("L"))
    return (gray >= 128).astype(np.uint8)


def _b64encode(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _b64decode(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as err:
        raise WireProtocolError(f"bad base64: {err}") from err


def _parse_json(raw: bytes) -> dict:
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise WireProtocolError(f"malformed JSON body: {err}") from err
    if not isinstance(body, dict):
        raise WireProtocolError("body must be a JSON object")
    return body


def _field(body: dict, name: str, kind) -> object:
    if name not in body:
        raise WireProtocolError(f"missing field {name!r}")
    value = body[name]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise WireProtocolError(f"field {name!r} has wrong type")
    return value


# ----------------------------------------------------------- body codecs

def encode_imagine_request(prompt: str, image: np.ndarray,
                           strength: float, seed: int) -> bytes:
    body = {"prompt": prompt, "init_image_png_b64": _b64encode(array_to_png(image)),
            "strength": float(strength), "seed": int(seed)}
    return json.dumps(body, sort_keys=True).encode("utf-8")


def decode_imagine_request(raw: bytes) -> dict:
    """Parse and validate an imagine request; returns fields with the
    image decoded to an array under key "image"."""
    body = _parse_json(raw)
    prompt = _field(body, "prompt", str)
    png_b64 = _field(body, "init_image_png_b64", str)
    strength = _field(body, "strength", float)
    seed = _field(body, "seed", int)
    image = png_to_array(_b64decode(png_b64))
    return {"prompt": prompt, "image": image, "strength": strength,
            "seed": seed, "image_png": _b64decode(png_b64)}


def encode_imagine_response(png: bytes) -> bytes:
    return json.dumps({"image_png_b64": _b64encode(png)},
                      sort_keys=True).encode("utf-8")


def decode_imagine_response(raw: bytes) -> np.ndarray:
    body = _parse_json(raw)
    return png_to_array(_b64decode(_field(body, "image_png_b64", str)))


def encode_caption_request(image: np.ndarray) -> bytes:
    body = {"image_png_b64": _b64encode(array_to_png(image))}
    return json.dumps(body, sort_keys=True).encode("utf-8")


def decode_caption_request(raw: bytes) -> np.ndarray:
    body = _parse_json(raw)
    return png_to_array(_b64decode(_field(body, "image_png_b64", str)))


def encode_caption_response(text: str) -> bytes:
    return json.dumps({"text": text}, sort_keys=True).encode("utf-8")


def decode_caption_response(raw: bytes) -> str:
    body = _parse_json(raw)
    text = _field(body, "text", str)
    if not text:
        raise WireProtocolError("caption text is empty")
    return text


def encode_health_response(status: str, backend: str) -> bytes:
    return json.dumps({"status": status, "backend": backend},
                      sort_keys=True).encode("utf-8")


def decode_health_response(raw: bytes) -> dict:
    body = _parse_json(raw)
    return {"status": _field(body, "status", str),
            "backend": _field(body, "backend", str)}


def encode_error(message: str) -> bytes:
    return json.dumps({"error": message}, sort_keys=True).encode("utf-8")


def decode_error(raw: bytes) -> str:
    """Best-effort extraction of an error body; never raises."""
    try:
        body = _parse_json(raw)
        err = body.get("error")
        return err if isinstance(err, str) else raw.decode("utf-8", "replace")
    except WireProtocolError:
        return raw.decode("utf-8", "replace")


def tokenize_caption(text: str) -> list[str]:
    """Lowercased alphanumeric runs, in order of appearance."""
    return _TOKEN_RE.findall(text.lower())


# ------------------------------------------------------ fixture transport

def _fixture_key(method: str, url: str, body: bytes | None) -> str:
    h = hashlib.sha256()
    h.update(method.encode())
    h.update(b"\x00")
    # key on the path so the same fixtures serve any host:port
    path = url.split("://", 1)[-1]
    path = path[path.index("/"):] if "/" in path else "/"
    h.update(path.encode())
    h.update(b"\x00")
    h.update(body or b"")
    return h.hexdigest()


class FixtureTransport:
    """Replay (or record) canned responses keyed by request bytes.

    The fixture file is JSON: {key: {"status": int, "body_b64": str,
    "method": str, "path": str}}. Replay raises KeyError for any request
    that was never recorded, which keeps tests honest about coverage.
    """

    def __init__(self, fixtures: dict, record_to=None, inner=None):
        self.fixtures = fixtures
        self._record_to = record_to
        self._inner = inner

    @classmethod
    def replay(cls, path) -> "FixtureTransport":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def recording(cls, path, inner: Callable) -> "FixtureTransport":
        return cls({}, record_to=path, inner=inner)

    def __call__(self, method: str, url: str, body: bytes | None):
        key = _fixture_key(method, url, body)
        if self._inner is not None:
            status, raw = self._inner(method, url, body)
            path = url.split("://", 1)[-1]
            self.fixtures[key] = {
                "status": status, "body_b64": _b64encode(raw),
                "method": method,
                "path": path[path.index("/"):] if "/" in path else "/"}
            return status, raw
        entry = self.fixtures[key]
        return entry["status"], _b64decode(entry["body_b64"])

    def save(self) -> None:
        if self._record_to is None:
            raise ValueError("transport was not opened for recording")
        with open(self._record_to, "w", encoding="utf-8") as fh:
            json.dump(self.fixtures, fh, indent=2, sort_keys=True)
            fh.write("\n")


def reference_stub_transport(caption_text: str = "a tangram figure",
                             backend_name: str = "stub",
                             max_request_bytes: int | None = None) -> Callable:
    """In-process reference implementation of the stub service semantics.

    imagine echoes the init image back, caption returns a fixed string,
    protocol violations map to 400 and oversize bodies to 413. Client
    fixtures are recorded against this; any real server must behave the
    same under `run_contract_suite`.
    """
    def transport(method: str, url: str, body: bytes | None):
        path = url.split("://", 1)[-1]
        path = path[path.index("/"):] if "/" in path else "/"
        if max_request_bytes is not None and body is not None \
                and len(body) > max_request_bytes:
            return 413, encode_error("request body too large")
        if method == "GET" and path == HEALTH_PATH:
            return 200, encode_health_response("ok", backend_name)
        try:
            if method == "POST" and path == IMAGINE_PATH:
                req = decode_imagine_request(body or b"")
                return 200, encode_imagine_response(req["image_png"])
            if method == "POST" and path == CAPTION_PATH:
                decode_caption_request(body or b"")
                return 200, encode_caption_response(caption_text)
        except WireProtocolError as err:
            return 400, encode_error(str(err))
        return 404, encode_error(f"no route: {method} {path}")

    return transport


# -------------------------------------------------------- contract suite

class WireContractFailure(AssertionError):
    """A transport violated the wire protocol contract."""


def _expect(cond: bool, check: str, detail: str = ""):
    if not cond:
        raise WireContractFailure(f"{check}: {detail}" if detail else check)


def contract_test_image() -> np.ndarray:
    """Small fixed binary image used by every contract check."""
    img = np.zeros((16, 16), dtype=np.uint8)
    img[4:12, 4:12] = 1
    img[6:10, 6:10] = 0
    return img


def run_contract_suite(transport: Callable, base_url: str = "",
                       max_request_bytes: int | None = None) -> list[str]:
    """Exercise a transport against every protocol rule; returns the names
    of the checks that passed, raising WireContractFailure on the first
    violation.

    `transport(method, url, body) -> (status, body_bytes)` may be a live
    HTTP client, an in-process server shim, or a fixture replay. The server
    side is expected to run the stub model: imagine echoes the init image
    and caption returns a fixed nonempty string.
    """
    passed = []

    def check(name: str):
        passed.append(name)

    img = contract_test_image()

    status, raw = transport("GET", base_url + HEALTH_PATH, None)
    _expect(status == 200, "health-status", f"got {status}")
    health = decode_health_response(raw)
    _expect(health["status"] in ("ok", "loading"), "health-schema",
            f"unexpected status {health['status']!r}")
    check("health")

    body = encode_imagine_request("figure", img, strength=0.5, seed=7)
    status, raw = transport("POST", base_url + IMAGINE_PATH, body)
    _expect(status == 200, "imagine-status", f"got {status}")
    out = decode_imagine_response(raw)
    _expect(out.shape == img.shape, "imagine-shape", f"got {out.shape}")
    _expect(bool(np.array_equal(out, img)), "imagine-echo",
            "stub must echo the init image")
    check("imagine-echo")

    status2, raw2 = transport("POST", base_url + IMAGINE_PATH, body)
    _expect(status2 == status and raw2 == raw, "imagine-determinism",
            "identical request must return identical bytes")
    check("imagine-determinism")

    body = encode_caption_request(img)
    status, raw = transport("POST", base_url + CAPTION_PATH, body)
    _expect(status == 200, "caption-status", f"got {status}")
    text = decode_caption_response(raw)
    _expect(len(tokenize_caption(text)) >= 1, "caption-tokens",
            f"caption {text!r} has no tokens")
    check("caption")

    for name, path, bad in [
            ("imagine-malformed-json", IMAGINE_PATH, b"{not json"),
            ("imagine-missing-field", IMAGINE_PATH,
             json.dumps({"prompt": "x"}).encode()),
            ("imagine-bad-png", IMAGINE_PATH, json.dumps(
                {"prompt": "x", "init_image_png_b64": _b64encode(b"nope"),
                 "strength": 0.5, "seed": 1}).encode()),
            ("caption-malformed-json", CAPTION_PATH, b"\xff\xfe"),
            ("caption-empty-image", CAPTION_PATH,
             json.dumps({"image_png_b64": ""}).encode()),
    ]:
        status, raw = transport("POST", base_url + path, bad)
        _expect(400 <= status < 500, name, f"got {status}")
        _expect(bool(decode_error(raw)), name, "error body missing")
        check(name)

    if max_request_bytes is not None:
        pad = b" " * (max_request_bytes + 1)
        status, raw = transport("POST", base_url + CAPTION_PATH, pad)
        _expect(status == 413, "oversize-413", f"got {status}")
        check("oversize-413")

    return passed
