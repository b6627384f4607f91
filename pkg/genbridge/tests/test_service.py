"""Route behavior: lifecycle, limits, headers, statelessness, config."""

import json

import pytest
from conftest import client_transport
from fastapi.testclient import TestClient

from genbridge.config import ConfigError, ServiceConfig
from genbridge.service import create_app
from tntsim import wire


def test_contract_suite_passes_against_stub_service(client, small_cfg):
    passed = wire.run_contract_suite(
        client_transport(client),
        max_request_bytes=small_cfg.max_request_bytes)
    assert len(passed) == 10
    assert "imagine-echo" in passed and "oversize-413" in passed


def test_loading_lifecycle_and_503():
    app = create_app(ServiceConfig(), preload=False)
    client = TestClient(app)

    r = client.get(wire.HEALTH_PATH)
    assert r.status_code == 200
    assert wire.decode_health_response(r.content)["status"] == "loading"

    body = wire.encode_imagine_request("x", wire.contract_test_image(),
                                       strength=0.5, seed=1)
    r = client.post(wire.IMAGINE_PATH, content=body)
    assert r.status_code == 503
    assert "not loaded" in wire.decode_error(r.content)
    r = client.post(wire.CAPTION_PATH,
                    content=wire.encode_caption_request(
                        wire.contract_test_image()))
    assert r.status_code == 503

    # the startup event loads the models; requests then succeed
    with TestClient(app) as live:
        r = live.get(wire.HEALTH_PATH)
        assert wire.decode_health_response(r.content)["status"] == "ok"
        r = live.post(wire.IMAGINE_PATH, content=body)
        assert r.status_code == 200


def test_snapshot_headers_on_every_response(client):
    paths = [("GET", wire.HEALTH_PATH, None),
             ("POST", wire.IMAGINE_PATH, b"{bad"),
             ("POST", wire.CAPTION_PATH,
              wire.encode_caption_request(wire.contract_test_image()))]
    for method, path, body in paths:
        r = client.request(method, path, content=body)
        assert r.headers["X-Image-Model"] == "stub-echo-0001", path
        assert r.headers["X-Caption-Model"] == "stub-caption-0001", path


def test_oversize_rejected_even_while_loading():
    cfg = ServiceConfig(max_request_bytes=64)
    client = TestClient(create_app(cfg, preload=False))
    r = client.post(wire.CAPTION_PATH, content=b" " * 65)
    assert r.status_code == 413


def test_identical_requests_identical_bytes(client):
    body = wire.encode_imagine_request("figure", wire.contract_test_image(),
                                       strength=0.3, seed=9)
    first = client.post(wire.IMAGINE_PATH, content=body)
    second = client.post(wire.IMAGINE_PATH, content=body)
    assert first.status_code == second.status_code == 200
    assert first.content == second.content


def test_stub_caption_is_the_configured_string():
    cfg = ServiceConfig(stub_caption="ladder moon cross")
    client = TestClient(create_app(cfg))
    r = client.post(wire.CAPTION_PATH,
                    content=wire.encode_caption_request(
                        wire.contract_test_image()))
    assert wire.decode_caption_response(r.content) == "ladder moon cross"


def test_unknown_model_names_rejected():
    with pytest.raises(ConfigError, match="image model"):
        create_app(ServiceConfig(image_model="diffusion-9000"))
    with pytest.raises(ConfigError, match="caption model"):
        create_app(ServiceConfig(caption_model="nope"))


def test_error_bodies_are_wire_protocol_json(client):
    r = client.post(wire.IMAGINE_PATH,
                    content=json.dumps({"prompt": "x"}).encode())
    assert r.status_code == 400
    assert wire.decode_error(r.content)


def test_config_from_env_roundtrip():
    env = {"GENBRIDGE_PORT": "9001", "GENBRIDGE_IMAGE_MODEL": "stub",
           "GENBRIDGE_STRENGTH": "0.25", "GENBRIDGE_MAX_BYTES": "2048",
           "GENBRIDGE_STUB_CAPTION": "hi there", "GENBRIDGE_DEVICE": "cpu2"}
    cfg = ServiceConfig.from_env(env)
    assert (cfg.port, cfg.strength, cfg.max_request_bytes,
            cfg.stub_caption, cfg.device) == (9001, 0.25, 2048,
                                              "hi there", "cpu2")


def test_config_validation():
    with pytest.raises(ConfigError, match="port"):
        ServiceConfig(port=0)
    with pytest.raises(ConfigError, match="max_request_bytes"):
        ServiceConfig(max_request_bytes=0)
    with pytest.raises(ConfigError, match="strength"):
        ServiceConfig(strength=1.5)
    with pytest.raises(ConfigError, match="concurrency"):
        ServiceConfig(max_concurrency=0)
    with pytest.raises(ConfigError, match="GENBRIDGE_PORT"):
        ServiceConfig.from_env({"GENBRIDGE_PORT": "not-a-port"})
