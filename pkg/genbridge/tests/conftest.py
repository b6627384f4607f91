import pytest
from fastapi.testclient import TestClient

from genbridge.config import ServiceConfig
from genbridge.service import create_app


def client_transport(client: TestClient):
    """Adapt a test client to the wire-protocol transport convention:
    transport(method, url, body) -> (status, body_bytes)."""
    def transport(method: str, url: str, body: bytes | None):
        path = url.split("://", 1)[-1]
        path = path[path.index("/"):] if "/" in path else "/"
        r = client.request(method, path, content=body)
        return r.status_code, r.content
    return transport


@pytest.fixture()
def small_cfg() -> ServiceConfig:
    return ServiceConfig(max_request_bytes=4096)


@pytest.fixture()
def client(small_cfg) -> TestClient:
    return TestClient(create_app(small_cfg))
