"""Acceptance gate for the sidecar: the shared-protocol claim (A9).

One printed line reports the three legs: the live stub service passes the
shared contract suite, the simulator's remote backend passes the same suite
replayed from the committed fixtures with no service running, and the
simulator package stands alone (it never imports this one).
"""

from pathlib import Path

from conftest import client_transport
from fastapi.testclient import TestClient

from genbridge.config import ServiceConfig
from genbridge.service import create_app
from tntsim import wire
from tntsim.pipeline import remote_stage

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "tests" / "fixtures" / "wire_contract.json"


def test_a9_shared_wire_protocol_contract(capsys):
    cfg = ServiceConfig(max_request_bytes=4096)
    client = TestClient(create_app(cfg))
    live_passed = wire.run_contract_suite(
        client_transport(client), max_request_bytes=cfg.max_request_bytes)

    replay = wire.FixtureTransport.replay(FIXTURES)
    replay_passed = wire.run_contract_suite(replay)
    caption = remote_stage(
        "describe", {"image": wire.contract_test_image(), "message_len": 3},
        "http://nowhere.invalid", transport=replay)

    offenders = [p for p in (REPO / "src" / "tntsim").glob("*.py")
                 if "genbridge" in p.read_text(encoding="utf-8")]

    ok = (len(live_passed) == 10 and len(replay_passed) >= 9
          and caption.tokens == ("a", "tangram", "figure") and not offenders)
    with capsys.disabled():
        print(f"\nA9 {'PASS' if ok else 'FAIL'}: stub service passed "
              f"{len(live_passed)}/10 contract checks; fixture replay passed "
              f"{len(replay_passed)} checks with no service and remote "
              f"describe returned {list(caption.tokens)}; simulator imports "
              f"from this package: {len(offenders)}")
    assert len(live_passed) == 10
    assert len(replay_passed) >= 9
    assert caption.tokens == ("a", "tangram", "figure")
    assert offenders == []
