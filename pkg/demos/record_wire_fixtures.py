"""Regenerate tests/fixtures/wire_contract.json from the reference stub.

The fixture file lets the client-side remote backend and the contract suite
run with no service at all. Rerun this script whenever the wire protocol or
the contract suite changes:

    python3 demos/record_wire_fixtures.py
"""

from pathlib import Path

from tntsim.wire import (
    FixtureTransport,
    reference_stub_transport,
    run_contract_suite,
)

MAX_REQUEST_BYTES = 4096
OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "wire_contract.json"


def main() -> None:
    OUT.parent.mkdir(parents=True, exist_ok=True)
    stub = reference_stub_transport(max_request_bytes=MAX_REQUEST_BYTES)
    rec = FixtureTransport.recording(OUT, inner=stub)
    passed = run_contract_suite(rec, max_request_bytes=MAX_REQUEST_BYTES)
    rec.save()
    print(f"recorded {len(rec.fixtures)} exchanges "
          f"({len(passed)} contract checks) -> {OUT}")


if __name__ == "__main__":
    main()
