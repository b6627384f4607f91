"""Walk the partner-memory lifecycle: store, version, restart, corrupt.

Snapshots live under out/demo-partners/<id>/ with an index carrying each
snapshot's content hash, so a later process either gets back byte-identical
parameters or a loud SnapshotIntegrityError, and never a silent mixture.

    python3 demos/partner_memory_tour.py
"""

import shutil
from pathlib import Path

from tntsim import nn
from tntsim.learning import PartnerMemory, SnapshotIntegrityError

ROOT = Path("out") / "demo-partners"


def main() -> None:
    shutil.rmtree(ROOT, ignore_errors=True)
    spec = nn.default_netspec(num_classes=3, hidden=4, input_hw=(16, 16),
                              conv_widths=(2, 2, 3, 3))
    base = nn.init_params(spec, seed=1)
    tuned = nn.init_params(spec, seed=2)

    mem = PartnerMemory(ROOT, base_params=base)
    print("store alice ->", mem.store("alice", tuned))
    print("store alice ->", mem.store("alice", nn.init_params(spec, seed=3)))
    print("known partners:", mem.known_partners())

    # a second instance stands in for a process restart
    fresh = PartnerMemory(ROOT, base_params=base)
    got = fresh.retrieve("alice")
    print("alice after restart:", got.content_hash()[:16],
          "(latest version wins)")
    print("bob falls back to base:", fresh.retrieve("bob") is base)

    snapshot = ROOT / "alice" / "v0002.params"
    blob = bytearray(snapshot.read_bytes())
    blob[-1] ^= 0xFF
    snapshot.write_bytes(bytes(blob))
    try:
        PartnerMemory(ROOT, base_params=base).retrieve("alice")
    except SnapshotIntegrityError as err:
        print("after flipping one byte:", err)


if __name__ == "__main__":
    main()
