"""Seed derivation: stability, range, and decorrelation."""

import hashlib

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tntsim.seeds import derive, generator


def test_derive_matches_hash_construction():
    # independent recomputation of the documented construction
    payload = b"7\x00episode\x005"
    expect = int.from_bytes(hashlib.sha256(payload).digest()[:8],
                            "little") & (2**63 - 1)
    assert derive(7, "episode", 5) == expect


def test_derive_is_stable_across_calls_and_processes():
    # pinned values guard against accidental re-derivation changes, which
    # would silently invalidate every recorded artifact
    assert derive(0, "x") == derive(0, "x", 0)
    assert derive(7, "initial-trial") == 6584653338504857743
    assert derive(7, "episode", 47) == 5737705982771076076


@given(st.integers(min_value=0, max_value=2**63 - 1), st.text(max_size=20),
       st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_derive_range(seed, tag, index):
    v = derive(seed, tag, index)
    assert 0 <= v < 2**63


def test_derive_sensitivity():
    base = derive(3, "trial", 1)
    assert derive(4, "trial", 1) != base
    assert derive(3, "trail", 1) != base
    assert derive(3, "trial", 2) != base


def test_generator_determinism():
    a = generator(99).standard_normal(8)
    b = generator(99).standard_normal(8)
    c = generator(100).standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
