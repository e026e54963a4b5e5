import itertools
import secrets
import uuid

import pytest
from hypothesis import given, settings, strategies as st

from healthbroker import sharing
from healthbroker.sharing import Share, combine, split


def test_roundtrip_basic():
    data = b"patient record bytes"
    shares = split(data, 5, 3)
    assert combine(shares[:3]) == data
    assert combine(shares[2:]) == data


def test_all_t_subsets_reconstruct():
    data = secrets.token_bytes(64)
    shares = split(data, 5, 3)
    for subset in itertools.combinations(shares, 3):
        assert combine(list(subset)) == data


def test_sub_threshold_refused():
    shares = split(b"secret", 5, 3)
    with pytest.raises(sharing.InsufficientShares):
        combine(shares[:2])
    with pytest.raises(sharing.InsufficientShares):
        combine([])


def test_payload_length_equals_input_length():
    for size in (1, 17, 4096):
        for s in split(b"a" * size, 4, 2):
            assert len(s.payload) == size


def test_one_of_one():
    data = b"degenerate"
    (share,) = split(data, 1, 1)
    # a 1-of-1 split stores the plaintext directly; no masking polynomial exists
    assert share.payload == data
    assert combine([share]) == data


def test_mixed_file_ids_rejected():
    a = split(b"one", 3, 2)
    b = split(b"two", 3, 2)
    with pytest.raises(sharing.LabelMismatch):
        combine([a[0], b[1]])


def test_inconsistent_params_rejected():
    shares = split(b"data", 3, 2)
    forged = Share(shares[0].file_id, 3, 3, 3, shares[0].payload)
    with pytest.raises(sharing.InconsistentParams):
        combine([shares[0], forged])


def test_duplicate_points_rejected():
    shares = split(b"data", 3, 2)
    with pytest.raises(sharing.DuplicateX):
        combine([shares[0], shares[0]])


def test_parameter_validation():
    with pytest.raises(ValueError):
        split(b"", 3, 2)
    with pytest.raises(ValueError):
        split(b"x", 3, 4)
    with pytest.raises(ValueError):
        split(b"x", 3, 0)
    with pytest.raises(ValueError):
        split(b"x", 256, 2)


def test_wire_format_layout():
    fid = str(uuid.uuid4())
    shares = split(b"\x00\x01\x02", 4, 2, file_id=fid)
    raw = shares[1].to_bytes()
    assert raw[:4] == b"HABS"
    assert raw[4] == 1
    assert raw[5:21] == uuid.UUID(fid).bytes
    assert raw[21] == 2              # share_id == x coordinate
    assert (raw[22], raw[23]) == (2, 4)
    assert int.from_bytes(raw[24:32], "big") == 3
    assert Share.from_bytes(raw) == shares[1]


def test_wire_rejects_truncation():
    raw = split(b"abcdef", 3, 2)[0].to_bytes()
    with pytest.raises(ValueError):
        Share.from_bytes(raw[:-2])
    with pytest.raises(ValueError):
        Share.from_bytes(b"XXXX" + raw[4:])


def test_max_width_split():
    data = secrets.token_bytes(8)
    shares = split(data, 255, 2)
    assert combine([shares[0], shares[254]]) == data


@settings(max_examples=40)
@given(
    data=st.binary(min_size=1, max_size=200),
    params=st.integers(1, 8).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(1, n))
    ),
)
def test_roundtrip_property(data, params):
    n, t = params
    shares = split(data, n, t)
    assert len(shares) == n
    assert combine(shares[-t:]) == data
