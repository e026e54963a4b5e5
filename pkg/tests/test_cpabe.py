import pytest

from healthbroker.abe import cpabe
from healthbroker.abe.pairing import UnsupportedLevel
from healthbroker.abe.policy import parse_policy

from conftest import LEVEL


def test_setup_produces_usable_params(pp, msk):
    key = cpabe.keygen(msk, {"doctor"})
    message = cpabe.random_gt_element(pp)
    ct = cpabe.encrypt_element(pp, parse_policy("doctor"), message)
    assert pp.group.fp2_eq(cpabe.decrypt_element(pp, key, ct), message)


def test_setup_fresh_randomness():
    pp1, msk1 = cpabe.setup(LEVEL)
    pp2, msk2 = cpabe.setup(LEVEL)
    assert msk1.to_bytes() != msk2.to_bytes()
    assert pp1.to_bytes() != pp2.to_bytes()


def test_setup_deterministic_under_seed():
    a = cpabe.setup(LEVEL, cpabe.DeterministicRng("fixed-seed"))
    b = cpabe.setup(LEVEL, cpabe.DeterministicRng("fixed-seed"))
    assert a[0].to_bytes() == b[0].to_bytes()
    assert a[1].to_bytes() == b[1].to_bytes()


def test_setup_unsupported_level():
    with pytest.raises(UnsupportedLevel):
        cpabe.setup(4096)


def test_keygen_binds_exact_attributes(msk):
    key = cpabe.keygen(msk, {"Doctor", "cardiology"})
    assert key.attributes == frozenset({"doctor", "cardiology"})
    assert set(key.comps) == {"doctor", "cardiology"}


def test_keygen_randomized_per_call(msk):
    k1 = cpabe.keygen(msk, {"doctor"})
    k2 = cpabe.keygen(msk, {"doctor"})
    assert k1.to_bytes() != k2.to_bytes()
    assert k1.comps["doctor"] != k2.comps["doctor"]


def test_keygen_empty_attrs_rejected(msk):
    with pytest.raises(ValueError):
        cpabe.keygen(msk, set())


def test_decrypt_requires_satisfaction(pp, msk):
    policy = parse_policy("(doctor AND cardiology) OR admin")
    message = cpabe.random_gt_element(pp)
    ct = cpabe.encrypt_element(pp, policy, message)
    good = cpabe.keygen(msk, {"doctor", "cardiology", "hospitala"})
    assert pp.group.fp2_eq(cpabe.decrypt_element(pp, good, ct), message)
    bad = cpabe.keygen(msk, {"doctor"})
    with pytest.raises(cpabe.NotSatisfied):
        cpabe.decrypt_element(pp, bad, ct)


def test_collusion_mixture_fails(pp, msk):
    """Components of two keys cannot be combined to satisfy an AND policy."""
    k1 = cpabe.keygen(msk, {"doctor"})
    k2 = cpabe.keygen(msk, {"cardiology"})
    forged = cpabe.UserKey(
        k1.level, k1.key_id, frozenset({"doctor", "cardiology"}), k1.d,
        {"doctor": k1.comps["doctor"], "cardiology": k2.comps["cardiology"]},
    )
    message = cpabe.random_gt_element(pp)
    ct = cpabe.encrypt_element(pp, parse_policy("doctor AND cardiology"), message)
    recovered = cpabe.decrypt_element(pp, forged, ct)
    assert not pp.group.fp2_eq(recovered, message)
    # mixing the other way round (k2's identity component) fails too
    forged2 = cpabe.UserKey(
        k2.level, k2.key_id, frozenset({"doctor", "cardiology"}), k2.d,
        {"doctor": k1.comps["doctor"], "cardiology": k2.comps["cardiology"]},
    )
    assert not pp.group.fp2_eq(cpabe.decrypt_element(pp, forged2, ct), message)


def test_threshold_policy_partial_satisfaction(pp, msk):
    policy = parse_policy("THRESHOLD(2, a, b, c)")
    message = cpabe.random_gt_element(pp)
    ct = cpabe.encrypt_element(pp, policy, message)
    assert pp.group.fp2_eq(
        cpabe.decrypt_element(pp, cpabe.keygen(msk, {"a", "c"}), ct), message
    )
    with pytest.raises(cpabe.NotSatisfied):
        cpabe.decrypt_element(pp, cpabe.keygen(msk, {"b"}), ct)


def test_serialization_roundtrips(pp, msk):
    assert cpabe.PublicParams.from_bytes(pp.to_bytes()) == pp
    assert cpabe.MasterSecret.from_bytes(msk.to_bytes()) == msk
    key = cpabe.keygen(msk, {"doctor", "nurse"})
    assert cpabe.UserKey.from_bytes(key.to_bytes()) == key
    ct = cpabe.encrypt_element(
        pp, parse_policy("doctor OR nurse"), cpabe.random_gt_element(pp)
    )
    assert cpabe.AbeCiphertext.from_bytes(ct.to_bytes()) == ct


def test_public_params_do_not_leak_master_secret(pp, msk):
    blob = pp.to_bytes()
    assert int(msk.beta).to_bytes(pp.group.nbytes, "big") not in blob
    assert pp.group.point_to_bytes(msk.g_alpha) not in blob


def test_level_128_roundtrip():
    pp, msk = cpabe.setup(128)
    key = cpabe.keygen(msk, {"doctor"})
    message = cpabe.random_gt_element(pp)
    ct = cpabe.encrypt_element(pp, parse_policy("doctor"), message)
    assert pp.group.fp2_eq(cpabe.decrypt_element(pp, key, ct), message)
