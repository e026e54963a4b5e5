import time
import uuid

import pytest

from healthbroker import access
from healthbroker.abe.policy import parse_policy
from healthbroker.access import AccessControl
from healthbroker.db import Database


@pytest.fixture()
def ac():
    return AccessControl(Database(), attempt_limit=3, lockout_base_seconds=0.2,
                         session_ttl=3600.0)


def add_user(ac, name, attrs=("doctor",), kind="data-requestor", password="pw"):
    return ac.create_credential(name, password, kind, list(attrs), broker_id=0)


# -- credentials and sessions ----------------------------------------------

def test_create_and_authenticate(ac):
    uid = add_user(ac, "alice", kind="patient")
    session = ac.authenticate("alice", "pw")
    assert session.user_id == uid
    assert ac.session(session.token).user_id == uid
    ac.end_session(session.token)
    with pytest.raises(access.SessionInvalid):
        ac.session(session.token)


def test_password_not_stored_in_clear(ac):
    add_user(ac, "alice", password="hunter2secret")
    row = ac._db.one("SELECT pw_hash FROM credentials WHERE username = ?", ("alice",))
    assert "hunter2secret" not in row["pw_hash"]
    assert row["pw_hash"].startswith("scrypt$")


def test_duplicate_username_rejected(ac):
    add_user(ac, "alice")
    with pytest.raises(access.DuplicateUsername):
        add_user(ac, "alice")


def test_unknown_kind_rejected(ac):
    with pytest.raises(ValueError):
        ac.create_credential("x", "pw", "wizard", ["a"], broker_id=0)


def test_wrong_password_and_unknown_user_same_error(ac):
    add_user(ac, "alice")
    with pytest.raises(access.BadCredentials) as e1:
        ac.authenticate("alice", "nope")
    with pytest.raises(access.BadCredentials) as e2:
        ac.authenticate("nobody", "nope")
    assert str(e1.value) == str(e2.value)


def test_lockout_after_repeated_failures():
    ac = AccessControl(Database(), attempt_limit=3, lockout_base_seconds=1.0)
    add_user(ac, "alice")
    for _ in range(2):
        with pytest.raises(access.BadCredentials):
            ac.authenticate("alice", "nope")
    with pytest.raises(access.AccountLocked):
        ac.authenticate("alice", "nope")
    # even the right password is refused while locked
    with pytest.raises(access.AccountLocked):
        ac.authenticate("alice", "pw")
    time.sleep(1.1)
    assert ac.authenticate("alice", "pw").user_id  # lock expired, counter reset
    with pytest.raises(access.BadCredentials):
        ac.authenticate("alice", "nope")


def test_session_expiry():
    ac = AccessControl(Database(), session_ttl=0.05)
    add_user(ac, "alice")
    session = ac.authenticate("alice", "pw")
    time.sleep(0.1)
    with pytest.raises(access.SessionInvalid):
        ac.session(session.token)


# -- policies --------------------------------------------------------------

def test_policy_store_update_history(ac):
    owner = add_user(ac, "pat", kind="patient")
    fid = str(uuid.uuid4())
    ac.store_policy(owner, fid, parse_policy("doctor"))
    ac.store_policy(owner, fid, parse_policy("doctor AND cardiology"))
    rec = ac.policy_for(fid)
    assert rec.policy == parse_policy("doctor AND cardiology")
    assert ac.policy_history(fid) == ["doctor"]


def test_policy_update_requires_owner(ac):
    owner = add_user(ac, "pat", kind="patient")
    other = add_user(ac, "mallory", kind="patient")
    fid = str(uuid.uuid4())
    ac.store_policy(owner, fid, parse_policy("doctor"))
    with pytest.raises(access.NotOwner):
        ac.store_policy(other, fid, parse_policy("mallory_attr"))
    with pytest.raises(access.NotOwner):
        ac.drop_policy(other, fid)


def test_unknown_file(ac):
    with pytest.raises(access.UnknownFile):
        ac.policy_for("missing")
    with pytest.raises(access.UnknownFile):
        ac.check_access("anyone", "missing")


# -- mediation and revocation ----------------------------------------------

@pytest.fixture()
def mediated(ac):
    owner = add_user(ac, "pat", kind="patient", attrs=())
    doctor = add_user(ac, "dr", attrs=("doctor", "cardiology"))
    fid = str(uuid.uuid4())
    ac.store_policy(owner, fid, parse_policy("doctor AND cardiology"))
    return ac, owner, doctor, fid


def test_check_access_follows_policy(mediated):
    ac, owner, doctor, fid = mediated
    assert ac.check_access(doctor, fid)
    nurse = add_user(ac, "nurse", attrs=("nurse",))
    decision = ac.check_access(nurse, fid)
    assert not decision and decision.reason == "policy-not-satisfied"
    assert not ac.check_access("ghost-user", fid)


def test_file_level_revocation_and_undo(mediated):
    ac, owner, doctor, fid = mediated
    ac.revoke_user(owner, doctor, file_id=fid)
    decision = ac.check_access(doctor, fid)
    assert not decision and decision.reason == "revoked:file"
    ac.unrevoke_user(owner, doctor, file_id=fid)
    assert ac.check_access(doctor, fid)


def test_global_revocation_covers_all_files(mediated):
    ac, owner, doctor, fid = mediated
    fid2 = str(uuid.uuid4())
    ac.store_policy(owner, fid2, parse_policy("doctor"))
    ac.revoke_user(owner, doctor)
    assert ac.check_access(doctor, fid).reason == "revoked:global"
    assert ac.check_access(doctor, fid2).reason == "revoked:global"
    ac.unrevoke_user(owner, doctor)
    assert ac.check_access(doctor, fid) and ac.check_access(doctor, fid2)


def test_attribute_revocation(mediated):
    ac, owner, doctor, fid = mediated
    ac.revoke_attribute(owner, "Cardiology")
    assert ac.check_access(doctor, fid).reason == "revoked:attribute:cardiology"
    # a requestor without the revoked attribute is unaffected
    gp = add_user(ac, "gp", attrs=("doctor",))
    assert ac.check_access(gp, fid).reason == "policy-not-satisfied"
    ac.unrevoke_attribute(owner, "cardiology")
    assert ac.check_access(doctor, fid)


def test_attribute_revocation_scoped_to_file(mediated):
    ac, owner, doctor, fid = mediated
    fid2 = str(uuid.uuid4())
    ac.store_policy(owner, fid2, parse_policy("doctor"))
    ac.revoke_attribute(owner, "doctor", file_id=fid)
    assert not ac.check_access(doctor, fid)
    assert ac.check_access(doctor, fid2)


def test_revocation_requires_ownership(mediated):
    ac, owner, doctor, fid = mediated
    stranger = add_user(ac, "stranger", kind="patient")
    with pytest.raises(access.NotOwner):
        ac.revoke_user(stranger, doctor, file_id=fid)
    with pytest.raises(access.NotOwner):
        ac.revoke_attribute(stranger, "doctor", file_id=fid)


def test_revocation_does_not_touch_crypto(mediated, pp, msk):
    """Revocation is mediation-only: the revoked user's key still decrypts raw
    ciphertext, which is exactly why the broker must sit in front of storage."""
    from healthbroker.abe import cpabe, hybrid

    ac, owner, doctor, fid = mediated
    doc = hybrid.encrypt(pp, parse_policy("doctor AND cardiology"), b"raw bytes")
    key = cpabe.keygen(msk, {"doctor", "cardiology"})
    ac.revoke_user(owner, doctor)
    assert hybrid.decrypt(pp, key, doc) == b"raw bytes"
    assert not ac.check_access(doctor, fid)
