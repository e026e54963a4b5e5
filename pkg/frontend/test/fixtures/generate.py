#!/usr/bin/env python3
"""Regenerate interop.json from the installed healthbroker package.

The console's crypto must produce byte-identical serializations to the
service; these fixtures pin that down at every layer (deterministic RNG,
hash-to-point, pairing, element ciphertexts, full documents).

    python3 generate.py > interop.json
"""

import base64
import json

from healthbroker.abe import cpabe, hybrid
from healthbroker.abe.cpabe import DeterministicRng
from healthbroker.abe.pairing import PairingGroup
from healthbroker.abe.policy import parse_policy

LEVEL = 80


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def main():
    G = PairingGroup(LEVEL)
    pp, msk = cpabe.setup(LEVEL, rng=DeterministicRng("fx-setup"))
    key = cpabe.keygen(msk, ["doctor", "cardiology"], rng=DeterministicRng("fx-key"))

    policy_text = "(doctor AND cardiology) OR admin"
    policy = parse_policy(policy_text)
    plaintext = b"<record><bp>120/80</bp></record>"
    doc = hybrid.encrypt(
        pp, policy, plaintext,
        rng=DeterministicRng("fx-doc"),
        doc_id="6b1e3c60-7a15-4f60-9e1c-1d2b3c4d5e6f",
    )
    element = cpabe.decrypt_element(pp, key, doc.wrapped_dek)

    ct = cpabe.encrypt_element(
        pp, policy, G.gt_generator(), rng=DeterministicRng("fx-elem")
    )

    rng = DeterministicRng("fx-rng")
    first = rng.randbelow(int(G.q))
    tok = rng.token_bytes(12)

    out = {
        "level": LEVEL,
        "pp_b64": b64(pp.to_bytes()),
        "user_key_b64": b64(key.to_bytes()),
        "policy_text": policy_text,
        "plaintext_b64": b64(plaintext),
        "doc_seed": "fx-doc",
        "doc_id": doc.doc_id,
        "doc_b64": b64(doc.to_bytes()),
        "element_b64": b64(G.gt_to_bytes(element)),
        "elem_ct_seed": "fx-elem",
        "elem_ct_b64": b64(ct.to_bytes()),
        "gt_generator_b64": b64(G.gt_to_bytes(G.gt_generator())),
        "hash_to_point": {
            label: b64(G.point_to_bytes(G.hash_to_point(label.encode())))
            for label in ["doctor", "cardiology", "emergency_room", "x-ray.unit_7"]
        },
        "det_rng": {
            "seed": "fx-rng",
            "first_randbelow_q": str(first),
            "token_bytes_12_b64": b64(tok),
        },
    }
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
