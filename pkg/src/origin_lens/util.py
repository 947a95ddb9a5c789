"""Small shared helpers."""

import hashlib
import json


def stable_seed(*parts):
    """Deterministic 63-bit seed derived from the given parts.

    Python's built-in hash() is salted per process, so anything feeding an RNG
    must go through here to stay reproducible across runs.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def canonical_json(obj):
    """Stable JSON encoding used for config echoes and digests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data):
    return hashlib.sha256(data).hexdigest()
