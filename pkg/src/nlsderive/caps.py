"""Resource caps shared by the enumeration and many-body code.

Caps can be raised with the environment variable ``NLSDERIVE_CAPS``, a
comma separated list such as ``n=8,k=4,fock_dim=500000``.
"""

import os

DEFAULTS = {"n": 6, "k": 3, "fock_dim": 200_000}


class CapExceeded(ValueError):
    """Raised when a request exceeds a configured resource cap."""


def caps() -> dict:
    out = dict(DEFAULTS)
    raw = os.environ.get("NLSDERIVE_CAPS", "").strip()
    if raw:
        for item in raw.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in out:
                raise ValueError(f"unknown cap {key!r}")
            out[key] = int(float(val))
    return out


def check(name: str, value: int) -> None:
    limit = caps()[name]
    if value > limit:
        raise CapExceeded(f"{name}={value} exceeds cap {limit} (set NLSDERIVE_CAPS to override)")
