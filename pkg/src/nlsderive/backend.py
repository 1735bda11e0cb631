"""Kernel backend: the compiled extension when importable, numpy otherwise.

Set NLSDERIVE_BACKEND=python to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("NLSDERIVE_BACKEND", "").lower() == "python":
    impl = _fallback
    NAME = "python"
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]

        NAME = "cython"
    except ImportError:
        impl = _fallback
        NAME = "python"

resolvent_sum = impl.resolvent_sum
resolvent_sphere_sum = impl.resolvent_sphere_sum
hop_targets = impl.hop_targets
