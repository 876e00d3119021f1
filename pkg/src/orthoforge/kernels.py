"""Backend selection for the splatting kernels.

Prefers the compiled extension; falls back to the numpy implementation
when the extension is not built. Set ORTHOFORGE_BACKEND=python to force
the fallback (used by the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("ORTHOFORGE_BACKEND", "").lower() == "python":
    from . import _splat_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _splat as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _splat_py as _impl

        BACKEND = "python"

hmax_pass = _impl.hmax_pass
accumulate_pass = _impl.accumulate_pass
