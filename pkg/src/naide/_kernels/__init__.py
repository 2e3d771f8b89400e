"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension (built from _gather.pyx) is preferred when it
imported cleanly; otherwise the numpy implementation takes over. Set
NAIDE_KERNELS=numpy to force the fallback or NAIDE_KERNELS=compiled to
fail loudly when the extension is unavailable. Both backends are
bitwise-equivalent; see benchmarks/bench_kernels.py for the speed gap.
"""

import os

_choice = os.environ.get("NAIDE_KERNELS", "auto").lower()
if _choice not in ("auto", "compiled", "numpy"):
    raise ImportError(
        f"NAIDE_KERNELS must be 'auto', 'compiled' or 'numpy', got {_choice!r}"
    )

if _choice == "numpy":
    from . import _gather_py as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _gather as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _gather_py as _impl  # type: ignore[no-redef]

        BACKEND = "numpy"

gather_contexts = _impl.gather_contexts


def backend() -> str:
    """Name of the kernel backend selected at import: compiled | numpy."""
    return BACKEND
