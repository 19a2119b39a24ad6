"""Numeric kernels for the multiplicative-update solver.

Two interchangeable backends provide the same functions:

* ``_cy_core`` — compiled Cython loops (built by setup.py when a compiler
  is available),
* ``_np_core`` — pure numpy fallback.

The compiled backend is preferred; set ``HARMONMF_BACKEND=numpy`` or
``HARMONMF_BACKEND=cython`` to force one.  Both backends agree to 1e-9
relative tolerance (summation order differs), and each is deterministic.
"""
import os

_choice = os.environ.get("HARMONMF_BACKEND", "").lower()
if _choice not in ("", "numpy", "cython"):
    raise RuntimeError(f"HARMONMF_BACKEND must be 'numpy' or 'cython', got {_choice!r}")

if _choice == "numpy":
    from . import _np_core as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _cy_core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        from . import _np_core as _impl

        BACKEND = "numpy"

refresh_ratio = _impl.refresh_ratio
rank1_add = _impl.rank1_add
kl_divergence_floored = _impl.kl_divergence_floored
