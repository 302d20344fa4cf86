"""Backend selection: compiled kernels with a pure-Python fallback.

Set CONFOCAL_BILLIARDS_PURE=1 to force the pure backend (useful for
debugging and for the parity tests / benchmarks, which import both
modules directly).
"""

import os

from . import _purecore

if os.environ.get("CONFOCAL_BILLIARDS_PURE"):
    impl = _purecore
else:
    try:
        from . import _fastcore as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _purecore

SIM_OK = _purecore.SIM_OK
SIM_NO_FORWARD = _purecore.SIM_NO_FORWARD
SIM_TANGENTIAL = _purecore.SIM_TANGENTIAL

quadric_value = impl.quadric_value
quadric_form = impl.quadric_form
quadric_grad = impl.quadric_grad
intersect_coeffs = impl.intersect_coeffs
reflect_dir = impl.reflect_dir
forward_t = impl.forward_t
simulate_fixed = impl.simulate_fixed
elliptic_coords = impl.elliptic_coords


def backend_name():
    return "compiled" if impl.__name__.endswith("_fastcore") else "pure"
