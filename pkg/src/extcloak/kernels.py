"""Backend selection for the evaluation kernels.

The compiled extension is preferred when the build produced it;
setting EXTCLOAK_PURE to a non-empty value other than 0 forces the
pure numpy backend. Both expose the same three functions and are
cross-checked against each other in the test suite.
"""

import os

if os.environ.get("EXTCLOAK_PURE", "0") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = "compiled" if _impl.__name__.endswith("._kernels") else "pure"

hankel01 = _impl.hankel01
mixed_layer_eval = _impl.mixed_layer_eval
multipole_eval = _impl.multipole_eval
