"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback takes over. Set ``RATELESS_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("RATELESS_PURE_PYTHON"):
    from rateless import _fallback as kernels

    BACKEND = "python"
else:
    try:
        from rateless import _kernels as kernels

        BACKEND = "compiled"
    except ImportError:
        from rateless import _fallback as kernels

        BACKEND = "python"

jacobi_sweeps = kernels.jacobi_sweeps
hinge_sgd = kernels.hinge_sgd
adam_update = kernels.adam_update
