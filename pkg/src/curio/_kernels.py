"""Select the Gibbs kernel backend at import time.

The compiled extension is used when it was built; otherwise, or when
``CURIO_PURE_PYTHON`` is set to a non-empty value, the numpy fallback is used.
"""

import os

from . import _gibbs_py

if os.environ.get("CURIO_PURE_PYTHON"):
    _impl = _gibbs_py
    BACKEND = "python"
else:
    try:
        from . import _gibbs as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _gibbs_py
        BACKEND = "python"

train_sweep = _impl.train_sweep
foldin_sweep = _impl.foldin_sweep


def backends():
    """Map of every importable backend name to its module."""
    found = {"python": _gibbs_py}
    try:
        from . import _gibbs
        found["cython"] = _gibbs
    except ImportError:
        pass
    return found
