"""Kernel backend selection.

The compiled extension is preferred for the sine path when it imported
successfully; everything else goes through the numpy fallback. Set
TRAJFIELD_BACKEND=python to force the fallback (used by the benchmark),
or TRAJFIELD_BACKEND=compiled to fail loudly when the extension is absent.
"""

import os

from . import pycore

_requested = os.environ.get("TRAJFIELD_BACKEND", "").strip().lower()

if _requested == "python":
    _compiled = None
else:
    try:
        from . import _fastpath as _compiled
    except ImportError:
        _compiled = None
        if _requested == "compiled":
            raise

BACKEND = "compiled" if _compiled is not None else "python"


def eval_orders(weights, biases, w_out, b_out, omega0, tau, order, activation="sine"):
    """Dispatch to the active backend; relu always uses the numpy path."""
    if _compiled is not None and activation == "sine":
        return _compiled.eval_orders(
            list(weights), list(biases), w_out, b_out, float(omega0), tau, int(order)
        )
    return pycore.eval_orders(
        weights, biases, w_out, b_out, float(omega0), tau, int(order), activation
    )
