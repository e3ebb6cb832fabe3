"""Backend selection for the rollout kernel.

The compiled extension is optional; the pure-numpy reference is always
available and is the fallback.  ``SAFENAV_BACKEND`` forces a choice:
"compiled" raises if the extension is missing, "numpy" skips it.  Results
are deterministic within a backend; across backends they agree to roughly
1e-9 (different cos/sin implementations), so runs record which backend
produced them.
"""

from __future__ import annotations

import os

from . import rollouts_np
from .rollouts_np import rollout_states

_requested = os.environ.get("SAFENAV_BACKEND", "").strip().lower()

if _requested not in ("", "numpy", "compiled"):
    raise RuntimeError(f"SAFENAV_BACKEND must be 'numpy' or 'compiled', got {_requested!r}")

if _requested == "numpy":
    BACKEND = "numpy"
    rollout_costs = rollouts_np.rollout_costs
else:
    try:
        from . import _rollouts
        BACKEND = "compiled"
        rollout_costs = _rollouts.rollout_costs
    except ImportError:
        if _requested == "compiled":
            raise RuntimeError("SAFENAV_BACKEND=compiled but the extension is not built")
        BACKEND = "numpy"
        rollout_costs = rollouts_np.rollout_costs

__all__ = ["BACKEND", "rollout_costs", "rollout_states", "rollouts_np"]
