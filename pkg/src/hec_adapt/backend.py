"""Kernel backend selection.

The detector training loop spends nearly all of its time in a fused
per-sample step (forward + MAE backward + SGD update). Two interchangeable
implementations exist:

  "compiled" - Cython extension hec_adapt._kernels._core (built by
               ``pip install`` or ``python setup.py build_ext --inplace``)
  "numpy"    - hec_adapt._kernels.numpy_ref

The compiled kernel is preferred when importable. Set HEC_ADAPT_BACKEND to
"compiled" or "numpy" to force one; forcing "compiled" when the extension
is missing is an error rather than a silent fallback.

Both backends implement identical arithmetic; only the floating-point
reduction order inside matrix products differs, so trained parameters are
bit-reproducible per backend but not across backends.
"""

from __future__ import annotations

import os
from typing import Callable

import numpy as np

from ._kernels import numpy_ref

_ENV_VAR = "HEC_ADAPT_BACKEND"

try:
    from ._kernels import _core as _compiled
except ImportError:
    _compiled = None

TrainStep = Callable[..., float]


def available_backends() -> tuple[str, ...]:
    return ("compiled", "numpy") if _compiled is not None else ("numpy",)


def resolve_backend(name: str | None = None) -> tuple[str, TrainStep]:
    """Return (backend_name, train_step_mae) honoring the override chain
    explicit argument > HEC_ADAPT_BACKEND > auto."""
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if name == "auto":
        name = "compiled" if _compiled is not None else "numpy"
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError(
                "compiled kernel requested but hec_adapt._kernels._core is not built; "
                "run 'python setup.py build_ext --inplace' or use HEC_ADAPT_BACKEND=numpy"
            )
        return "compiled", _compiled.train_step_mae
    if name == "numpy":
        return "numpy", numpy_ref.train_step_mae
    raise ValueError(f"unknown backend {name!r}; expected 'compiled', 'numpy' or 'auto'")


def default_backend_name() -> str:
    return resolve_backend()[0]


def make_workspace(dims: list[int] | tuple[int, ...]) -> tuple[list, list, list]:
    """Preallocated (h, z, g) buffers for every non-input layer, as consumed
    by the fused kernels. dims is the full layer-size chain."""
    out_dims = dims[1:]
    return (
        [np.empty(d) for d in out_dims],
        [np.empty(d) for d in out_dims],
        [np.empty(d) for d in out_dims],
    )
