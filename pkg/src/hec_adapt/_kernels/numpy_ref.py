"""Pure-numpy fallback for the fused training step.

Same contract as the compiled kernel in _core.pyx: mutate weights/biases
in place, return the sample loss. Results agree with the compiled kernel
to float rounding (the matrix-product reduction order differs).
"""

from __future__ import annotations

import numpy as np


def train_step_mae(weights, biases, x, target, masks, lr, l2, work):
    """One per-sample SGD step on mean(|out - target|) + (l2/2)||W||^2.

    masks: per-hidden-layer dropout scale vectors (mask / keep_prob) or
    None. work is accepted for signature parity with the compiled kernel
    and is not used here.
    """
    n_layers = len(weights)
    acts = []   # pre-dropout activation of each layer
    hs = [x]    # hs[l] is the input vector of layer l
    h = x
    for l in range(n_layers):
        z = weights[l] @ h + biases[l]
        if l < n_layers - 1:
            a = np.tanh(z)
            h = a * masks[l] if masks is not None else a
        else:
            a = z
            h = a
        acts.append(a)
        hs.append(h)

    n_out = h.shape[0]
    diff = h - target
    loss = float(np.abs(diff).mean())
    g = np.sign(diff) / n_out

    decay = 1.0 - lr * l2
    for l in range(n_layers - 1, -1, -1):
        dz = g if l == n_layers - 1 else g * (1.0 - acts[l] ** 2)
        g_prev = weights[l].T @ dz if l > 0 else None
        weights[l] *= decay
        weights[l] -= lr * np.outer(dz, hs[l])
        biases[l] -= lr * dz
        if l > 0:
            g = g_prev * masks[l - 1] if masks is not None else g_prev
    return loss
