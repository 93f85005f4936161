# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused per-sample training step for dense autoencoders.

One call runs forward pass, MAE backward pass and the in-place SGD update
(with L2 weight decay) for a single input vector. Semantics match
hec_adapt._kernels.numpy_ref.train_step_mae; only the floating-point
reduction order differs.
"""

from libc.math cimport tanh, fabs


def train_step_mae(list weights, list biases, double[::1] x, double[::1] target,
                   masks, double lr, double l2, tuple work):
    """Mutates weights/biases in place; returns the sample's MAE loss.

    masks: per-hidden-layer dropout scale vectors (mask / keep_prob),
    or None when dropout is off. work: (h_bufs, z_bufs, g_bufs) from
    backend.make_workspace.
    """
    cdef list h_bufs = work[0]
    cdef list z_bufs = work[1]
    cdef list g_bufs = work[2]
    cdef int n_layers = len(weights)
    cdef bint has_masks = masks is not None
    cdef int l, i, j, nin, nout, n_out
    cdef double[:, ::1] W
    cdef double[::1] b, h, z, m, dz, gprev, hprev
    cdef double acc, loss, dzi, th
    cdef double decay = 1.0 - lr * l2

    # forward
    hprev = x
    for l in range(n_layers):
        W = weights[l]
        b = biases[l]
        nout = W.shape[0]
        nin = W.shape[1]
        z = z_bufs[l]
        h = h_bufs[l]
        if l < n_layers - 1:
            if has_masks:
                m = masks[l]
                with nogil:
                    for i in range(nout):
                        acc = b[i]
                        for j in range(nin):
                            acc += W[i, j] * hprev[j]
                        z[i] = acc
                        h[i] = tanh(acc) * m[i]
            else:
                with nogil:
                    for i in range(nout):
                        acc = b[i]
                        for j in range(nin):
                            acc += W[i, j] * hprev[j]
                        z[i] = acc
                        h[i] = tanh(acc)
        else:
            with nogil:
                for i in range(nout):
                    acc = b[i]
                    for j in range(nin):
                        acc += W[i, j] * hprev[j]
                    z[i] = acc
                    h[i] = acc
        hprev = h

    # loss and output-layer delta (MAE subgradient; 0 at exact zero)
    dz = g_bufs[n_layers - 1]
    h = h_bufs[n_layers - 1]
    n_out = h.shape[0]
    loss = 0.0
    with nogil:
        for i in range(n_out):
            acc = h[i] - target[i]
            loss += fabs(acc)
            dz[i] = (1.0 if acc > 0.0 else (-1.0 if acc < 0.0 else 0.0)) / n_out
    loss /= n_out

    # backward + fused update (gprev uses pre-update weights)
    for l in range(n_layers - 1, -1, -1):
        W = weights[l]
        b = biases[l]
        nout = W.shape[0]
        nin = W.shape[1]
        dz = g_bufs[l]
        if l < n_layers - 1:
            z = z_bufs[l]
            if has_masks:
                m = masks[l]
                with nogil:
                    for i in range(nout):
                        th = tanh(z[i])
                        dz[i] = dz[i] * m[i] * (1.0 - th * th)
            else:
                with nogil:
                    for i in range(nout):
                        th = tanh(z[i])
                        dz[i] = dz[i] * (1.0 - th * th)
        hprev = x if l == 0 else h_bufs[l - 1]
        if l > 0:
            gprev = g_bufs[l - 1]
            with nogil:
                for j in range(nin):
                    gprev[j] = 0.0
                for i in range(nout):
                    dzi = dz[i]
                    for j in range(nin):
                        gprev[j] += W[i, j] * dzi
                        W[i, j] = W[i, j] * decay - lr * dzi * hprev[j]
                    b[i] -= lr * dzi
        else:
            with nogil:
                for i in range(nout):
                    dzi = dz[i]
                    for j in range(nin):
                        W[i, j] = W[i, j] * decay - lr * dzi * hprev[j]
                    b[i] -= lr * dzi
    return loss
