"""Pure-numpy evaluation kernel: field output and time derivatives.

Reference implementation of the fused forward pass. The compiled extension
(`_fastpath`) mirrors the sine path of this module exactly; this version is
the fallback and also the only backend for the relu ablation variant.
"""

from __future__ import annotations

import numpy as np


def eval_orders(weights, biases, w_out, b_out, omega0, tau, order, activation="sine"):
    """Evaluate the field and its first `order` derivatives w.r.t. tau.

    weights/biases: per-layer arrays, weights[l] of shape (n_l, n_{l-1}),
    n_0 = 1. Returns a list of (K, D) arrays: value, then one array per
    derivative order (all in normalized-time units).

    For relu activation the second and third derivatives are zero almost
    everywhere (piecewise-linear network), and that is what this kernel
    returns between kinks.
    """
    tau = np.asarray(tau, dtype=np.float64)
    K = tau.shape[0]
    h = tau.reshape(K, 1)
    hd = np.ones((K, 1)) if order >= 1 else None
    hdd = np.zeros((K, 1)) if order >= 2 else None
    hddd = np.zeros((K, 1)) if order >= 3 else None

    for W, b in zip(weights, biases):
        u = omega0 * (h @ W.T + b)
        if activation == "sine":
            f = np.sin(u)
            fp = np.cos(u)
            fpp = -f
            fppp = -fp
        elif activation == "relu":
            mask = u > 0.0
            f = np.where(mask, u, 0.0)
            fp = mask.astype(np.float64)
            fpp = None  # zero a.e.
            fppp = None
        else:
            raise ValueError(f"unknown activation: {activation}")

        if order >= 1:
            ud = omega0 * (hd @ W.T)
        if order >= 2:
            udd = omega0 * (hdd @ W.T)
        if order >= 3:
            uddd = omega0 * (hddd @ W.T)

        h = f
        if order >= 1:
            new_hd = fp * ud
        if order >= 2:
            if fpp is None:
                new_hdd = fp * udd
            else:
                new_hdd = fpp * ud * ud + fp * udd
        if order >= 3:
            if fpp is None:
                new_hddd = fp * uddd
            else:
                new_hddd = fppp * ud ** 3 + 3.0 * fpp * ud * udd + fp * uddd
        if order >= 1:
            hd = new_hd
        if order >= 2:
            hdd = new_hdd
        if order >= 3:
            hddd = new_hddd

    out = [h @ w_out.T + b_out]
    if order >= 1:
        out.append(hd @ w_out.T)
    if order >= 2:
        out.append(hdd @ w_out.T)
    if order >= 3:
        out.append(hddd @ w_out.T)
    return out
