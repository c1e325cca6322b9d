"""Dense reference implementations and finite-difference machinery.

Everything here exists to check the production pipeline and is written
independently of it: adjacency normalization is rebuilt densely from the
raw edge lists, and gradients are probed coordinate by coordinate. Only
small instances are supported.
"""

import numpy as np

MAX_DENSE_NODES = 256


def _dense_normalized(adj):
    deg = adj.sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    return inv_sqrt[:, None] * adj * inv_sqrt[None, :]


def dense_forward(ds, E_u, E_v, L, agg="sum"):
    """Full dual-view forward pass with dense matrices.

    Builds D^{-1/2} A D^{-1/2} + I densely for both views from the raw
    edge lists and applies it L times to the stacked embeddings, summing
    (or averaging) all layer outputs. Returns (agg_r, agg_s).
    """
    I, J = ds.num_users, ds.num_items
    if I + J > MAX_DENSE_NODES:
        raise ValueError(f"dense oracle capped at {MAX_DENSE_NODES} nodes, got {I + J}")

    A_r = np.zeros((I + J, I + J))
    for u, v in ds.train_edges:
        A_r[u, I + v] = 1.0
        A_r[I + v, u] = 1.0
    A_s = np.zeros((I, I))
    for a, b in ds.social_edges:
        A_s[a, b] = 1.0

    P_r = _dense_normalized(A_r) + np.eye(I + J)
    P_s = _dense_normalized(A_s) + np.eye(I)

    E_r = np.vstack([E_u, E_v]).astype(np.float64)
    E_s = np.asarray(E_u, dtype=np.float64).copy()
    agg_r = E_r.copy()
    agg_s = E_s.copy()
    for _ in range(L):
        E_r = P_r @ E_r
        E_s = P_s @ E_s
        agg_r += E_r
        agg_s += E_s
    if agg == "mean":
        agg_r /= L + 1
        agg_s /= L + 1
    return agg_r, agg_s


def finite_difference(loss_fn, params, step=1e-6):
    """Central-difference gradients of a scalar loss over named arrays.

    `params` is a dict name -> ndarray; the returned dict has the same
    shapes. loss_fn receives the (temporarily perturbed) dict and must be
    deterministic and smooth at the evaluation point.
    """
    grads = {}
    for name, arr in params.items():
        if arr.dtype != np.float64:
            raise ValueError(f"{name}: finite differences need float64 parameters")
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            f_plus = loss_fn(params)
            arr[idx] = orig - step
            f_minus = loss_fn(params)
            arr[idx] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise ValueError(f"non-finite loss while probing {name}{list(idx)}")
            g[idx] = (f_plus - f_minus) / (2.0 * step)
        grads[name] = g
    return grads
