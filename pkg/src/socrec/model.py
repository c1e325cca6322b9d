"""Trainable state, dual-view encoding, similarities and prediction scores."""

import os
from dataclasses import dataclass, field

import numpy as np

from .graph import propagate

LEAKY_SLOPE = 0.01  # LeakyReLU negative slope used by the similarity projection


@dataclass(eq=False)
class ProjectionParams:
    """Learnable similarity projection: z = sigm(w . leaky(T [e;e'] + e + e' + c))."""

    T: np.ndarray  # (d, 2d)
    w: np.ndarray  # (d,)
    c: np.ndarray  # (d,)


@dataclass(eq=False)
class ModelState:
    """Embedding tables, projection parameters and per-view forward caches.

    After `encode` ran, `layers_r`/`layers_s` hold the L+1 per-layer
    outputs and `agg_r`/`agg_s` their aggregation. The graphs and
    aggregation mode used for the pass are remembered so gradients can be
    propagated back through the same operator.
    """

    E_u: np.ndarray  # (I, d)
    E_v: np.ndarray  # (J, d)
    proj: ProjectionParams
    layers_r: list = field(default=None, repr=False)
    layers_s: list = field(default=None, repr=False)
    agg_r: np.ndarray = field(default=None, repr=False)
    agg_s: np.ndarray = field(default=None, repr=False)
    g_r: object = field(default=None, repr=False)
    g_s: object = field(default=None, repr=False)
    num_layers: int = 0
    agg: str = "sum"

    @property
    def num_users(self):
        return self.E_u.shape[0]

    @property
    def num_items(self):
        return self.E_v.shape[0]

    @property
    def dim(self):
        return self.E_u.shape[1]

    def copy_params(self):
        return {
            "E_u": self.E_u.copy(),
            "E_v": self.E_v.copy(),
            "T": self.proj.T.copy(),
            "w": self.proj.w.copy(),
            "c": self.proj.c.copy(),
        }

    def set_params(self, params):
        self.E_u = params["E_u"].copy()
        self.E_v = params["E_v"].copy()
        self.proj = ProjectionParams(params["T"].copy(), params["w"].copy(),
                                     params["c"].copy())


def init_model(num_users, num_items, dim, seed=0):
    """Fresh model state: uniform(-1/sqrt(d), 1/sqrt(d)) embeddings and
    projection weights, zero bias. Deterministic for a given seed."""
    if dim <= 0:
        raise ValueError("embedding dimension must be positive")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(dim)
    E_u = rng.uniform(-scale, scale, size=(num_users, dim))
    E_v = rng.uniform(-scale, scale, size=(num_items, dim))
    T = rng.uniform(-scale, scale, size=(dim, 2 * dim))
    w = rng.uniform(-scale, scale, size=dim)
    c = np.zeros(dim)
    return ModelState(E_u=E_u, E_v=E_v, proj=ProjectionParams(T=T, w=w, c=c))


def encode(ms, g_r, g_s, num_layers, agg="sum"):
    """Run both lightweight GCN encoders and aggregate all layer outputs.

    Interaction view starts from the stacked user/item tables, social view
    from the user table alone; each layer applies the normalized adjacency
    plus self-loop. Aggregation sums the L+1 layers ("mean" divides by L+1).
    Pure function of (parameters, graphs, num_layers): caches are rebuilt
    from scratch on every call.
    """
    if agg not in ("sum", "mean"):
        raise ValueError(f"unknown aggregation {agg!r}")
    I, J = ms.num_users, ms.num_items
    if g_r.num_nodes != I + J:
        raise ValueError(f"interaction graph has {g_r.num_nodes} nodes, expected {I + J}")
    if g_s.num_nodes != I:
        raise ValueError(f"social graph has {g_s.num_nodes} nodes, expected {I}")

    layers_r = [np.vstack([ms.E_u, ms.E_v])]
    layers_s = [ms.E_u.copy()]
    for _ in range(num_layers):
        layers_r.append(propagate(g_r, layers_r[-1]))
        layers_s.append(propagate(g_s, layers_s[-1]))

    agg_r = np.sum(layers_r, axis=0)
    agg_s = np.sum(layers_s, axis=0)
    if agg == "mean":
        agg_r /= num_layers + 1
        agg_s /= num_layers + 1

    ms.layers_r, ms.layers_s = layers_r, layers_s
    ms.agg_r, ms.agg_s = agg_r, agg_s
    ms.g_r, ms.g_s = g_r, g_s
    ms.num_layers = num_layers
    ms.agg = agg
    return ms


def aggregate_backward(g, grad_agg, num_layers, agg="sum"):
    """Pull a gradient on the aggregated embeddings back to layer 0.

    The encoder is linear, so the backward operator is the same
    sum-of-powers propagation applied to the incoming gradient (the
    normalized adjacency is symmetric).
    """
    total = grad_agg.copy()
    cur = grad_agg
    for _ in range(num_layers):
        cur = propagate(g, cur)
        total += cur
    if agg == "mean":
        total /= num_layers + 1
    return total


def _require_encoded(ms):
    if ms.agg_r is None or ms.agg_s is None:
        raise ValueError("encode() must run before similarities or predictions")


def projection_forward(proj, e_i, e_j):
    """Similarity-projection forward pass for row-aligned user pairs.

    Returns (z, intermediates) where intermediates carry what the backward
    pass needs. Inputs may be (d,) vectors or (n, d) batches.
    """
    e_i = np.atleast_2d(e_i)
    e_j = np.atleast_2d(e_j)
    x = np.concatenate([e_i, e_j], axis=1)           # (n, 2d)
    pre = x @ proj.T.T + e_i + e_j + proj.c          # (n, d)
    h = np.where(pre > 0, pre, LEAKY_SLOPE * pre)
    act = h @ proj.w                                 # (n,)
    z = 1.0 / (1.0 + np.exp(-act))
    return z, (x, pre, h)


def interaction_similarity(ms, i, j):
    """Learned interaction-view affinity in (0, 1) for a user pair."""
    _require_encoded(ms)
    z, _ = projection_forward(ms.proj, ms.agg_r[i], ms.agg_r[j])
    return float(z[0])


def social_similarity(ms, i, j):
    """Social-view affinity: dot product of aggregated social embeddings."""
    _require_encoded(ms)
    return float(ms.agg_s[i] @ ms.agg_s[j])


def user_vectors(ms, users, social_fusion=False):
    """Interaction-view user rows, optionally fused with the social view."""
    _require_encoded(ms)
    vecs = ms.agg_r[users]
    if social_fusion:
        vecs = vecs + ms.agg_s[users]
    return vecs


def item_vectors(ms, items):
    _require_encoded(ms)
    return ms.agg_r[ms.num_users + np.asarray(items)]


def predict_interaction(ms, u, v, social_fusion=False):
    """Raw user-item score from the interaction view."""
    _require_encoded(ms)
    I = ms.num_users
    if not (0 <= u < I and 0 <= v < ms.num_items):
        raise IndexError(f"index out of range: user {u}, item {v}")
    vec = ms.agg_r[u] + (ms.agg_s[u] if social_fusion else 0.0)
    return float(vec @ ms.agg_r[I + v])


def predict_social(ms, i, j):
    """Raw user-user score from the social view (symmetric)."""
    _require_encoded(ms)
    I = ms.num_users
    if not (0 <= i < I and 0 <= j < I):
        raise IndexError(f"index out of range: users {i}, {j}")
    return float(ms.agg_s[i] @ ms.agg_s[j])


# --- checkpoint IO -----------------------------------------------------------

def save_checkpoint(ms, out_dir, config_lines=()):
    """Write parameters as flat little-endian float64 arrays plus a shape file."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "shape"), "w") as fh:
        fh.write(f"I={ms.num_users}\nJ={ms.num_items}\nd={ms.dim}\nL={ms.num_layers}\n")
    params = ms.copy_params()
    for name in ("E_u", "E_v", "T", "w", "c"):
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(np.ascontiguousarray(params[name], dtype="<f8").tobytes())
    if config_lines:
        with open(os.path.join(out_dir, "config"), "w") as fh:
            fh.write("\n".join(config_lines) + "\n")


def load_checkpoint(in_dir):
    """Rebuild a ModelState (parameters only) from save_checkpoint output."""
    shape = {}
    with open(os.path.join(in_dir, "shape")) as fh:
        for line in fh:
            k, v = line.strip().split("=", 1)
            shape[k] = int(v)
    I, J, d = shape["I"], shape["J"], shape["d"]

    def read(name, target_shape):
        with open(os.path.join(in_dir, name), "rb") as fh:
            arr = np.frombuffer(fh.read(), dtype="<f8").astype(np.float64)
        return arr.reshape(target_shape)

    ms = ModelState(
        E_u=read("E_u", (I, d)),
        E_v=read("E_v", (J, d)),
        proj=ProjectionParams(read("T", (d, 2 * d)), read("w", (d,)), read("c", (d,))),
    )
    ms.num_layers = shape.get("L", 0)
    return ms
