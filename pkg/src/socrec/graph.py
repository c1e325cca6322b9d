"""Sparse symmetric-normalized adjacencies and one-layer propagation.

Both views use the same normalization: each stored entry is
1/sqrt(deg(a) * deg(b)) for its endpoints, zero-degree rows stay empty,
and the self-loop is applied as `+ E` during propagation instead of being
materialized on the diagonal.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(eq=False)
class NormalizedGraph:
    """Symmetric-normalized adjacency in CSR form plus its view tag."""

    matrix: sp.csr_matrix
    view: str  # "interaction" | "social"

    @property
    def num_nodes(self):
        return self.matrix.shape[0]

    # CSR layout accessors (row offsets / column indices / values)
    @property
    def row_offsets(self):
        return self.matrix.indptr

    @property
    def col_indices(self):
        return self.matrix.indices

    @property
    def values(self):
        return self.matrix.data


def _normalized_csr(rows, cols, deg_row, deg_col, n):
    vals = 1.0 / np.sqrt(deg_row[rows] * deg_col[cols])
    m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n), dtype=np.float64)
    m = m.tocsr()
    m.sort_indices()
    return m


def build_interaction_laplacian(ds):
    """Normalized bidirectional user-item adjacency over I+J nodes.

    Users occupy rows [0, I), items rows [I, I+J). Only train edges
    contribute; the diagonal blocks are zero.
    """
    I, J = ds.num_users, ds.num_items
    if len(ds.train_edges) == 0:
        return NormalizedGraph(sp.csr_matrix((I + J, I + J), dtype=np.float64),
                               "interaction")
    u = ds.train_edges[:, 0]
    v = ds.train_edges[:, 1]
    deg_u = np.bincount(u, minlength=I).astype(np.float64)
    deg_v = np.bincount(v, minlength=J).astype(np.float64)
    deg = np.concatenate([deg_u, deg_v])
    rows = np.concatenate([u, I + v])
    cols = np.concatenate([I + v, u])
    return NormalizedGraph(_normalized_csr(rows, cols, deg, deg, I + J),
                           "interaction")


def build_social_laplacian(ds):
    """Normalized user-user adjacency over I nodes from symmetric ties."""
    I = ds.num_users
    if len(ds.social_edges) == 0:
        return NormalizedGraph(sp.csr_matrix((I, I), dtype=np.float64), "social")
    a = ds.social_edges[:, 0]
    b = ds.social_edges[:, 1]
    deg = np.bincount(a, minlength=I).astype(np.float64)
    return NormalizedGraph(_normalized_csr(a, b, deg, deg, I), "social")


def propagate(g, E):
    """One propagation layer with implicit self-loop: returns A_norm @ E + E."""
    E = np.asarray(E)
    if E.shape[0] != g.num_nodes:
        raise ValueError(f"embedding rows {E.shape[0]} != graph nodes {g.num_nodes}")
    return g.matrix @ E + E
