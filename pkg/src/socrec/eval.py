"""Leave-one-out ranking evaluation: HR@N / NDCG@N, strata, weight exports."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import projection_forward

log = logging.getLogger(__name__)


@dataclass
class EvalReport:
    """Ranking metrics at several cutoffs, optionally per degree stratum.

    Integer hit counts and NDCG sums are kept alongside the ratios so that
    stratum results recombine to the overall numbers without rounding
    games: overall hits are exactly the sum of per-stratum hits.
    """

    cutoffs: tuple
    num_users: int
    hits: dict                   # cutoff -> int
    ndcg_sums: dict              # cutoff -> float
    hr: dict = field(default_factory=dict)
    ndcg: dict = field(default_factory=dict)
    per_stratum: dict = field(default_factory=dict)  # label -> sub-report dict
    skipped: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.hr:
            denom = max(self.num_users, 1)
            self.hr = {n: self.hits[n] / denom for n in self.cutoffs}
            self.ndcg = {n: self.ndcg_sums[n] / denom for n in self.cutoffs}

    def to_lines(self):
        """Line-delimited `metric cutoff stratum value` rows for plotting."""
        out = []
        for key in sorted(self.metadata):
            out.append(f"# {key}={self.metadata[key]}")
        out.append(f"# users={self.num_users} skipped={self.skipped}")
        for n in self.cutoffs:
            out.append(f"hr {n} all {self.hr[n]:.12g}")
            out.append(f"ndcg {n} all {self.ndcg[n]:.12g}")
        for label, sub in self.per_stratum.items():
            for n in self.cutoffs:
                out.append(f"hr {n} {label} {sub['hr'][n]:.12g}")
                out.append(f"ndcg {n} {label} {sub['ndcg'][n]:.12g}")
        return out

    def to_table(self):
        rows = [f"{'metric':<8}" + "".join(f"@{n:<8}" for n in self.cutoffs)]
        rows.append(f"{'hr':<8}" + "".join(f"{self.hr[n]:<9.4f}" for n in self.cutoffs))
        rows.append(f"{'ndcg':<8}" + "".join(f"{self.ndcg[n]:<9.4f}" for n in self.cutoffs))
        for label, sub in self.per_stratum.items():
            rows.append(f"stratum {label} ({sub['num_users']} users)")
            rows.append(f"{'  hr':<8}" + "".join(f"{sub['hr'][n]:<9.4f}" for n in self.cutoffs))
            rows.append(f"{'  ndcg':<8}" + "".join(f"{sub['ndcg'][n]:<9.4f}" for n in self.cutoffs))
        return "\n".join(rows)


def _split_edges(ds, split):
    if split == "val":
        return ds.val_edges
    if split == "test":
        return ds.test_edges
    raise ValueError(f"unknown split {split!r}")


def _sample_negatives(rng, num_items, known, count):
    """Distinct non-interacted items; None when the pool is too small."""
    pool = num_items - len(known)
    if pool < count:
        return None
    if pool <= 4 * max(count, 1):
        allowed = np.array([v for v in range(num_items) if v not in known],
                           dtype=np.int64)
        rng.shuffle(allowed)
        return allowed[:count]
    picked = set()
    out = np.empty(count, dtype=np.int64)
    k = 0
    while k < count:
        v = int(rng.integers(num_items))
        if v in known or v in picked:
            continue
        picked.add(v)
        out[k] = v
        k += 1
    return out


def held_out_rank(scores, cand):
    """0-based rank of cand[0] among all candidates.

    A candidate outranks the held-out item when its score is strictly
    higher, or equal with a smaller item index (deterministic ties).
    """
    better = (scores[1:] > scores[0]) | ((scores[1:] == scores[0])
                                         & (cand[1:] < cand[0]))
    return int(better.sum())


def _user_ranks(ms, ds, split, num_negatives, seed, social_fusion):
    """0-based rank of each evaluated user's held-out item.

    The held-out item competes against `num_negatives` sampled
    non-interacted items; ties are broken by item index ascending. Each
    user gets its own seeded stream so runs are comparable across models.
    """
    edges = _split_edges(ds, split)
    I = ds.num_users
    known = ds.user_known_items()
    users = []
    ranks = []
    skipped = 0
    for u, held in edges:
        u, held = int(u), int(held)
        rng = np.random.default_rng([seed, u])
        negs = _sample_negatives(rng, ds.num_items, known[u], num_negatives)
        if negs is None:
            skipped += 1
            log.debug("user %d skipped: fewer than %d negative candidates",
                      u, num_negatives)
            continue
        cand = np.concatenate([[held], negs])
        uvec = ms.agg_r[u] + (ms.agg_s[u] if social_fusion else 0.0)
        scores = ms.agg_r[I + cand] @ uvec
        users.append(u)
        ranks.append(held_out_rank(scores, cand))
    if skipped:
        log.warning("%d user(s) skipped on split %r: fewer than %d negative "
                    "candidates", skipped, split, num_negatives)
    return np.array(users, dtype=np.int64), np.array(ranks, dtype=np.int64), skipped


def _tally(ranks, cutoffs):
    hits = {}
    ndcg_sums = {}
    for n in cutoffs:
        in_top = ranks < n
        hits[n] = int(in_top.sum())
        ndcg_sums[n] = float(sum(1.0 / math.log2(r + 2) for r in ranks[in_top]))
    return hits, ndcg_sums


def evaluate(ms, ds, split="test", num_negatives=99, cutoffs=(5, 10, 20),
             seed=0, social_fusion=False, metadata=None):
    """Leave-one-out evaluation over one split.

    HR@N is the fraction of evaluated users whose held-out item lands in
    the top N; NDCG@N credits 1/log2(rank+2) for a 0-based rank below N.
    """
    if ms.agg_r is None:
        raise ValueError("encode() must run before evaluation")
    users, ranks, skipped = _user_ranks(ms, ds, split, num_negatives, seed,
                                        social_fusion)
    cutoffs = tuple(cutoffs)
    hits, ndcg_sums = _tally(ranks, cutoffs)
    return EvalReport(cutoffs=cutoffs, num_users=len(users), hits=hits,
                      ndcg_sums=ndcg_sums, skipped=skipped,
                      metadata=dict(metadata or {}))


def evaluate_stratified(ms, ds, strata, split="test", num_negatives=99,
                        cutoffs=(5, 10, 20), seed=0, social_fusion=False,
                        metadata=None):
    """Evaluation with per-degree-stratum breakdowns.

    The same per-user ranks feed both the overall and the stratum metrics,
    so the per-stratum hit counts sum exactly to the overall count. Empty
    strata are omitted rather than reported as zero.
    """
    if ms.agg_r is None:
        raise ValueError("encode() must run before evaluation")
    users, ranks, skipped = _user_ranks(ms, ds, split, num_negatives, seed,
                                        social_fusion)
    cutoffs = tuple(cutoffs)
    hits, ndcg_sums = _tally(ranks, cutoffs)
    report = EvalReport(cutoffs=cutoffs, num_users=len(users), hits=hits,
                        ndcg_sums=ndcg_sums, skipped=skipped,
                        metadata=dict(metadata or {}))

    labels = strata.labels()
    member_stratum = strata.assignment[users] if len(users) else np.zeros(0, int)
    for s, label in enumerate(labels):
        mask = member_stratum == s
        if not mask.any():
            continue
        s_hits, s_ndcg = _tally(ranks[mask], cutoffs)
        denom = int(mask.sum())
        report.per_stratum[label] = {
            "num_users": denom,
            "hits": s_hits,
            "ndcg_sums": s_ndcg,
            "hr": {n: s_hits[n] / denom for n in cutoffs},
            "ndcg": {n: s_ndcg[n] / denom for n in cutoffs},
        }
    return report


@dataclass
class RelevanceWeightExport:
    """Learned pair weights for social ties, sorted by z ascending."""

    rows: list  # (user_i, user_j, z, zhat)

    def to_lines(self):
        out = ["# user_i user_j z zhat"]
        for i, j, z, zhat in self.rows:
            out.append(f"{i} {j} {z:.12g} {zhat:.12g}")
        return out


def export_relevance_weights(ms, ds, sample="all", seed=0):
    """z and zhat for each (optionally sampled) undirected social tie."""
    if ms.agg_r is None:
        raise ValueError("encode() must run before exporting weights")
    ties = ds.social_edges[ds.social_edges[:, 0] < ds.social_edges[:, 1]]
    if sample != "all":
        count = min(int(sample), len(ties))
        rng = np.random.default_rng(seed)
        ties = ties[rng.choice(len(ties), size=count, replace=False)]
    if len(ties) == 0:
        return RelevanceWeightExport(rows=[])
    i, j = ties[:, 0], ties[:, 1]
    z, _ = projection_forward(ms.proj, ms.agg_r[i], ms.agg_r[j])
    zhat = (ms.agg_s[i] * ms.agg_s[j]).sum(axis=1)
    order = np.argsort(z, kind="stable")
    rows = [(int(i[k]), int(j[k]), float(z[k]), float(zhat[k])) for k in order]
    return RelevanceWeightExport(rows=rows)
