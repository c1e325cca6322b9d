"""Edge-file ingestion, ID remapping, leave-one-out splits, noise injection."""

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

# Default degree strata: half-open intervals covering every nonnegative degree.
DEFAULT_STRATA = ((0, 5), (5, 10), (10, 15), (15, math.inf))


@dataclass
class InteractionTable:
    """Raw user-item edges with external ids, deduplicated in load order."""

    edges: list  # list of (user, item) external-id pairs
    malformed: int = 0


@dataclass
class SocialTable:
    """Raw user-user ties, symmetrized (both directions stored), no self-loops."""

    edges: list  # list of (user, user) external-id pairs, both directions
    malformed: int = 0
    self_loops_dropped: int = 0


def _tokenize(line):
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    return line.replace(",", " ").split()


def load_edges(path, kind):
    """Parse an edge file into an InteractionTable or SocialTable.

    Lines hold at least two whitespace- or comma-separated tokens; extra
    columns (ratings, timestamps) are parsed and ignored. Lines with fewer
    than two tokens are counted as malformed and skipped. Social tables are
    symmetrized and self-ties dropped.
    """
    if kind not in ("interaction", "social"):
        raise ValueError(f"unknown edge kind: {kind!r}")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"edge file not found: {path}")

    seen = set()
    edges = []
    malformed = 0
    self_loops = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            toks = _tokenize(line)
            if toks is None:
                continue
            if len(toks) < 2:
                malformed += 1
                continue
            a, b = toks[0], toks[1]
            if kind == "social":
                if a == b:
                    self_loops += 1
                    continue
                for pair in ((a, b), (b, a)):
                    if pair not in seen:
                        seen.add(pair)
                        edges.append(pair)
            else:
                if (a, b) not in seen:
                    seen.add((a, b))
                    edges.append((a, b))
    if malformed:
        log.warning("%s: skipped %d malformed line(s)", path, malformed)
    if kind == "social":
        return SocialTable(edges=edges, malformed=malformed,
                           self_loops_dropped=self_loops)
    return InteractionTable(edges=edges, malformed=malformed)


@dataclass(eq=False)
class Dataset:
    """ID-remapped interaction/social edges with leave-one-out splits.

    train/val/test are pairwise disjoint and their union is the full
    deduplicated interaction set. Social edges are stored with both
    directions present. `degree` counts train interactions per user.
    """

    num_users: int
    num_items: int
    user_ids: list            # dense index -> external id
    item_ids: list
    user_index: dict          # external id -> dense index
    item_index: dict
    train_edges: np.ndarray   # (n, 2) int64 (user, item)
    val_edges: np.ndarray
    test_edges: np.ndarray
    social_edges: np.ndarray  # (m, 2) int64, symmetric
    degree: np.ndarray        # (num_users,) train interaction count
    split_seed: int = 0
    _user_items: list = field(default=None, repr=False, compare=False)
    _user_known: list = field(default=None, repr=False, compare=False)
    _user_ties: list = field(default=None, repr=False, compare=False)

    @property
    def density(self):
        n = len(self.train_edges) + len(self.val_edges) + len(self.test_edges)
        return n / (self.num_users * self.num_items)

    def user_train_items(self):
        """Per-user sets of train item indices (cached)."""
        if self._user_items is None:
            sets = [set() for _ in range(self.num_users)]
            for u, v in self.train_edges:
                sets[u].add(int(v))
            self._user_items = sets
        return self._user_items

    def user_known_items(self):
        """Per-user sets of items seen in any split (cached)."""
        if self._user_known is None:
            sets = [set() for _ in range(self.num_users)]
            for arr in (self.train_edges, self.val_edges, self.test_edges):
                for u, v in arr:
                    sets[u].add(int(v))
            self._user_known = sets
        return self._user_known

    def user_ties(self):
        """Per-user sets of social neighbours (cached)."""
        if self._user_ties is None:
            sets = [set() for _ in range(self.num_users)]
            for a, b in self.social_edges:
                sets[a].add(int(b))
            self._user_ties = sets
        return self._user_ties


def _edge_array(pairs):
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.asarray(pairs, dtype=np.int64)


def build_dataset(inter, soc=None, split_seed=0):
    """Remap ids densely and build leave-one-out train/val/test splits.

    Users with >=3 interactions give one uniformly chosen interaction to
    test and one to validation; users with exactly 2 contribute test only;
    users with a single interaction stay fully in train. Index maps follow
    first appearance in the interaction table (social-only users appended),
    so identical inputs and seed rebuild the same dataset bit for bit.
    """
    if not inter.edges:
        raise ValueError("empty interaction table")

    user_index, user_ids = {}, []
    item_index, item_ids = {}, []
    per_user = []  # item index lists in load order
    for a, b in inter.edges:
        if a not in user_index:
            user_index[a] = len(user_ids)
            user_ids.append(a)
            per_user.append([])
        if b not in item_index:
            item_index[b] = len(item_ids)
            item_ids.append(b)
        per_user[user_index[a]].append(item_index[b])

    social_pairs = []
    if soc is not None:
        for a, b in soc.edges:
            for ext in (a, b):
                if ext not in user_index:
                    # social-only users are retained with zero interactions
                    user_index[ext] = len(user_ids)
                    user_ids.append(ext)
                    per_user.append([])
            social_pairs.append((user_index[a], user_index[b]))

    num_users = len(user_ids)
    num_items = len(item_ids)
    rng = np.random.default_rng(split_seed)

    train, val, test = [], [], []
    for u in range(num_users):
        items = per_user[u]
        k = len(items)
        if k == 0:
            continue
        if k == 1:
            train.append((u, items[0]))
            continue
        pick = rng.choice(k, size=2 if k >= 3 else 1, replace=False)
        test.append((u, items[pick[0]]))
        held = {int(pick[0])}
        if k >= 3:
            val.append((u, items[pick[1]]))
            held.add(int(pick[1]))
        for j, v in enumerate(items):
            if j not in held:
                train.append((u, v))

    train_edges = _edge_array(train)
    degree = np.bincount(train_edges[:, 0], minlength=num_users).astype(np.int64) \
        if len(train_edges) else np.zeros(num_users, dtype=np.int64)

    return Dataset(
        num_users=num_users,
        num_items=num_items,
        user_ids=user_ids,
        item_ids=item_ids,
        user_index=user_index,
        item_index=item_index,
        train_edges=train_edges,
        val_edges=_edge_array(val),
        test_edges=_edge_array(test),
        social_edges=_edge_array(sorted(set(social_pairs))),
        degree=degree,
        split_seed=split_seed,
    )


def inject_noise(ds, ratio, seed):
    """Add floor(ratio * |train|) fake train edges sampled uniformly from the
    complement of train/val/test. Held-out splits are never touched."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"noise ratio must lie in [0, 1], got {ratio}")
    count = int(ratio * len(ds.train_edges))
    if count == 0:
        return ds

    existing = set()
    for arr in (ds.train_edges, ds.val_edges, ds.test_edges):
        for u, v in arr:
            existing.add((int(u), int(v)))
    capacity = ds.num_users * ds.num_items - len(existing)
    if count > capacity:
        raise ValueError(f"cannot place {count} fake edges, only {capacity} free cells")

    rng = np.random.default_rng(seed)
    fake = []
    while len(fake) < count:
        u = int(rng.integers(ds.num_users))
        v = int(rng.integers(ds.num_items))
        if (u, v) in existing:
            continue
        existing.add((u, v))
        fake.append((u, v))

    train_edges = np.concatenate([ds.train_edges, _edge_array(fake)], axis=0)
    degree = np.bincount(train_edges[:, 0], minlength=ds.num_users).astype(np.int64)
    return Dataset(
        num_users=ds.num_users,
        num_items=ds.num_items,
        user_ids=ds.user_ids,
        item_ids=ds.item_ids,
        user_index=ds.user_index,
        item_index=ds.item_index,
        train_edges=train_edges,
        val_edges=ds.val_edges,
        test_edges=ds.test_edges,
        social_edges=ds.social_edges,
        degree=degree,
        split_seed=ds.split_seed,
    )


@dataclass(eq=False)
class DegreeStrata:
    """Partition of users into half-open degree intervals."""

    boundaries: tuple          # ((lo, hi), ...) hi exclusive, last hi = inf
    assignment: np.ndarray     # user index -> stratum index

    def interval_of(self, user):
        return self.boundaries[int(self.assignment[user])]

    def members(self, stratum):
        return np.flatnonzero(self.assignment == stratum)

    def labels(self):
        out = []
        for lo, hi in self.boundaries:
            hi_s = "inf" if math.isinf(hi) else f"{int(hi)}"
            out.append(f"[{int(lo)},{hi_s})")
        return out


def stratify_by_degree(ds, boundaries=DEFAULT_STRATA):
    """Assign each user to the interval containing its train degree.

    Intervals must partition [0, inf): contiguous, starting at 0, last
    upper bound infinite.
    """
    bounds = tuple((float(lo), float(hi)) for lo, hi in boundaries)
    if not bounds or bounds[0][0] != 0:
        raise ValueError("strata must start at degree 0")
    for (lo, hi), (lo2, _) in zip(bounds, bounds[1:]):
        if hi != lo2:
            raise ValueError(f"strata gap or overlap between {hi} and {lo2}")
    for lo, hi in bounds:
        if not lo < hi:
            raise ValueError(f"empty stratum [{lo}, {hi})")
    if not math.isinf(bounds[-1][1]):
        raise ValueError("last stratum must extend to infinity")

    cuts = np.array([lo for lo, _ in bounds[1:]])
    assignment = np.searchsorted(cuts, ds.degree, side="right").astype(np.int64)
    return DegreeStrata(boundaries=bounds, assignment=assignment)


# --- plain-text serialization ------------------------------------------------

def save_dataset(ds, out_dir):
    """Write the dataset as a directory of deterministic text files."""
    os.makedirs(out_dir, exist_ok=True)
    meta = [
        f"num_users={ds.num_users}",
        f"num_items={ds.num_items}",
        f"num_train={len(ds.train_edges)}",
        f"num_val={len(ds.val_edges)}",
        f"num_test={len(ds.test_edges)}",
        f"num_social={len(ds.social_edges)}",
        f"split_seed={ds.split_seed}",
        f"density={ds.density:.10e}",
    ]
    with open(os.path.join(out_dir, "meta"), "w") as fh:
        fh.write("\n".join(meta) + "\n")
    for name, arr in (("train.txt", ds.train_edges), ("val.txt", ds.val_edges),
                      ("test.txt", ds.test_edges), ("social.txt", ds.social_edges)):
        with open(os.path.join(out_dir, name), "w") as fh:
            for a, b in arr:
                fh.write(f"{a} {b}\n")


def load_dataset(in_dir):
    """Load a dataset directory written by save_dataset (identity id maps)."""
    meta = {}
    with open(os.path.join(in_dir, "meta")) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.strip().split("=", 1)
                meta[k] = v
    num_users = int(meta["num_users"])
    num_items = int(meta["num_items"])

    def read_pairs(name):
        path = os.path.join(in_dir, name)
        pairs = []
        with open(path) as fh:
            for line in fh:
                toks = line.split()
                if len(toks) >= 2:
                    pairs.append((int(toks[0]), int(toks[1])))
        return _edge_array(pairs)

    train_edges = read_pairs("train.txt")
    degree = np.bincount(train_edges[:, 0], minlength=num_users).astype(np.int64) \
        if len(train_edges) else np.zeros(num_users, dtype=np.int64)
    return Dataset(
        num_users=num_users,
        num_items=num_items,
        user_ids=list(range(num_users)),
        item_ids=list(range(num_items)),
        user_index={i: i for i in range(num_users)},
        item_index={i: i for i in range(num_items)},
        train_edges=train_edges,
        val_edges=read_pairs("val.txt"),
        test_edges=read_pairs("test.txt"),
        social_edges=read_pairs("social.txt"),
        degree=degree,
        split_seed=int(meta.get("split_seed", 0)),
    )
