import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socrec.data import (DEFAULT_STRATA, InteractionTable, SocialTable,
                         build_dataset, inject_noise, load_dataset, load_edges,
                         save_dataset, stratify_by_degree)
from socrec.synthetic import random_tables


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadEdges:
    def test_interaction_dedup(self, tmp_path):
        path = write(tmp_path, "i.txt", "u1 i1\nu1 i1\nu2 i3\n")
        table = load_edges(path, "interaction")
        assert table.edges == [("u1", "i1"), ("u2", "i3")]

    def test_social_symmetrized(self, tmp_path):
        path = write(tmp_path, "s.txt", "u1 u2\n")
        table = load_edges(path, "social")
        assert sorted(table.edges) == [("u1", "u2"), ("u2", "u1")]

    def test_social_self_loop_dropped(self, tmp_path):
        path = write(tmp_path, "s.txt", "u1 u1\nu1 u2\n")
        table = load_edges(path, "social")
        assert table.self_loops_dropped == 1
        assert len(table.edges) == 2

    def test_malformed_lines_counted(self, tmp_path):
        path = write(tmp_path, "i.txt", "u1 i1\njunk\nu2 i2\n")
        table = load_edges(path, "interaction")
        assert table.malformed == 1
        assert len(table.edges) == 2

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = write(tmp_path, "i.txt", "# header\n\nu1 i1\n")
        table = load_edges(path, "interaction")
        assert table.edges == [("u1", "i1")]
        assert table.malformed == 0

    def test_extra_columns_ignored(self, tmp_path):
        path = write(tmp_path, "i.txt", "u1 i1 4 1234567\nu2,i2,5\n")
        table = load_edges(path, "interaction")
        assert table.edges == [("u1", "i1"), ("u2", "i2")]

    def test_missing_file_fatal(self):
        with pytest.raises(FileNotFoundError):
            load_edges("/nonexistent/edges.txt", "interaction")

    def test_bad_kind_fatal(self, tmp_path):
        path = write(tmp_path, "i.txt", "a b\n")
        with pytest.raises(ValueError):
            load_edges(path, "ratings")


class TestBuildDataset:
    def test_three_interactions_split_one_each(self):
        inter = InteractionTable(edges=[("u", "a"), ("u", "b"), ("u", "c")])
        ds = build_dataset(inter, SocialTable(edges=[]), split_seed=5)
        assert len(ds.train_edges) == 1
        assert len(ds.val_edges) == 1
        assert len(ds.test_edges) == 1
        all_items = {int(v) for _, v in np.concatenate(
            [ds.train_edges, ds.val_edges, ds.test_edges])}
        assert all_items == {0, 1, 2}

    def test_single_interaction_stays_in_train(self):
        inter = InteractionTable(edges=[("u", "a")])
        ds = build_dataset(inter, SocialTable(edges=[]))
        assert len(ds.train_edges) == 1
        assert len(ds.val_edges) == 0
        assert len(ds.test_edges) == 0

    def test_two_interactions_test_only(self):
        inter = InteractionTable(edges=[("u", "a"), ("u", "b")])
        ds = build_dataset(inter, SocialTable(edges=[]))
        assert len(ds.train_edges) == 1
        assert len(ds.val_edges) == 0
        assert len(ds.test_edges) == 1

    def test_empty_interactions_fatal(self):
        with pytest.raises(ValueError):
            build_dataset(InteractionTable(edges=[]), SocialTable(edges=[]))

    def test_social_only_user_retained(self):
        inter = InteractionTable(edges=[("u1", "a")])
        soc = SocialTable(edges=[("u1", "u9"), ("u9", "u1")])
        ds = build_dataset(inter, soc)
        assert ds.num_users == 2
        assert ds.degree[ds.user_index["u9"]] == 0

    def test_partition_and_eligibility(self):
        inter, soc = random_tables(12, 20, min_items=1, max_items=6, seed=9)
        ds = build_dataset(inter, soc, split_seed=1)
        train = {tuple(e) for e in ds.train_edges}
        val = {tuple(e) for e in ds.val_edges}
        test = {tuple(e) for e in ds.test_edges}
        assert not train & val and not train & test and not val & test
        assert len(train) + len(val) + len(test) == len(inter.edges)
        # every held-out user still trains on something
        train_users = {u for u, _ in train}
        assert {u for u, _ in val} <= train_users
        assert {u for u, _ in test} <= train_users

    def test_density_matches_source(self):
        inter, soc = random_tables(10, 15, seed=4)
        ds = build_dataset(inter, soc)
        assert ds.density == pytest.approx(
            len(inter.edges) / (ds.num_users * ds.num_items))

    def test_deterministic_byte_identical_serialization(self, tmp_path):
        inter, soc = random_tables(10, 15, seed=8)
        paths = []
        for k in range(2):
            ds = build_dataset(inter, soc, split_seed=42)
            out = tmp_path / f"ds{k}"
            save_dataset(ds, str(out))
            paths.append(out)
        for name in ("meta", "train.txt", "val.txt", "test.txt", "social.txt"):
            assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()

    def test_roundtrip(self, tmp_path):
        inter, soc = random_tables(10, 15, seed=8)
        ds = build_dataset(inter, soc, split_seed=42)
        save_dataset(ds, str(tmp_path / "ds"))
        back = load_dataset(str(tmp_path / "ds"))
        assert back.num_users == ds.num_users
        assert back.num_items == ds.num_items
        np.testing.assert_array_equal(back.train_edges, ds.train_edges)
        np.testing.assert_array_equal(back.social_edges, ds.social_edges)
        np.testing.assert_array_equal(back.degree, ds.degree)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 8)),
                min_size=1, max_size=60),
       st.integers(0, 2 ** 31 - 1))
def test_split_partition_property(raw_edges, seed):
    inter = InteractionTable(edges=list(dict.fromkeys(raw_edges)))
    ds = build_dataset(inter, SocialTable(edges=[]), split_seed=seed)
    parts = [set(map(tuple, ds.train_edges)), set(map(tuple, ds.val_edges)),
             set(map(tuple, ds.test_edges))]
    assert sum(len(p) for p in parts) == len(inter.edges)
    assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])


class TestInjectNoise:
    def test_ratio_zero_is_identity(self):
        inter, soc = random_tables(8, 12, seed=2)
        ds = build_dataset(inter, soc)
        assert inject_noise(ds, 0.0, seed=1) is ds

    def test_exact_count_disjoint_from_splits(self):
        inter, soc = random_tables(10, 40, seed=2)
        ds = build_dataset(inter, soc)
        noisy = inject_noise(ds, 0.1, seed=7)
        added = len(noisy.train_edges) - len(ds.train_edges)
        assert added == int(0.1 * len(ds.train_edges))
        new = {tuple(e) for e in noisy.train_edges} - {tuple(e) for e in ds.train_edges}
        held = {tuple(e) for e in np.concatenate([ds.val_edges, ds.test_edges])}
        assert not new & held
        np.testing.assert_array_equal(noisy.val_edges, ds.val_edges)
        np.testing.assert_array_equal(noisy.test_edges, ds.test_edges)

    def test_no_duplicate_train_edges(self):
        inter, soc = random_tables(6, 10, seed=5)
        ds = build_dataset(inter, soc)
        noisy = inject_noise(ds, 1.0, seed=3)
        pairs = [tuple(e) for e in noisy.train_edges]
        assert len(pairs) == len(set(pairs))

    def test_bad_ratio_fatal(self):
        inter, soc = random_tables(5, 8, seed=1)
        ds = build_dataset(inter, soc)
        for ratio in (-0.1, 1.5):
            with pytest.raises(ValueError):
                inject_noise(ds, ratio, seed=0)

    def test_capacity_exceeded_fatal(self):
        # 1 user x 2 items, both already interacted: no room for fakes
        inter = InteractionTable(edges=[("u", "a"), ("u", "b")])
        ds = build_dataset(inter, SocialTable(edges=[]))
        with pytest.raises(ValueError):
            inject_noise(ds, 1.0, seed=0)

    def test_degree_recomputed(self):
        inter, soc = random_tables(6, 30, seed=6)
        ds = build_dataset(inter, soc)
        noisy = inject_noise(ds, 0.5, seed=2)
        expect = np.bincount(noisy.train_edges[:, 0], minlength=ds.num_users)
        np.testing.assert_array_equal(noisy.degree, expect)


class TestStratify:
    def test_default_boundaries(self):
        inter, soc = random_tables(10, 30, seed=3)
        ds = build_dataset(inter, soc)
        strata = stratify_by_degree(ds)
        assert strata.boundaries[0] == (0.0, 5.0)
        assert math.isinf(strata.boundaries[-1][1])
        for u in range(ds.num_users):
            lo, hi = strata.interval_of(u)
            assert lo <= ds.degree[u] < hi

    def test_degree_zero_first_stratum(self):
        inter = InteractionTable(edges=[("u1", "a")])
        soc = SocialTable(edges=[("u1", "u2"), ("u2", "u1")])
        ds = build_dataset(inter, soc)
        strata = stratify_by_degree(ds)
        assert strata.interval_of(ds.user_index["u2"]) == (0.0, 5.0)

    def test_degree_twelve_assignment(self):
        edges = [("u", f"i{k}") for k in range(14)]  # 14 -> 12 in train
        ds = build_dataset(InteractionTable(edges=edges), SocialTable(edges=[]))
        assert ds.degree[0] == 12
        strata = stratify_by_degree(ds)
        assert strata.interval_of(0) == (10.0, 15.0)

    def test_every_user_assigned_once(self):
        inter, soc = random_tables(20, 40, seed=11)
        ds = build_dataset(inter, soc)
        strata = stratify_by_degree(ds)
        assert strata.assignment.shape == (ds.num_users,)
        assert ((strata.assignment >= 0)
                & (strata.assignment < len(strata.boundaries))).all()

    def test_gap_fatal(self):
        inter, soc = random_tables(5, 8, seed=1)
        ds = build_dataset(inter, soc)
        with pytest.raises(ValueError):
            stratify_by_degree(ds, ((0, 5), (5, 10), (10, 15), (20, math.inf)))

    def test_overlap_fatal(self):
        inter, soc = random_tables(5, 8, seed=1)
        ds = build_dataset(inter, soc)
        with pytest.raises(ValueError):
            stratify_by_degree(ds, ((0, 6), (5, math.inf)))

    def test_finite_last_fatal(self):
        inter, soc = random_tables(5, 8, seed=1)
        ds = build_dataset(inter, soc)
        with pytest.raises(ValueError):
            stratify_by_degree(ds, ((0, 5), (5, 100)))

    def test_default_strata_are_contiguous(self):
        for (_, hi), (lo, _) in zip(DEFAULT_STRATA, DEFAULT_STRATA[1:]):
            assert hi == lo
        assert DEFAULT_STRATA[2][1] == DEFAULT_STRATA[3][0] == 15
