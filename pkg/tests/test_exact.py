import numpy as np
import pytest

from neighborly.core import LabeledDataset
from neighborly.exact import (
    DEFEATIST,
    EXACT,
    brute_force_knn,
    build_kdtree,
    fixed_radius_search,
    kdtree_knn,
)


def random_dataset(n, d, seed, labels=False):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=n) if labels else None
    return LabeledDataset.from_points(rng.normal(size=(n, d)), labels=y, rng=rng)


class TestBruteForce:
    def test_k_equals_n_returns_all_sorted(self):
        ds = random_dataset(30, 2, 0)
        hits = brute_force_knn(ds, np.zeros(2), 30)
        assert len(hits) == 30
        dists = [h.distance for h in hits]
        assert dists == sorted(dists)
        assert sorted(h.index for h in hits) == list(range(30))

    def test_duplicates_break_ties_by_priority(self):
        pts = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
        ds = LabeledDataset.from_points(pts, priorities=np.array([0.9, 0.2, 0.5]))
        hits = brute_force_knn(ds, np.array([1.0, 1.0]), 2)
        assert [h.index for h in hits] == [1, 0]

    def test_matches_full_sort_oracle(self):
        ds = random_dataset(50, 3, 7)
        q = np.random.default_rng(99).normal(size=3)
        dist = ds.distances_to(q)
        oracle = sorted(range(50), key=lambda i: (dist[i], ds.priorities[i], i))[:5]
        hits = brute_force_knn(ds, q, 5)
        assert [h.index for h in hits] == oracle

    def test_k_out_of_range(self):
        ds = random_dataset(5, 2, 0)
        with pytest.raises(ValueError):
            brute_force_knn(ds, np.zeros(2), 6)
        with pytest.raises(ValueError):
            brute_force_knn(ds, np.zeros(2), 0)


class TestFixedRadius:
    def test_empty_when_radius_too_small(self):
        ds = random_dataset(20, 2, 1)
        q = np.full(2, 100.0)
        assert fixed_radius_search(ds, q, 0.5) == []

    def test_all_points_when_radius_huge(self):
        ds = random_dataset(20, 2, 1)
        hits = fixed_radius_search(ds, np.zeros(2), 1e6)
        assert len(hits) == 20

    def test_matches_linear_scan(self):
        ds = random_dataset(80, 3, 5)
        q = np.zeros(3)
        h = 1.4
        expected = {i for i, d in enumerate(ds.distances_to(q)) if d <= h}
        hits = fixed_radius_search(ds, q, h)
        assert {hit.index for hit in hits} == expected
        dists = [hit.distance for hit in hits]
        assert dists == sorted(dists)


class TestKdTreeBuild:
    def test_single_leaf_when_n_below_capacity(self):
        ds = random_dataset(6, 2, 2)
        tree = build_kdtree(ds, 10)
        leaves = tree.leaves()
        assert len(leaves) == 1
        assert sorted(leaves[0].tolist()) == list(range(6))

    def test_line_of_8_gives_depth_3(self):
        ds = LabeledDataset.from_points(np.arange(8.0)[:, None],
                                        rng=np.random.default_rng(0))
        tree = build_kdtree(ds, 1)
        assert tree.depth == 3
        assert all(len(leaf) == 1 for leaf in tree.leaves())

    def test_depth_bound_on_random_data(self):
        ds = random_dataset(1000, 2, 3)
        tree = build_kdtree(ds, 10)
        assert tree.depth <= int(np.ceil(np.log2(1000 / 10))) + 1

    def test_every_id_in_exactly_one_leaf(self):
        ds = random_dataset(137, 3, 4)
        tree = build_kdtree(ds, 7)
        ids = np.concatenate(tree.leaves())
        assert sorted(ids.tolist()) == list(range(137))
        assert all(len(leaf) <= 7 for leaf in tree.leaves())

    def test_duplicate_points_terminate(self):
        pts = np.ones((12, 2))
        pts[:3] = 0.0
        ds = LabeledDataset.from_points(pts, rng=np.random.default_rng(0))
        tree = build_kdtree(ds, 2)
        ids = np.concatenate(tree.leaves())
        assert sorted(ids.tolist()) == list(range(12))

    def test_empty_dataset_rejected(self):
        empty = LabeledDataset.from_points(np.empty((0, 2)))
        with pytest.raises(ValueError):
            build_kdtree(empty, 4)

    def test_rebuild_is_bit_identical(self):
        ds = random_dataset(200, 3, 6)
        t1 = build_kdtree(ds, 5)
        t2 = build_kdtree(ds, 5)

        def flatten(node):
            if hasattr(node, "ids"):
                return [("leaf", tuple(node.ids.tolist()))]
            return ([("split", node.axis, node.value)]
                    + flatten(node.left) + flatten(node.right))

        assert flatten(t1.root) == flatten(t2.root)


class TestKdTreeQuery:
    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
    def test_exact_matches_brute_force(self, d):
        ds = random_dataset(400, d, 10 + d)
        tree = build_kdtree(ds, 8)
        rng = np.random.default_rng(999 + d)
        for _ in range(25):
            q = rng.normal(size=d)
            for k in (1, 5):
                got = kdtree_knn(tree, q, k, EXACT)
                want = brute_force_knn(ds, q, k)
                assert [(h.index, h.distance) for h in got] == \
                       [(h.index, h.distance) for h in want]

    def test_single_leaf_tree_both_modes_equal_brute(self):
        ds = random_dataset(9, 2, 12)
        tree = build_kdtree(ds, 20)
        q = np.array([0.1, -0.3])
        want = [h.index for h in brute_force_knn(ds, q, 4)]
        assert [h.index for h in kdtree_knn(tree, q, 4, EXACT)] == want
        assert [h.index for h in kdtree_knn(tree, q, 4, DEFEATIST)] == want

    def test_defeatist_can_be_wrong_across_split(self):
        # Two points on a line split between them; a query in the left cell
        # but nearly on the split plane has its true neighbor on the right.
        ds = LabeledDataset.from_points(np.array([[0.49], [0.51]]),
                                        rng=np.random.default_rng(0))
        tree = build_kdtree(ds, 1)
        q = np.array([0.5095])
        exact = kdtree_knn(tree, q, 1, EXACT)
        defeatist = kdtree_knn(tree, q, 1, DEFEATIST)
        assert exact[0].index == 1
        assert defeatist[0].index == 0
        assert defeatist[0].distance > exact[0].distance

    def test_defeatist_distances_dominate_exact(self):
        ds = random_dataset(300, 3, 13)
        tree = build_kdtree(ds, 10)
        rng = np.random.default_rng(77)
        for _ in range(30):
            q = rng.normal(size=3)
            exact = kdtree_knn(tree, q, 3, EXACT)
            defeatist = kdtree_knn(tree, q, 3, DEFEATIST)
            for e, f in zip(exact, defeatist):
                assert f.distance >= e.distance - 1e-12

    def test_defeatist_may_return_fewer_than_k(self):
        ds = random_dataset(64, 2, 14)
        tree = build_kdtree(ds, 4)
        hits = kdtree_knn(tree, np.zeros(2), 10, DEFEATIST)
        assert 1 <= len(hits) <= 4

    def test_exact_k_out_of_range(self):
        ds = random_dataset(5, 2, 15)
        tree = build_kdtree(ds, 2)
        with pytest.raises(ValueError):
            kdtree_knn(tree, np.zeros(2), 6, EXACT)

    def test_tie_on_split_plane_resolved_like_brute_force(self):
        # query equidistant from points straddling the split plane
        pts = np.array([[0.0], [2.0], [4.0], [6.0]])
        ds = LabeledDataset.from_points(pts, priorities=np.array([0.8, 0.6, 0.1, 0.5]))
        tree = build_kdtree(ds, 1)
        q = np.array([3.0])
        want = brute_force_knn(ds, q, 2)
        got = kdtree_knn(tree, q, 2, EXACT)
        assert [h.index for h in got] == [h.index for h in want] == [2, 1]
