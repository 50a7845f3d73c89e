import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdrank import (ComparisonDataset, DataError, compress, load_csv,
                    scores_to_ranking, signed_matvec, signed_row, write_csv)


def entries(ds):
    return set(zip(ds.items_i.tolist(), ds.items_j.tolist(),
                   ds.labels.tolist(), ds.counts.tolist()))


class TestCompress:
    def test_merges_coherent_keeps_opposite(self):
        ds = compress([(0, 1, +1), (0, 1, +1), (0, 1, -1)], num_items=2)
        assert entries(ds) == {(0, 1, 1, 2), (0, 1, -1, 1)}
        assert ds.total_comparisons == 3

    def test_empty(self):
        ds = compress([], num_items=3)
        assert ds.num_items == 3
        assert ds.num_entries == 0
        assert ds.total_comparisons == 0

    def test_idempotent_merge(self):
        ds = compress([(2, 5, +1)] * 100, num_items=6)
        assert entries(ds) == {(2, 5, 1, 100)}

    def test_canonicalizes_reversed_pairs(self):
        # (2, 0, +1) asserts 2 above 0, same judgment as (0, 2, -1)
        ds = compress([(2, 0, +1), (0, 2, -1)], num_items=3)
        assert entries(ds) == {(0, 2, -1, 2)}

    def test_counted_tuples(self):
        ds = compress([(0, 1, 1, 5), (1, 0, -1, 2)], num_items=2)
        assert entries(ds) == {(0, 1, 1, 7)}

    def test_tie_rejected_with_row(self):
        with pytest.raises(DataError, match="row 1.*tie"):
            compress([(0, 1, 1), (0, 1, 0)], num_items=2)

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError, match="row 0"):
            compress([(0, 5, 1)], num_items=3)

    def test_self_comparison_rejected(self):
        with pytest.raises(DataError, match="self"):
            compress([(1, 1, 1)], num_items=3)

    def test_bad_label_rejected(self):
        with pytest.raises(DataError, match="label"):
            compress([(0, 1, 2)], num_items=2)

    def test_bad_count_rejected(self):
        with pytest.raises(DataError, match="count"):
            compress([(0, 1, 1, 0)], num_items=2)

    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4),
                              st.sampled_from([-1, 1])), max_size=30),
           st.randoms())
    @settings(max_examples=100, deadline=None)
    def test_order_independent_and_total_preserved(self, raw, rng):
        raw = [(i, j, y) for i, j, y in raw if i != j]
        shuffled = list(raw)
        rng.shuffle(shuffled)
        a = compress(raw, num_items=5)
        b = compress(shuffled, num_items=5)
        assert entries(a) == entries(b)
        assert np.array_equal(a.items_i, b.items_i)
        assert np.array_equal(a.counts, b.counts)
        assert a.total_comparisons == len(raw)


class TestDatasetType:
    def test_arrays_read_only(self):
        ds = compress([(0, 1, 1)], num_items=2)
        for arr in (ds.items_i, ds.items_j, ds.labels, ds.counts):
            with pytest.raises(ValueError):
                arr[0] = 0

    def test_direct_construction_validates(self):
        with pytest.raises(DataError):
            ComparisonDataset(0, np.array([0]), np.array([1]),
                              np.array([1]), np.array([1]))
        with pytest.raises(DataError):
            ComparisonDataset(2, np.array([0]), np.array([0]),
                              np.array([1]), np.array([1]))
        with pytest.raises(DataError):
            ComparisonDataset(2, np.array([0]), np.array([1]),
                              np.array([0]), np.array([1]))

    def test_item_names_length_checked(self):
        with pytest.raises(DataError, match="item_names"):
            ComparisonDataset(2, np.array([0]), np.array([1]),
                              np.array([1]), np.array([1]), item_names=("a",))


class TestSignedRow:
    def test_examples(self):
        assert signed_row(2, 0, +1, 4).tolist() == [-1, 0, 1, 0]
        assert signed_row(2, 0, -1, 4).tolist() == [1, 0, -1, 0]
        assert signed_row(0, 1, +1, 2).tolist() == [1, -1]

    def test_invalid(self):
        with pytest.raises(DataError):
            signed_row(0, 0, 1, 3)
        with pytest.raises(DataError):
            signed_row(0, 1, 0, 3)

    @given(st.integers(0, 5), st.integers(0, 5), st.sampled_from([-1, 1]),
           st.integers(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_dot_identity(self, i, j, y, seed):
        if i == j:
            return
        x = np.random.default_rng(seed).standard_normal(6)
        lhs = float(signed_row(i, j, y, 6) @ x)
        assert lhs == pytest.approx(y * (x[i] - x[j]), abs=1e-12)

    def test_matches_signed_matvec(self):
        ds = compress([(0, 2, -1), (1, 3, 1), (0, 1, 1)], num_items=4)
        x = np.array([0.3, -1.2, 2.0, 0.7])
        rows = np.stack([signed_row(int(i), int(j), int(y), 4)
                         for i, j, y in zip(ds.items_i, ds.items_j, ds.labels)])
        assert np.allclose(rows @ x, signed_matvec(ds, x))


class TestScoresToRanking:
    def test_examples(self):
        assert scores_to_ranking(np.array([0.5, 2.0, -1.0])).tolist() == [1, 0, 2]
        assert scores_to_ranking(np.array([1.0, 1.0])).tolist() == [0, 1]
        assert scores_to_ranking(np.array([-3.0, -2.0, -1.0])).tolist() == [2, 1, 0]

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            scores_to_ranking(np.array([1.0, float("nan")]))
        with pytest.raises(ValueError):
            scores_to_ranking(np.array([1.0, float("inf")]))

    @given(st.integers(0, 2**31), st.integers(2, 12))
    @settings(max_examples=50, deadline=None)
    def test_is_permutation_sorted_descending(self, seed, m):
        x = np.random.default_rng(seed).standard_normal(m)
        order = scores_to_ranking(x)
        assert sorted(order.tolist()) == list(range(m))
        assert np.all(np.diff(x[order]) <= 0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        ds = compress([(0, 1, 1, 3), (0, 2, -1, 1), (1, 2, 1, 2)], num_items=3,
                      item_names=("ant", "bee", "cow"))
        path = tmp_path / "data.csv"
        write_csv(ds, path)
        back = load_csv(path)
        assert back.num_items == 3
        assert back.item_names == ("ant", "bee", "cow")
        assert entries(back) == entries(ds)

    def test_header_mandatory(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1,1\n")
        with pytest.raises(DataError, match="header"):
            load_csv(path)

    def test_three_column_form(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label\na,b,1\na,b,1\nb,a,1\n")
        ds = load_csv(path)
        assert ds.total_comparisons == 3
        assert entries(ds) == {(0, 1, 1, 2), (0, 1, -1, 1)}

    def test_count_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label,count\nx,y,-1,7\n")
        ds = load_csv(path)
        assert ds.total_comparisons == 7

    def test_tie_rejected_with_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label\na,b,1\na,c,0\n")
        with pytest.raises(DataError, match=":3:"):
            load_csv(path)

    def test_bad_label(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label\na,b,2\n")
        with pytest.raises(DataError, match="label"):
            load_csv(path)

    def test_self_comparison(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label\na,a,1\n")
        with pytest.raises(DataError, match="itself"):
            load_csv(path)

    def test_no_rows(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label\n")
        with pytest.raises(DataError, match="no comparison rows"):
            load_csv(path)

    def test_crlf_and_unicode(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_bytes("item_i,item_j,label\r\néclair,baguette,1\r\n"
                         .encode("utf-8"))
        ds = load_csv(path)
        assert ds.item_names == ("éclair", "baguette")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "absent.csv")

    def test_first_appearance_indexing(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("item_i,item_j,label\nzeta,alpha,1\nalpha,mid,-1\n")
        ds = load_csv(path)
        assert ds.item_names == ("zeta", "alpha", "mid")
