import io

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import random_masked, toy_dataset
from vbsvm.data import (
    DesignPair,
    LabeledDataset,
    StandardizeTransform,
    build_penalty_design,
    build_random_intercept_design,
    group_indicator_matrix,
    read_csv,
    split_holdout,
    standardize,
    to_pm_labels,
    write_csv,
)
from vbsvm.distributions import make_rng
from vbsvm.errors import DataError


def test_label_mapping():
    np.testing.assert_array_equal(to_pm_labels([0, 1, 1]), [-1, 1, 1])
    np.testing.assert_array_equal(to_pm_labels([-1, 1]), [-1, 1])
    with pytest.raises(DataError):
        to_pm_labels([0, 2])


def test_dataset_validation():
    with pytest.raises(DataError):
        toy_dataset([[1.0], [2.0]], [1, 0])
    with pytest.raises(DataError):
        toy_dataset([[1.0]], [1, -1])
    with pytest.raises(DataError):
        toy_dataset([[np.nan], [1.0]], [1, -1])


def test_mask_blanks_cells_and_full_mask_collapses():
    ds = toy_dataset([[1.0, 2.0], [3.0, 4.0]], [1, -1], mask=[[1, 0], [1, 1]])
    assert np.isnan(ds.D[0, 1]) and ds.has_missing
    assert ds.complete_cases().n == 1
    full = toy_dataset([[1.0], [2.0]], [1, -1], mask=[[1], [1]])
    assert not full.has_missing


def test_penalty_design_shape():
    ds = toy_dataset(np.arange(6.0).reshape(3, 2), [1, -1, 1])
    des = build_penalty_design(ds)
    assert (des.p, des.m) == (1, 2)
    np.testing.assert_array_equal(des.C, np.column_stack([np.ones(3), ds.D]))


def test_penalty_design_rejects_missing():
    with pytest.raises(DataError):
        build_penalty_design(random_masked(20, 3, 0.2, 1))


def test_random_intercept_design_orders_groups_by_appearance():
    ds = LabeledDataset([1, -1, 1, -1], [[0.1], [0.2], [0.3], [0.4]], groups=np.array(["b", "a", "b", "c"]))
    des = build_random_intercept_design(ds)
    assert des.group_levels == ("b", "a", "c")
    np.testing.assert_array_equal(des.Z, [[1, 0, 0], [0, 1, 0], [1, 0, 0], [0, 0, 1]])
    assert des.p == 2


def test_random_intercept_design_rejects_unseen_level():
    ds = LabeledDataset([1, -1], [[0.1], [0.2]], groups=np.array(["a", "a"]))
    with pytest.raises(DataError):
        build_random_intercept_design(ds, levels=("a", "z"))


def test_group_indicator_ignores_unknown_levels():
    Z, levels = group_indicator_matrix(np.array(["x", "q"]), ("x",))
    np.testing.assert_array_equal(Z, [[1], [0]])


def test_design_pair_needs_columns():
    with pytest.raises(DataError):
        DesignPair(np.zeros((3, 0)), np.zeros((3, 0)))


@given(hnp.arrays(float, (12, 3), elements=st.floats(-1e3, 1e3)))
def test_standardize_round_trip(D):
    if np.any(np.ptp(D, axis=0) == 0):
        with pytest.raises(DataError):
            standardize(D)
        return
    assume(np.all(D.std(axis=0, ddof=1) > 1e-6))
    out, tr = standardize(D)
    np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(out.std(axis=0, ddof=1), 1, rtol=1e-9)
    np.testing.assert_allclose(tr.invert(out), D, rtol=1e-9, atol=1e-9)


def test_standardize_uses_observed_entries_only():
    D = np.array([[1.0, 5.0], [3.0, np.nan], [5.0, 7.0]])
    mask = np.array([[1, 1], [1, 0], [1, 1]])
    out, tr = standardize(D, mask)
    np.testing.assert_allclose(tr.center, [3.0, 6.0])
    assert np.isnan(out[1, 1])


def test_identity_transform():
    tr = StandardizeTransform.identity(2)
    np.testing.assert_array_equal(tr.apply([[1.0, 2.0]]), [[1.0, 2.0]])
    with pytest.raises(DataError):
        StandardizeTransform(np.zeros(1), np.zeros(1))


def test_split_keeps_both_classes_and_partitions():
    ds = toy_dataset(np.arange(20.0)[:, None], [1] * 2 + [-1] * 18)
    for seed in range(20):
        train, test = split_holdout(ds, 0.75, make_rng(seed))
        assert set(np.unique(ds.y[train])) == {-1.0, 1.0}
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(20))
        assert test.size == 5


def test_split_observed_test_rows_are_complete():
    ds = random_masked(40, 3, 0.1, 2)
    _, test = split_holdout(ds, 0.75, make_rng(0), observed_test=True)
    assert ds.mask[test].all()


def test_split_rejects_bad_fraction():
    ds = toy_dataset(np.arange(4.0)[:, None], [1, -1, 1, -1])
    with pytest.raises(ValueError):
        split_holdout(ds, 1.0, make_rng(0))


def test_csv_round_trip_with_missing_and_groups(tmp_path):
    ds = LabeledDataset(
        [1, -1, 1],
        [[0.1, np.nan], [1 / 3, 2.0], [-5e-20, 4.0]],
        groups=np.array(["g1", "g2", "g1"]),
        mask=[[1, 0], [1, 1], [1, 1]],
        columns=("a", "b"),
    )
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    back = read_csv(path, "y", "group")
    np.testing.assert_array_equal(back.y, ds.y)
    np.testing.assert_array_equal(back.D, ds.D)
    np.testing.assert_array_equal(back.mask, ds.mask)
    assert back.columns == ("a", "b")
    assert back.groups.tolist() == ["g1", "g2", "g1"]


def test_csv_to_handle_and_zero_one_labels(tmp_path):
    buf = io.StringIO()
    write_csv(toy_dataset([[1.5]], [1]), buf)
    assert buf.getvalue() == "y,x1\n1,1.5\n"
    path = tmp_path / "z.csv"
    path.write_text("x,label\n1,0\n2,1\nNA,1\n")
    ds = read_csv(path, "label")
    np.testing.assert_array_equal(ds.y, [-1, 1, 1])
    assert ds.mask[2, 0] == 0


@pytest.mark.parametrize(
    "text, label",
    [
        ("", "y"),
        ("x,y\n1,1\n", "lab"),
        ("x,y\n1\n", "y"),
        ("x,y\nabc,1\n", "y"),
        ("x,y\n1,\n", "y"),
        ("x,y\n1,yes\n", "y"),
    ],
)
def test_csv_errors(tmp_path, text, label):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError):
        read_csv(path, label)
