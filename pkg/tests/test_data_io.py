import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricbounds import (EmptyFileError, InputError, LabeledDataset, NonNumericError,
                          RaggedRowError, SplitError, SplitSpec, augment_noise, load_csv,
                          psd_factor, save_csv, split, standardize, wishart_covariance)


@pytest.fixture
def csv_file(tmp_path):
    def write(text):
        p = tmp_path / "data.csv"
        p.write_text(text)
        return p
    return write


class TestLoadCsv:
    def test_basic(self, csv_file):
        ds = load_csv(csv_file("1,2,a\n3,4,b\n5,6,a\n"))
        assert ds.D == 2
        assert ds.labels.tolist() == [0, 1, 0]
        np.testing.assert_array_equal(ds.points, [[1, 2], [3, 4], [5, 6]])

    def test_header(self, csv_file):
        ds = load_csv(csv_file("x,y,label\n1,2,a\n3,4,b\n"), has_header=True)
        assert ds.n == 2

    def test_label_column_first(self, csv_file):
        ds = load_csv(csv_file("b,1.5,2\na,3,4\n"), label_column=0)
        assert ds.labels.tolist() == [0, 1]
        np.testing.assert_array_equal(ds.points, [[1.5, 2], [3, 4]])

    def test_ragged_row_names_line(self, csv_file):
        with pytest.raises(RaggedRowError, match="line 3"):
            load_csv(csv_file("1,2,a\n3,4,b\n5,a\n"))

    def test_non_numeric(self, csv_file):
        with pytest.raises(NonNumericError, match="line 2"):
            load_csv(csv_file("1,2,a\n3,x,b\n"))

    def test_empty(self, csv_file):
        with pytest.raises(EmptyFileError):
            load_csv(csv_file(""))
        with pytest.raises(EmptyFileError):
            load_csv(csv_file("a,b,c\n"), has_header=True)

    def test_errors_are_distinct(self):
        assert len({EmptyFileError, RaggedRowError, NonNumericError}) == 3
        for e in (EmptyFileError, RaggedRowError, NonNumericError):
            assert issubclass(e, InputError)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = LabeledDataset(rng.standard_normal((6, 3)), [0, 1, 2, 0, 1, 2])
        save_csv(tmp_path / "out.csv", ds)
        back = load_csv(tmp_path / "out.csv")
        np.testing.assert_array_equal(back.points, ds.points)
        np.testing.assert_array_equal(back.labels, ds.labels)

    def test_dataset_immutable(self):
        ds = LabeledDataset([[1.0, 2.0]], [0])
        with pytest.raises(ValueError):
            ds.points[0, 0] = 5.0


class TestWishart:
    def test_symmetric_psd(self):
        S = wishart_covariance(6, 1)
        np.testing.assert_array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() >= -1e-9

    def test_moments(self):
        D, n = 5, 10_000
        draws = np.array([wishart_covariance(D, 7, i) for i in range(n)])
        diag = draws[:, np.arange(D), np.arange(D)].ravel()
        # each diagonal entry is chi^2_D: mean D, variance 2D
        assert abs(diag.mean() - D) < 3 * math.sqrt(2 * D / diag.size)
        off = draws[:, 0, 1]
        # sum of D products of independent normals: mean 0, variance D
        assert abs(off.mean()) < 3 * math.sqrt(D / n)

    def test_deterministic(self):
        np.testing.assert_array_equal(wishart_covariance(4, 3, 2), wishart_covariance(4, 3, 2))
        assert not np.array_equal(wishart_covariance(4, 3, 2), wishart_covariance(4, 3, 1))


class TestPsdFactor:
    def test_positive_definite(self):
        S = wishart_covariance(5, 2)
        C = psd_factor(S)
        assert np.linalg.norm(C @ C.T - S) <= 1e-8 * np.linalg.norm(S)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
    def test_rank_deficient(self, D, r, seed):
        B = np.random.default_rng(seed).standard_normal((D, min(r, D)))
        S = B @ B.T
        C = psd_factor(S)
        assert np.linalg.norm(C @ C.T - S) <= 1e-8 * max(np.linalg.norm(S), 1.0)

    def test_rejects_indefinite(self):
        with pytest.raises(InputError):
            psd_factor(np.diag([1.0, -1.0]))
        with pytest.raises(InputError):
            psd_factor(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestAugment:
    def _ds(self, n):
        return LabeledDataset(np.zeros((n, 2)), np.arange(n) % 2)

    def test_empty_sigma(self):
        ds = self._ds(5)
        assert augment_noise(ds, np.zeros((0, 0)), 0) is ds

    def test_identity_variance(self):
        n = 10_000
        out = augment_noise(self._ds(n), np.eye(3), 1)
        assert out.D == 5
        np.testing.assert_array_equal(out.points[:, :2], 0.0)
        var = out.points[:, 2:].var(axis=0)
        assert np.all(np.abs(var - 1) < 3 * math.sqrt(2 / n))

    def test_covariance(self):
        Sigma = wishart_covariance(5, 4)
        out = augment_noise(self._ds(10_000), Sigma, 5)
        emp = np.cov(out.points[:, 2:].T)
        assert np.linalg.norm(emp - Sigma) / np.linalg.norm(Sigma) < 0.1

    def test_labels_unchanged(self):
        ds = self._ds(8)
        np.testing.assert_array_equal(augment_noise(ds, np.eye(2), 0).labels, ds.labels)

    def test_rejects_non_psd(self):
        with pytest.raises(InputError):
            augment_noise(self._ds(4), -np.eye(2), 0)


class TestSplit:
    def _ds(self, n, classes=3):
        return LabeledDataset(np.arange(n, dtype=float)[:, None], np.arange(n) % classes)

    def test_iris_sizes(self):
        tr, va, te = split(self._ds(150), SplitSpec(seed=0))
        assert (tr.n, va.n, te.n) == (105, 15, 30)

    def test_covering_and_disjoint(self):
        parts = split(self._ds(97), SplitSpec(seed=3))
        got = np.sort(np.concatenate([p.points[:, 0] for p in parts]))
        np.testing.assert_array_equal(got, np.arange(97.0))

    def test_deterministic(self):
        a = split(self._ds(50), SplitSpec(seed=9), 1)
        b = split(self._ds(50), SplitSpec(seed=9), 1)
        for p, q in zip(a, b):
            np.testing.assert_array_equal(p.points, q.points)

    def test_too_small(self):
        with pytest.raises(InputError):
            split(self._ds(9), SplitSpec())

    def test_lost_class(self):
        ds = LabeledDataset(np.arange(20.0)[:, None], [1] + [0] * 19)
        with pytest.raises(SplitError):
            split(ds, SplitSpec(seed=0))

    def test_fractions_validated(self):
        with pytest.raises(InputError):
            SplitSpec(0.5, 0.1, 0.1)


class TestStandardize:
    def test_train_statistics(self):
        rng = np.random.default_rng(6)
        tr = LabeledDataset(rng.normal(3, 2, (50, 3)), np.zeros(50, int))
        te = LabeledDataset(rng.normal(3, 2, (10, 3)), np.zeros(10, int))
        s_tr, s_te = standardize(tr, te)
        np.testing.assert_allclose(s_tr.points.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(s_tr.points.std(axis=0), 1)
        mu, sd = tr.points.mean(axis=0), tr.points.std(axis=0)
        np.testing.assert_allclose(s_te.points, (te.points - mu) / sd)

    def test_constant_feature(self):
        tr = LabeledDataset([[1.0, 0.0], [1.0, 2.0]], [0, 1])
        (s,) = standardize(tr)
        np.testing.assert_array_equal(s.points[:, 0], 0.0)


def test_support_bound():
    ds = LabeledDataset([[3.0, 4.0], [1.0, 0.0]], [0, 1])
    assert ds.support_bound() == 5.0


def test_save_to_stream():
    buf = io.StringIO()
    save_csv(buf, LabeledDataset([[0.5, 1.0]], [2]))
    assert buf.getvalue() == "0.5,1.0,2\n"
