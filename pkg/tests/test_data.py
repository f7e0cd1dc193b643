import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transglasso import (
    ContractError,
    CovMatrix,
    DimensionError,
    NumericError,
    ParseError,
    StudyData,
    build_problem,
    load_csv,
    sample_covariance,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_identity_content(self, tmp_path):
        path = _write(tmp_path, "a.csv", "1,0\n0,1\n")
        data = load_csv(path)
        assert data.samples.shape == (2, 2)
        np.testing.assert_array_equal(data.samples, np.eye(2))

    def test_header_skip(self, tmp_path):
        path = _write(tmp_path, "b.csv", "a,b\n1,2\n3,4\n")
        data = load_csv(path, has_header=True)
        np.testing.assert_array_equal(data.samples, [[1, 2], [3, 4]])

    def test_ragged_row_names_row(self, tmp_path):
        path = _write(tmp_path, "c.csv", "1,2\n3\n")
        with pytest.raises(ParseError, match="row 2"):
            load_csv(path)

    def test_non_numeric_names_row_and_column(self, tmp_path):
        path = _write(tmp_path, "d.csv", "1,2\n3,oops\n")
        with pytest.raises(ParseError, match="row 2, column 2"):
            load_csv(path)

    def test_non_finite_rejected(self, tmp_path):
        path = _write(tmp_path, "e.csv", "1,2\n3,inf\n")
        with pytest.raises(ParseError, match="non-finite"):
            load_csv(path)

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError, match="nope.csv"):
            load_csv(tmp_path / "nope.csv")

    def test_single_row_is_dimension_error(self, tmp_path):
        path = _write(tmp_path, "f.csv", "1,2\n")
        with pytest.raises(DimensionError):
            load_csv(path)

    def test_header_counts_in_row_numbers(self, tmp_path):
        path = _write(tmp_path, "g.csv", "a,b\n1,2\n3\n")
        with pytest.raises(ParseError, match="row 3"):
            load_csv(path, has_header=True)


class TestStudyData:
    def test_single_observation_rejected(self):
        with pytest.raises(DimensionError):
            StudyData(np.array([[2.0]]))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            StudyData(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_immutable(self):
        data = StudyData(np.eye(2))
        with pytest.raises(ValueError):
            data.samples[0, 0] = 9.0


class TestSampleCovariance:
    def test_identity_samples(self):
        data = StudyData(np.eye(2))
        cov = sample_covariance(data, center=False)
        np.testing.assert_allclose(cov.matrix, 0.5 * np.eye(2))
        assert cov.n == 2

    def test_centering_hand_value(self):
        # mean 1, deviations (-1, 1): ((-1)^2 + 1^2)/2 = 1
        cov = sample_covariance(StudyData(np.array([[0.0], [2.0]])), center=True)
        np.testing.assert_allclose(cov.matrix, [[1.0]])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 6),
           st.booleans())
    def test_symmetric_psd_and_bruteforce(self, seed, n, d, center):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, d)) * 3.0
        cov = sample_covariance(StudyData(X), center=center).matrix
        np.testing.assert_array_equal(cov, cov.T)
        assert np.linalg.eigvalsh(cov)[0] >= -1e-10 * max(1.0, np.linalg.eigvalsh(cov)[-1])
        Xc = X - X.mean(axis=0) if center else X
        brute = np.empty((d, d))
        for j in range(d):
            for l in range(d):
                brute[j, l] = sum(Xc[i, j] * Xc[i, l] for i in range(n)) / n
        np.testing.assert_allclose(cov, brute, atol=1e-12)


class TestCovMatrix:
    def test_asymmetric_rejected(self):
        with pytest.raises(ContractError):
            CovMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), 10)

    def test_indefinite_warns(self):
        m = np.array([[1.0, 0.0], [0.0, -0.5]])
        with pytest.warns(RuntimeWarning, match="negative eigenvalue"):
            CovMatrix(m, 10)


class TestBuildProblem:
    def test_weight_ratio(self):
        rng = np.random.default_rng(0)
        target = StudyData(rng.standard_normal((100, 3)))
        source = StudyData(rng.standard_normal((300, 3)), study_id=1)
        problem = build_problem(target, [source])
        np.testing.assert_allclose(problem.weights, [0.25, 0.75])
        assert problem.total_n == 400

    def test_target_only(self):
        target = StudyData(np.random.default_rng(1).standard_normal((17, 2)))
        problem = build_problem(target)
        np.testing.assert_array_equal(problem.weights, [1.0])
        assert problem.total_n == 17
        assert problem.K == 0

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(2)
        target = StudyData(rng.standard_normal((10, 3)))
        source = StudyData(rng.standard_normal((10, 4)), study_id=1)
        with pytest.raises(DimensionError):
            build_problem(target, [source])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(2, 500), min_size=1, max_size=6))
    def test_weights_sum_to_one(self, ns):
        rng = np.random.default_rng(7)
        studies = [StudyData(rng.standard_normal((n, 2)), study_id=i)
                   for i, n in enumerate(ns)]
        problem = build_problem(studies[0], studies[1:])
        assert abs(problem.weights.sum() - 1.0) <= 1e-12
