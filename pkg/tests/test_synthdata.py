import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import sparsecov as sc


def test_rng_stream_validation():
    with pytest.raises(ValueError):
        sc.RngStream(seed=-1)
    with pytest.raises(ValueError):
        sc.RngStream(seed=2**64)
    with pytest.raises(ValueError):
        sc.RngStream(seed=0, stream_id=-1)


def test_rng_stream_determinism_and_independence():
    a = sc.RngStream(seed=42).generator().standard_normal(5)
    b = sc.RngStream(seed=42).generator().standard_normal(5)
    c = sc.RngStream(seed=42, stream_id=1).generator().standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_design_validation():
    with pytest.raises(ValueError):
        sc.SimDesign(kind="banded", p=5)
    with pytest.raises(ValueError):
        sc.SimDesign(kind="random_sparse", p=5, sparsity_frac=0.0)
    with pytest.raises(ValueError):
        sc.SimDesign(kind="random_sparse", p=5, sparsity_frac=1.5)
    with pytest.raises(ValueError):
        sc.SimDesign(kind="independent", p=0)


def test_independent_design_is_identity():
    assert_allclose(sc.make_design(sc.SimDesign(kind="independent", p=4)), np.eye(4))


def test_moving_average_design_band():
    M = sc.make_design(sc.SimDesign(kind="moving_average", p=3))
    expected = np.array([[1.0, 0.4, 0.0], [0.4, 1.0, 0.4], [0.0, 0.4, 1.0]])
    assert_allclose(M, expected)
    lam_min = np.linalg.eigvalsh(M)[0]
    assert lam_min == pytest.approx(1.0 - 0.4 * math.sqrt(2.0), abs=1e-12)


def test_cliques_design_blocks():
    M = sc.make_design(sc.SimDesign(kind="cliques", p=10, block_size=5))
    assert_allclose(np.diag(M), np.ones(10))
    assert M[0, 4] == pytest.approx(0.4)
    assert M[0, 5] == 0.0
    assert sc.is_positive_definite(M)


def test_random_sparse_exact_count_and_range():
    design = sc.SimDesign(kind="random_sparse", p=20, sparsity_frac=0.02, seed=0)
    M = sc.make_design(design)
    iu = np.triu_indices(20, 1)
    nonzero = M[iu][M[iu] != 0]
    assert nonzero.size == 4  # ceil(0.02 * 190)
    assert np.all((np.abs(nonzero) >= 0.3) & (np.abs(nonzero) <= 0.6))
    assert_allclose(np.diag(M), np.ones(20))
    assert sc.is_positive_definite(M)


def test_make_design_deterministic_per_seed():
    d = sc.SimDesign(kind="random_sparse", p=12, sparsity_frac=0.05, seed=9)
    assert np.array_equal(sc.make_design(d), sc.make_design(d))
    other = sc.SimDesign(kind="random_sparse", p=12, sparsity_frac=0.05, seed=10)
    assert not np.array_equal(sc.make_design(d), sc.make_design(other))


def test_sample_mvn_shape_and_determinism():
    Sigma = sc.make_design(sc.SimDesign(kind="moving_average", p=4))
    X1 = sc.sample_mvn(Sigma, 30, sc.RngStream(seed=5, stream_id=1))
    X2 = sc.sample_mvn(Sigma, 30, sc.RngStream(seed=5, stream_id=1))
    assert X1.shape == (30, 4)
    assert np.array_equal(X1, X2)


def test_sample_mvn_covariance_consistency():
    Sigma = np.array([[2.0, 0.8], [0.8, 1.0]])
    X = sc.sample_mvn(Sigma, 40000, sc.RngStream(seed=6, stream_id=1))
    S = sc.sample_covariance(X)
    assert np.max(np.abs(S - Sigma)) < 0.06


def test_run_replicates_smoke():
    design = sc.SimDesign(kind="random_sparse", p=8, sparsity_frac=0.08, seed=3)
    table = sc.run_replicates(
        design, n=60, reps=2, methods=("proxdist", "soft"), grid_size=6
    )
    assert table.methods == ("proxdist", "soft")
    assert len(table.reports["proxdist"]) == 2
    assert len(table.best_params["soft"]) == 2
    assert np.isfinite(table.mean("proxdist", "rmse"))
    assert table.stderr("proxdist", "rmse") >= 0.0
    fp = table.mean("proxdist", "fp_rate")
    assert 0.0 <= fp <= 1.0


def test_replicate_table_serialization(tmp_path):
    design = sc.SimDesign(kind="moving_average", p=6, seed=1)
    table = sc.run_replicates(
        design, n=50, reps=2, methods=("soft",), grid_size=5
    )
    rows = table.summary_rows()
    assert {r["method"] for r in rows} == {"soft"}
    assert {r["metric"] for r in rows} == set(table.metrics)
    out = tmp_path / "table.csv"
    table.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + len(rows)
    header = lines[0].split(",")
    assert "mean" in header and "stderr" in header


def test_replicate_table_single_rep_stderr_zero():
    design = sc.SimDesign(kind="moving_average", p=5, seed=2)
    table = sc.run_replicates(design, n=40, reps=1, methods=("hard",), grid_size=4)
    assert table.stderr("hard", "rmse") == 0.0
