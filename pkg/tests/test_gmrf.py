import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inla_lite import gmrf
from inla_lite.errors import InlaError, NotPositiveDefinite


def random_spd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


def test_build_examples():
    m = gmrf.build(2, [(0, 0, 1), (0, 1, -1), (1, 1, 1)])
    assert np.array_equal(m.to_dense(), [[1, -1], [-1, 1]])
    assert np.array_equal(gmrf.build(1, [(0, 0, 5)]).to_dense(), [[5]])
    assert gmrf.build(3, [(0, 0, 1), (0, 0, 1)]).to_dense()[0, 0] == 2


def test_build_mirrors_lower_keys_and_stores_upper_only():
    m = gmrf.build(3, [(2, 0, 1.5), (0, 2, 0.5)])
    assert m.nnz == 1
    assert m.rows[0] == 0 and m.cols[0] == 2 and m.values[0] == 2.0
    assert np.array_equal(m.to_dense(), m.to_dense().T)


@pytest.mark.parametrize("entry", [(3, 0, 1.0), (-1, 0, 1.0), (0, 5, 2.0)])
def test_build_rejects_out_of_range(entry):
    with pytest.raises(InlaError):
        gmrf.build(3, [entry])


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.floats(-10, 10)), max_size=30))
@settings(max_examples=60, deadline=None)
def test_build_sums_duplicates_symmetrically(entries):
    m = gmrf.build(6, entries)
    dense = np.zeros((6, 6))
    for r, c, v in entries:
        dense[r, c] += v
        if r != c:
            dense[c, r] += v
    # the implied mirror: value at (i,j) is the sum over both orientations
    assert np.allclose(m.to_dense(), np.triu(dense) + np.triu(dense, 1).T)
    assert len(set(zip(m.rows, m.cols))) == m.nnz
    assert np.all(m.rows <= m.cols)


def test_cholesky_examples():
    f = gmrf.cholesky(gmrf.build(1, [(0, 0, 4)]))
    assert f.lower[0, 0] == 2 and f.log_det == pytest.approx(np.log(4))
    with pytest.raises(NotPositiveDefinite):
        gmrf.cholesky(gmrf.build(2, [(0, 0, 1), (0, 1, -1), (1, 1, 1)]))
    f = gmrf.cholesky(gmrf.from_dense([[2, -1], [-1, 2]]))
    assert f.log_det == pytest.approx(np.log(3), abs=1e-12)


def test_not_positive_definite_names_pivot():
    m = np.diag([1.0, 2.0, -1.0, 4.0])
    with pytest.raises(NotPositiveDefinite) as exc:
        gmrf.cholesky(m)
    assert exc.value.pivot == 2


def test_jitter_rescues_intrinsic_matrix():
    f = gmrf.cholesky(gmrf.from_dense([[1, -1], [-1, 1]]), jitter=0.5)
    assert np.allclose(f.lower @ f.lower.T, [[1.5, -1], [-1, 1.5]])


def test_reconstruction_and_logdet(rng):
    for n in (1, 5, 20):
        a = random_spd(rng, n)
        f = gmrf.cholesky(gmrf.from_dense(a))
        assert np.linalg.norm(f.lower @ f.lower.T - a) / np.linalg.norm(a) < 1e-8
        assert f.log_det == pytest.approx(2 * np.sum(np.log(np.diag(f.lower))), abs=1e-12)
        assert f.log_det == pytest.approx(np.linalg.slogdet(a)[1], abs=1e-8)


def test_solve_examples(rng):
    f = gmrf.cholesky(gmrf.from_dense([[2, -1], [-1, 2]]))
    assert np.allclose(gmrf.solve(f, [1, 1]), [1, 1], atol=1e-14)
    b = rng.standard_normal(4)
    assert np.allclose(gmrf.solve(gmrf.cholesky(np.eye(4)), b), b)
    a = random_spd(rng, 6)
    b = rng.standard_normal(6)
    x = gmrf.solve(gmrf.cholesky(a), b)
    assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-8
    assert np.allclose(x, np.linalg.solve(a, b), atol=1e-8)
    with pytest.raises(InlaError):
        gmrf.solve(gmrf.cholesky(a), np.ones(5))


def test_solve_round_trip(rng):
    for n in (3, 12, 40):
        a = random_spd(rng, n)
        v = rng.standard_normal(n)
        assert np.allclose(gmrf.solve(gmrf.cholesky(a), a @ v), v, atol=1e-8)


def test_marginal_variances(rng):
    assert np.allclose(gmrf.marginal_variances(gmrf.cholesky(np.diag([2.0, 4.0]))), [0.5, 0.25])
    mv = gmrf.marginal_variances(gmrf.cholesky(np.array([[2.0, -1], [-1, 2]])))
    assert np.allclose(mv, [2 / 3, 2 / 3], atol=1e-14)
    for n in (8, 50):
        a = random_spd(rng, n)
        assert np.allclose(gmrf.marginal_variances(gmrf.cholesky(a)), np.diag(np.linalg.inv(a)), atol=1e-8)


def test_conditional_stats_examples(rng):
    st = gmrf.conditional_stats(gmrf.cholesky(np.eye(4)), 1)
    assert st.a[1] == 1
    assert np.allclose(np.delete(st.a, 1), 0) and np.allclose(np.delete(st.conditional_variances, 1), 1)
    st = gmrf.conditional_stats(gmrf.cholesky(np.array([[2.0, -1], [-1, 2]])), 0)
    assert st.a[1] == pytest.approx(0.5, abs=1e-14)
    assert st.conditional_variances[1] == pytest.approx(0.5, abs=1e-14)
    a = random_spd(rng, 6)
    cov = np.linalg.inv(a)
    sd = np.sqrt(np.diag(cov))
    st = gmrf.conditional_stats(gmrf.cholesky(a), 3)
    corr = cov[3] / (sd * sd[3])
    assert np.allclose(st.a, corr, atol=1e-8)
    assert np.allclose(st.conditional_variances, sd ** 2 * (1 - corr ** 2), atol=1e-8)
    with pytest.raises(InlaError):
        gmrf.conditional_stats(gmrf.cholesky(a), 6)


def lemma1_gap(sigma, i, xi):
    f = gmrf.cholesky(np.linalg.inv(sigma))
    u = gmrf.conditional_stats(f, i).conditional_mean(xi)
    lhs = -0.5 * u @ np.linalg.solve(sigma, u)
    rhs = -0.5 * xi ** 2 / sigma[i, i]
    return lhs, rhs


def test_lemma1_worked_case():
    lhs, rhs = lemma1_gap(np.array([[1.0, 0.5], [0.5, 1.0]]), 0, 1.0)
    assert lhs == pytest.approx(-0.5, abs=1e-12) and rhs == -0.5


def test_lemma1_random(rng):
    for _ in range(100):
        n = int(rng.integers(1, 7))
        sigma = np.linalg.inv(random_spd(rng, n))
        i = int(rng.integers(n))
        lhs, rhs = lemma1_gap(sigma, i, float(rng.normal(0, 3)))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_block_diag_and_add():
    a = gmrf.from_dense([[1.0, 2.0], [2.0, 5.0]])
    b = gmrf.build(1, [(0, 0, 3)])
    m = gmrf.block_diag([a, b])
    assert np.array_equal(m.to_dense(), [[1, 2, 0], [2, 5, 0], [0, 0, 3]])
    assert np.array_equal((a + a).to_dense(), 2 * a.to_dense())
    assert np.allclose(m.matvec([1, 1, 1]), [3, 7, 3])
