import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canonsys.linalg import _round_robin, jacobi_eigh, offdiag_norm


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_round_robin_covers_all_pairs_once(n):
    seen = []
    for p, q in _round_robin(n):
        # pairs in one round are disjoint
        assert len(set(p) | set(q)) == 2 * len(p)
        seen += list(zip(p.tolist(), q.tolist()))
    assert sorted(seen) == [(i, j) for i in range(n) for j in range(i + 1, n)]


@given(st.integers(1, 24), st.integers(0, 2**31))
def test_matches_eigvalsh(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    np.testing.assert_allclose(jacobi_eigh(a), np.linalg.eigvalsh(a), atol=1e-11 * max(1, np.abs(a).max()) * n)


def test_vectors():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(12, 12))
    a = a + a.T
    w, v = jacobi_eigh(a, vectors=True)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(12), atol=1e-13)


def test_repeated_and_diagonal():
    np.testing.assert_array_equal(jacobi_eigh(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    np.testing.assert_allclose(jacobi_eigh(np.ones((4, 4))), [0, 0, 0, 4], atol=1e-14)
    assert offdiag_norm(np.eye(3)) == 0.0


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        jacobi_eigh(np.ones((2, 3)))
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))
