import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canonsys import relations as rel
from canonsys.errors import NotSelfAdjoint
from canonsys.relations import LinearRelation

E = np.eye(2)


def hermitian(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_graph_of_hermitian_matrix():
    a = hermitian(4, 0)
    g = LinearRelation.graph(a)
    assert g.dim == 4
    assert rel.is_selfadjoint(g)
    np.testing.assert_allclose(rel.spectrum_selfadjoint(g), np.linalg.eigvalsh(a), atol=1e-10)
    np.testing.assert_allclose(rel.spectral_kernel(g), np.linalg.eigvalsh(a), atol=1e-10)


def test_adjoint_of_graph_is_graph_of_adjoint():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert rel.adjoint(LinearRelation.graph(a)).equals(LinearRelation.graph(a.conj().T))
    assert not rel.is_symmetric(LinearRelation.graph(a))


@given(st.integers(1, 5), st.integers(0, 10_000))
def test_adjoint_is_involutive_and_dimension(n, seed):
    s = rel.random_symmetric(n, seed)
    star = rel.adjoint(s)
    assert star.dim == 2 * n - s.dim
    assert rel.adjoint(star).equals(s)
    assert rel.is_symmetric(s)


def test_span_e1_e2():
    s = LinearRelation.from_pairs([E[0]], [E[1]])
    assert s.dim == 1
    assert rel.adjoint(s).dim == 3
    assert rel.is_symmetric(s) and not rel.is_selfadjoint(s)
    assert rel.defect_index(s, 1j) == rel.defect_index(s, -1j) == 1


def test_purely_multivalued():
    mv = LinearRelation.multivalued(1)
    assert rel.is_selfadjoint(mv)
    assert rel.spectrum_selfadjoint(mv) == []
    assert rel.spectral_kernel(mv) == []
    assert rel.in_resolvent_set(mv, 0.0)
    np.testing.assert_allclose(mv.multivalued_part(), [[1.0]], atol=1e-15)
    assert mv.domain().shape == (1, 0)


def test_multivalued_part_and_operator_part():
    t = rel.random_selfadjoint(5, 3, mul_dim=2)
    assert t.multivalued_part().shape[1] == 2
    assert len(rel.spectral_kernel(t)) == 3
    assert len(rel.spectrum_selfadjoint(t)) == 3


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_spectrum_equals_spectral_kernel(n, seed):
    t = rel.random_selfadjoint(n, seed)
    a, b = rel.spectrum_selfadjoint(t), rel.spectral_kernel(t)
    assert len(a) == len(b)
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_resolvent_operator():
    t = rel.random_selfadjoint(4, 7, mul_dim=1)
    spectrum = rel.spectral_kernel(t)
    z = 0.3 + 0.8j
    r = rel.resolvent_operator(t, z)
    # (r h, z r h - h) lies in t
    h = np.random.default_rng(0).normal(size=(4, 3))
    pairs = LinearRelation(4, np.vstack([r @ h, z * r @ h - h]))
    assert t.contains(pairs)
    # eigenvalues of r are 1/(z - lam), padded with zeros for the multivalued part
    lams = sorted((z - 1 / v for v in np.linalg.eigvals(r) if abs(v) > 1e-10), key=lambda w: w.real)
    np.testing.assert_allclose(lams, spectrum, atol=1e-9)
    with pytest.raises(ValueError):
        rel.resolvent_operator(t, spectrum[0])


def test_regularity_domain():
    g = LinearRelation.graph(np.diag([1.0, 2.0]))
    assert not rel.in_regularity_domain(g, 1.0)
    assert rel.in_regularity_domain(g, 1.5)
    assert rel.range_spans(g, 1.5) and not rel.range_spans(g, 2.0)


@given(st.integers(0, 10_000))
def test_defect_constant_on_half_planes(seed):
    rng = np.random.default_rng(seed)
    s = rel.random_symmetric(int(rng.integers(1, 7)), seed)
    up = {rel.defect_index(s, complex(rng.normal(), abs(rng.normal()) + 0.05)) for _ in range(5)}
    down = {rel.defect_index(s, complex(rng.normal(), -abs(rng.normal()) - 0.05)) for _ in range(5)}
    assert len(up) == 1 and len(down) == 1


def test_extension_dimension_rule():
    s = LinearRelation.from_pairs([E[0]], [E[1]])
    ext = rel.extension_dimension_check(s, trials=50, seed=0)
    assert ext.found and not ext.search_exhausted
    assert set(ext.selfadjoint_dims) == {2}
    assert ext.dimension_rule_holds


@pytest.mark.parametrize("seed", range(5))
def test_extension_dimension_random(seed):
    s = rel.random_symmetric(4, seed, dim=2)
    ext = rel.extension_dimension_check(s, trials=20, seed=seed)
    d = ext.defect[0]
    assert ext.defect[0] == ext.defect[1]
    assert set(ext.selfadjoint_dims) <= {s.dim + d}
    assert ext.dimension_rule_holds


def test_extension_requires_symmetric():
    with pytest.raises(ValueError):
        rel.extension_dimension_check(LinearRelation.graph([[0, 1], [0, 0]]))


def test_selfadjoint_required():
    s = LinearRelation.from_pairs([E[0]], [E[1]])
    with pytest.raises(NotSelfAdjoint):
        rel.spectrum_selfadjoint(s)
    with pytest.raises(NotSelfAdjoint):
        rel.spectral_kernel(s)


def test_report():
    r = rel.report(LinearRelation.graph(np.diag([1.0, -1.0])))
    assert r.selfadjoint and r.symmetric
    assert r.defect == {1j: 0, -1j: 0}
    np.testing.assert_allclose(r.spectrum, [-1, 1])


def test_bad_shape():
    with pytest.raises(ValueError):
        LinearRelation(2, np.ones((3, 1)))
