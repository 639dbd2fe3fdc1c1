import math

import numpy as np
import pytest
from oracles import identity_green, identity_resolvent_closed_form, midpoint_resolvent_identity

from canonsys import hamiltonian as ham
from canonsys.errors import IndefiniteMatrix, InResolventSetError
from canonsys.extension import SelfAdjointBVP, eigenvalues_in
from canonsys.hamiltonian import QuadratureRule
from canonsys.resolvent import (
    GreenKernel,
    apply_resolvent,
    hs_eigen_compare,
    hs_matrix,
    psd_sqrt,
    resolvent_residual,
    w_alpha,
)
from canonsys.transfer import J, Trajectory


def const(h):
    h = np.asarray(h, dtype=complex)
    return lambda x: np.broadcast_to(h, np.shape(x) + (2,))


@pytest.fixture
def unit_bvp():
    return SelfAdjointBVP(ham.builtin("identity"), 1.0, math.pi, math.pi)


def test_kernel_matches_variation_of_constants(unit_bvp):
    z = 0.3
    g = GreenKernel(unit_bvp, z)
    for x, t in [(0.2, 0.7), (0.7, 0.2), (0.5, 0.5), (1.0, 0.0)]:
        np.testing.assert_allclose(g(x, t), identity_green(x, t, z), atol=1e-13)


def test_jump_is_J(unit_bvp):
    g = GreenKernel(unit_bvp, 0.4 + 0.5j)
    for x in [0.0, 0.3, 1.0]:
        np.testing.assert_allclose(g.jump(x), J, atol=1e-13)


def test_kernel_symmetry_real_z():
    # G(x, t, z)^* = G(t, x, conj z)
    bvp = SelfAdjointBVP(ham.builtin("random-psd", seed=2, count=4), None, 1.0, 2.0)
    g, gb = GreenKernel(bvp, 0.7 + 0.3j), GreenKernel(bvp, 0.7 - 0.3j)
    for x, t in [(0.1, 0.6), (0.8, 0.2)]:
        np.testing.assert_allclose(g(x, t).conj().T, gb(t, x), atol=1e-12)


@pytest.mark.parametrize("h", [(1.0, 0.0), (0.0, 1.0), (0.7 - 0.2j, -1.3)])
def test_apply_resolvent_identity(unit_bvp, h):
    z = 0.3
    y = apply_resolvent(GreenKernel(unit_bvp, z), const(h))
    xs = np.linspace(0, 1, 9)
    exact = np.array([identity_resolvent_closed_form(h, z, x) for x in xs])
    np.testing.assert_allclose(y(xs), exact, atol=1e-12)
    np.testing.assert_allclose(y(xs), midpoint_resolvent_identity(h, z, xs), atol=1e-6)


def test_residual_random_field_nonconstant_h():
    bvp = SelfAdjointBVP(ham.builtin("random-psd", seed=5, count=5, length=2.0), None, 0.8, 2.2)
    kernel = GreenKernel(bvp, 0.5 + 0.4j)

    def h(x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.cos(3 * x), x**2 + 0j], axis=-1)

    y = apply_resolvent(kernel, h, QuadratureRule(12, 0.25))
    assert resolvent_residual(kernel, h, y) < 1e-5


def test_swapped_kernel_fails(unit_bvp):
    k = GreenKernel(unit_bvp, 0.3, swapped=True)
    assert resolvent_residual(k, const((1, 0)), apply_resolvent(k, const((1, 0)))) > 0.1
    np.testing.assert_allclose(k.jump(0.5), -J, atol=1e-13)


def test_eigenvalue_is_not_in_resolvent_set(unit_bvp):
    with pytest.raises(InResolventSetError):
        GreenKernel(unit_bvp, math.pi)


def test_w_alpha_satisfies_left_condition(unit_bvp):
    g = GreenKernel(unit_bvp, 1j)
    w0 = w_alpha(unit_bvp.field, 1j, unit_bvp.alpha, g.m, 0.0)
    assert abs(unit_bvp.alpha.residual(w0)) < 1e-15


def test_psd_sqrt():
    rng = np.random.default_rng(0)
    for _ in range(20):
        b = rng.normal(size=(2, 2))
        m = b @ b.T
        r = psd_sqrt(m)
        np.testing.assert_allclose(r @ r, m, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(r) >= -1e-14)
    np.testing.assert_allclose(psd_sqrt(np.diag([1.0, 0.0])), np.diag([1.0, 0.0]))
    assert not psd_sqrt(np.zeros((2, 2))).any()
    with pytest.raises(IndefiniteMatrix):
        psd_sqrt(np.diag([1.0, -1.0]))


def test_hs_matrix_hermitian_and_sized(unit_bvp):
    hs = hs_matrix(unit_bvp, 0.3, QuadratureRule(8, 1 / 8))
    assert len(hs.nodes) == 64 and hs.matrix.shape == (128, 128)
    assert hs.hermitian_deviation < 1e-12
    with pytest.raises(ValueError):
        hs_matrix(unit_bvp, 0.3 + 1j)


def test_hs_nystrom_refinement_improves(unit_bvp):
    z = 0.3
    target = 1 / (0.0 - z)
    errs = []
    for panel in [1 / 2, 1 / 4, 1 / 8]:
        mu = -hs_matrix(unit_bvp, z, QuadratureRule(8, panel)).eigenvalues
        errs.append(np.abs(mu - target).min())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def test_hs_compare_random_field():
    bvp = SelfAdjointBVP(ham.builtin("random-psd", seed=6, count=4), None, 1.0, 2.0)
    cmp_ = hs_eigen_compare(bvp, 0.1, 4, QuadratureRule(8, 1 / 16))
    assert cmp_.counts_match
    assert cmp_.max_gap < 1e-3
    assert len(cmp_) == 4
    shoot = eigenvalues_in(bvp, (-30, 30)).values
    for mu, e, _ in cmp_:
        assert min(abs(e - s) for s in shoot) < 1e-9


def test_hs_compare_rejects_eigenvalue(unit_bvp):
    with pytest.raises(InResolventSetError):
        hs_eigen_compare(unit_bvp, 0.0, 3)


@pytest.mark.parametrize("seed", [0, 1])
def test_resolvent_on_eigenfunction(seed):
    from canonsys.extension import eigenfunction

    bvp = SelfAdjointBVP(ham.builtin("random-psd", seed=seed, count=5, length=2.0), None, 1.1, 2.4)
    z = 0.37
    kernel = GreenKernel(bvp, z)
    xs = np.linspace(0, bvp.N, 13)
    for e in eigenvalues_in(bvp, (-6, 6)).values[:3]:
        ef = eigenfunction(bvp, e)
        y = apply_resolvent(kernel, ef, QuadratureRule(12, 0.25))
        # the Green integral inverts z - T
        np.testing.assert_allclose(y(xs), ef(xs) / (z - e), atol=1e-5 * np.abs(ef(xs)).max() / abs(z - e))
