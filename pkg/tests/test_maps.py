import numpy as np
import pytest

from qgact.algebra import FiniteCStar, Functional, op_norm, tensor_algebra, tensor_elements
from qgact.maps import (
    CertificationError,
    LinearMap,
    certify_cp,
    certify_order_zero,
    certify_star_hom,
    choi_matrices,
    left_multiplication,
    right_multiplication,
    slice_left,
    slice_right,
    unitization,
)

M2 = FiniteCStar((2,), "M2")
CM = FiniteCStar((1, 2), "C+M2")


def transpose_map(A=M2):
    d = A.block_dims[0]
    T = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            T[j * d + i, i * d + j] = 1.0
    return LinearMap(A, A, T)


def trace_map():
    M = np.zeros((4, 4), dtype=complex)
    for p in range(4):
        M[:, p] = np.trace(M2.basis_element(p).blocks()[0]) * M2.unit().coeffs
    return LinearMap(M2, M2, M)


def test_identity_is_star_hom():
    rep = certify_star_hom(LinearMap.identity(CM))
    assert rep.passed
    assert rep.extras["injective"] and rep.extras["unital"]
    assert rep.residuals["multiplicativity"] == 0.0


def test_transpose_rejected_as_hom():
    """Anti-homomorphism: star residual 0, multiplicativity residual > 0.5."""
    rep = certify_star_hom(transpose_map())
    assert rep.residuals["star"] < 1e-14
    assert rep.residuals["multiplicativity"] > 0.5


def test_transpose_choi_eigenvalue():
    rep = certify_cp(transpose_map())
    assert rep.extras["min_choi_eigenvalue"] == pytest.approx(-1.0, abs=1e-12)
    assert not rep.passed


def test_star_homs_are_cp_and_order_zero():
    for phi in [LinearMap.identity(CM), LinearMap.identity(M2)]:
        assert certify_cp(phi).passed
        assert certify_order_zero(phi).passed


def test_state_map_is_cp():
    h = Functional(M2, M2.unit().coeffs / 2)
    M = np.outer(M2.unit().coeffs, h.coeffs)
    assert certify_cp(LinearMap(M2, M2, M)).passed


def test_scalar_multiple_of_hom_is_order_zero():
    phi = LinearMap(M2, M2, 0.4 * np.eye(4))
    assert certify_order_zero(phi).passed


def test_trace_map_violates_order_zero():
    """On matrix units e11, e12, e21 the identity fails with residual >= 1."""
    rep = certify_order_zero(trace_map())
    assert rep.residuals["order_zero_identity"] >= 1.0
    assert rep.extras["worst_triple_op_norm"] >= 1.0 - 1e-12


def test_order_zero_requires_cp():
    with pytest.raises(CertificationError):
        certify_order_zero(transpose_map())


def test_choi_blocks_shape():
    chs = choi_matrices(LinearMap.identity(CM))
    assert [c.shape[0] for c in chs] == [1 * 3, 2 * 3]


def test_slice_maps():
    rng = np.random.default_rng(0)
    om = Functional(M2, rng.normal(size=4))
    x = M2.element(rng.normal(size=4))
    y = CM.element(rng.normal(size=5))
    sl = slice_left(om, M2, CM)
    assert op_norm(sl(tensor_elements(x, y)) - om(x) * y) < 1e-12
    om2 = Functional(CM, rng.normal(size=5))
    sr = slice_right(om2, M2, CM)
    assert op_norm(sr(tensor_elements(x, y)) - om2(y) * x) < 1e-12


def test_multiplication_operators():
    rng = np.random.default_rng(1)
    a = CM.element(rng.normal(size=5) + 1j * rng.normal(size=5))
    x = CM.element(rng.normal(size=5))
    assert op_norm(left_multiplication(a)(x) - a * x) < 1e-12
    assert op_norm(right_multiplication(a)(x) - x * a) < 1e-12


def test_tensor_map_consistency():
    rng = np.random.default_rng(2)
    L1 = LinearMap(M2, M2, rng.normal(size=(4, 4)))
    L2 = LinearMap(CM, CM, rng.normal(size=(5, 5)))
    LT = L1.tensor(L2)
    x, y = M2.element(rng.normal(size=4)), CM.element(rng.normal(size=5))
    assert op_norm(LT(tensor_elements(x, y)) - tensor_elements(L1(x), L2(y))) < 1e-12


def test_unitization_structure():
    ext, emb = unitization(M2)
    assert ext.block_dims == (2, 1)
    rep = certify_star_hom(emb)
    assert rep.residuals["multiplicativity"] < 1e-14
    assert not rep.extras["unital"]
