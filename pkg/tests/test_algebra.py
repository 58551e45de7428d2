import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgact.algebra import (
    AlgebraElement,
    AlgebraError,
    FiniteCStar,
    embed_legs,
    flip_element,
    leg_embed,
    op_norm,
    rank_of_span,
    tensor_algebra,
    tensor_elements,
)

M2 = FiniteCStar((2,), "M2")
C2 = FiniteCStar((1, 1), "C2")
CM = FiniteCStar((1, 2), "C+M2")


def rand_el(alg, rng):
    return alg.element(
        rng.normal(size=alg.total_dim) + 1j * rng.normal(size=alg.total_dim)
    )


def test_block_dims_validation():
    with pytest.raises(AlgebraError):
        FiniteCStar(())
    with pytest.raises(AlgebraError):
        FiniteCStar((0,))


def test_total_dim():
    assert CM.total_dim == 5
    assert CM.rep_dim == 3


def test_tensor_blocks():
    assert tensor_algebra(M2, C2).block_dims == (2, 2)
    assert tensor_algebra(FiniteCStar((1,)), CM).block_dims == CM.block_dims
    assert tensor_algebra(CM, CM).block_dims == (1, 2, 2, 4)


def test_op_norm_values():
    x = M2.from_blocks([np.diag([3.0, -5.0])])
    assert op_norm(x) == pytest.approx(5.0)
    u = M2.from_blocks([np.array([[0, 1], [1, 0]], dtype=complex)])
    assert op_norm(u) == pytest.approx(1.0)
    assert op_norm(CM.unit()) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_cstar_identity_and_submultiplicativity(seed):
    rng = np.random.default_rng(seed)
    x = rand_el(CM, rng)
    n = op_norm(x)
    if n > 0:
        x = (1.0 / n) * x
    assert op_norm(x.star() * x) == pytest.approx(op_norm(x) ** 2, rel=1e-10)
    y = rand_el(CM, rng)
    assert op_norm(x * y) <= op_norm(x) * op_norm(y) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_arithmetic_associativity(seed):
    rng = np.random.default_rng(seed)
    x, y, z = (rand_el(CM, rng) for _ in range(3))
    for e in (x, y, z):
        n = op_norm(e)
        e.coeffs /= max(n, 1e-12)
    assert op_norm((x * y) * z - x * (y * z)) < 1e-13
    assert op_norm(x * (y + z) - (x * y + x * z)) < 1e-13
    assert op_norm((x * y).star() - y.star() * x.star()) < 1e-13


def test_tensor_elements_multiplicative():
    rng = np.random.default_rng(3)
    x1, x2 = rand_el(M2, rng), rand_el(M2, rng)
    y1, y2 = rand_el(CM, rng), rand_el(CM, rng)
    lhs = tensor_elements(x1, y1) * tensor_elements(x2, y2)
    rhs = tensor_elements(x1 * x2, y1 * y2)
    assert op_norm(lhs - rhs) < 1e-12


def test_leg_embed_flip_identities():
    """T13 = S23 T12 S23 = S12 T23 S12 exactly."""
    rng = np.random.default_rng(5)
    S = flip_element(M2)
    T = tensor_elements(rand_el(M2, rng), rand_el(M2, rng))
    T13 = leg_embed(T, (1, 3), 3, M2)
    T12 = leg_embed(T, (1, 2), 3, M2)
    T23 = leg_embed(T, (2, 3), 3, M2)
    S23 = leg_embed(S, (2, 3), 3, M2)
    S12 = leg_embed(S, (1, 2), 3, M2)
    assert op_norm(T13 - S23 * T12 * S23) < 1e-12
    assert op_norm(T13 - S12 * T23 * S12) < 1e-12


def test_leg_embed_identity_element():
    AA = tensor_algebra(M2, M2)
    one = AA.unit()
    for legs in [(1, 2), (1, 3), (2, 3)]:
        e = leg_embed(one, legs, 3, M2)
        assert op_norm(e - tensor_algebra(tensor_algebra(M2, M2), M2).unit()) < 1e-13


def test_leg_embed_range_errors():
    T = tensor_algebra(M2, M2).unit()
    with pytest.raises(AlgebraError):
        leg_embed(T, (1, 4), 3, M2)
    with pytest.raises(AlgebraError):
        leg_embed(T, (2, 2), 3, M2)


def test_embed_mixed_carriers():
    rng = np.random.default_rng(7)
    x = tensor_elements(rand_el(M2, rng), rand_el(C2, rng))
    full = embed_legs(x, (1, 3), [M2, CM, C2])
    # disjointly supported legs commute
    y = embed_legs(rand_el(CM, rng), (2,), [M2, CM, C2])
    assert op_norm(full * y - y * full) < 1e-10
    # and the embedding respects products leg-wise
    x2 = tensor_elements(rand_el(M2, rng), rand_el(C2, rng))
    lhs = embed_legs(x, (1, 3), [M2, CM, C2]) * embed_legs(x2, (1, 3), [M2, CM, C2])
    rhs = embed_legs(x * x2, (1, 3), [M2, CM, C2])
    assert op_norm(lhs - rhs) < 1e-10


def test_rank_of_span_threshold():
    v1 = np.array([1.0, 0.0, 0.0])
    v2 = np.array([1.0, 1e-12, 0.0])
    assert rank_of_span([v1, v2]) == 1
    assert rank_of_span([v1, np.array([0.0, 1.0, 0.0])]) == 2
    assert rank_of_span([np.zeros(3)]) == 0
