import numpy as np
import pytest

from qgact.algebra import FiniteCStar
from qgact.maps import LinearMap
from qgact.actions import translation_action, trivial_action
from qgact.catalog import catalog_actions, group
from qgact.crossed import (
    crossed_product,
    discrete_crossed_product,
    dual_action,
    integer_kernel,
    iota_map,
    k0_map,
    k0_order_unit,
    k0_rokhlin_range,
    rank_one_corner_residual,
    stabilization,
    subgroups_equal,
    takai_check,
)


@pytest.fixture(scope="module")
def acts():
    return catalog_actions()


@pytest.mark.parametrize("name,n", [("z2", 2), ("z3", 3), ("s3", 6)])
def test_regular_crossed_product_is_full_matrix(name, n, acts):
    cp = crossed_product(acts[f"trans_{name}"])
    assert cp.carrier.block_dims == (n,)
    assert cp.span_dim == n * n
    assert cp.report.extras["center_dim"] == 1


def test_trivial_crossed_product_is_dual_algebra(acts):
    cp = crossed_product(trivial_action(group("s3"), FiniteCStar((1,), "C")))
    assert cp.carrier.block_dims == (1, 1, 2)


def test_dual_action_discrete_conditions(acts):
    for name in ["trans_z2", "trans_s3"]:
        da = dual_action(crossed_product(acts[name]))
        assert da.report.passed
        assert da.per_block_action_residual < 1e-9
        for rank, want in da.per_block_density_ranks:
            assert rank == want


def test_double_crossed_product_dimension(acts):
    """G-check |x (dual action on Z2 |x C(Z2)) has dimension 8 = dim K_G (x) C(G)."""
    da = dual_action(crossed_product(acts["trans_z2"]))
    dcp, dual_compact = discrete_crossed_product(da, group("z2"))
    assert dcp.carrier.total_dim == 8
    assert dual_compact.report.passed


def test_rank_one_corner_identity():
    """(1 (x) |1><1|) X = 1 (x) |1><1| for X = Sigma V Sigma."""
    for name in ["z2", "s3"]:
        assert rank_one_corner_residual(group(name)) < 1e-10


def test_stabilization_trivial_action():
    z2 = group("z2")
    stab, rep = stabilization(trivial_action(z2, FiniteCStar((1,), "C")))
    assert stab.carrier.block_dims == (2,)  # K_G for |G| = 2
    assert rep.passed
    from qgact.actions import fixed_point_algebra

    fp = fixed_point_algebra(stab)
    assert fp.concrete.structure.total_dim >= 1


def test_stabilization_corner_equivariance_z2(acts):
    stab, rep = stabilization(acts["trans_z2"])
    assert rep.residuals["corner_equivariance"] < 1e-10
    assert rep.residuals["corner_unitary_identity"] < 1e-10


@pytest.mark.parametrize(
    "gname,blocks",
    [("z2", (1,)), ("z2", (2,)), ("s3", (1,))],
)
def test_takai_instances(gname, blocks):
    act = trivial_action(group(gname), FiniteCStar(blocks, "A"))
    tk = takai_check(act)
    assert tk.report.passed
    assert tk.dim_crossed == tk.dim_target
    assert tk.report.residuals["inclusion_compatibility"] < 1e-9


def test_takai_translation(acts):
    tk = takai_check(acts["trans_z2"])
    assert tk.report.passed


def test_k0_identity_and_functoriality():
    A = FiniteCStar((2, 1), "A")
    ident = LinearMap.identity(A)
    assert np.array_equal(k0_map(ident), np.eye(2, dtype=int))
    # functoriality on a composition: unital embedding A -> M3 by
    # block-diagonal placement
    B = FiniteCStar((3,), "M3")
    M = np.zeros((9, 5), dtype=complex)
    # send (x, c) -> diag(x, c)
    for i in range(2):
        for j in range(2):
            col = A.basis_index(0, i, j)
            M[B.basis_index(0, i, j), col] = 1.0
    M[B.basis_index(0, 2, 2), A.basis_index(1, 0, 0)] = 1.0
    phi = LinearMap(A, B, M)
    k_phi = k0_map(phi)
    assert k_phi.tolist() == [[1, 1]]
    k_comp = k0_map(phi @ ident)
    assert np.array_equal(k_comp, k_phi @ k0_map(ident))
    assert np.array_equal(k0_order_unit(A), [2, 1])


def test_k0_rokhlin_range_z2(acts):
    """Translation on C(Z/2): kernel of K0(Delta) - K0(iota) is the diagonal
    copy of Z, matching the image of K0(C 1)."""
    rr = k0_rokhlin_range(acts["trans_z2"])
    assert rr.matches
    assert subgroups_equal(rr.kernel_basis, np.array([[1], [1]]))


def test_k0_rokhlin_range_s3(acts):
    rr = k0_rokhlin_range(acts["trans_s3"])
    assert rr.matches
    assert subgroups_equal(rr.kernel_basis, np.ones((6, 1), dtype=int))


def test_integer_kernel_and_subgroup_tools():
    M = np.array([[1, -1, 0], [0, 2, -2]])
    K = integer_kernel(M)
    for col in K.T:
        assert np.all(M @ col == 0)
    assert K.shape[1] == 1
    assert subgroups_equal(K, np.array([[1], [1], [1]]))
    assert not subgroups_equal(K, 2 * K)
