import numpy as np
import pytest

from qgact.algebra import (
    AlgebraElement,
    FiniteCStar,
    op_norm,
    rank_of_span,
    tensor_elements,
)
from qgact.maps import CertificationError, LinearMap
from qgact.actions import (
    ActionError,
    check_freeness,
    fixed_point_algebra,
    make_action,
    spectral_maps,
    spectral_subspace_properties,
    tensor_action,
    translation_action,
    trivial_action,
    verify_action_density_lemma,
)
from qgact.catalog import catalog_actions, free_expectation, group


@pytest.fixture(scope="module")
def acts():
    return catalog_actions()


def test_translation_certified(acts):
    for name in ["trans_z2", "trans_s3", "trans_dual_s3"]:
        assert acts[name].report.passed, name


def test_translation_spectral_dims(acts):
    """A_lambda = C(G)_lambda for the translation action: dim = d_lambda^2."""
    act = acts["trans_s3"]
    dims = {c.index: act.spectral_basis(c.index).shape[0] for c in act.group.irreps}
    assert sorted(dims.values()) == [1, 1, 4]


def test_trivial_spectral_dims(acts):
    act = acts["triv_z2_m2"]
    triv = act.group.trivial_index
    for co in act.group.irreps:
        want = act.carrier.total_dim if co.index == triv else 0
        assert act.spectral_basis(co.index).shape[0] == want


def test_intertwining_identity(acts):
    """(P (x) id) alpha = alpha E, certified during make_action."""
    for name in ["trans_s3", "tensor_z2_m2"]:
        assert acts[name].report.residuals["spectral_intertwining"] < 1e-10


def test_counit_compatibility(acts):
    for act in acts.values():
        assert act.report.residuals["counit_compatibility"] < 1e-9


def test_perturbed_action_rejected(acts):
    act = acts["trans_z2"]
    rng = np.random.default_rng(11)
    N = rng.normal(size=act.alpha.matrix.shape)
    N /= np.linalg.norm(N, 2)
    eps = 1e-3
    bad = LinearMap(act.alpha.domain, act.alpha.codomain, act.alpha.matrix + eps * N)
    with pytest.raises(CertificationError):
        make_action(act.group, act.carrier, bad)


def test_fixed_points_translation(acts):
    fp = fixed_point_algebra(acts["trans_s3"])
    assert fp.concrete.structure.block_dims == (1,)


def test_fixed_points_trivial(acts):
    fp = fixed_point_algebra(acts["triv_z2_m2"])
    assert fp.concrete.structure.block_dims == (2,)
    assert np.allclose(fp.expectation.matrix, np.eye(4), atol=1e-10)


def test_fixed_points_tensor(acts):
    """Delta (x) id on C(G) (x) M2 has fixed points 1 (x) M2."""
    fp = fixed_point_algebra(acts["tensor_z2_m2"])
    assert fp.concrete.structure.block_dims == (2,)


def test_expectation_bimodule_and_faithful(acts):
    fp = fixed_point_algebra(acts["trans_z2"])
    assert fp.report.residuals["bimodule"] < 1e-10
    assert fp.report.extras["faithfulness_min_eigenvalue"] > 1e-9


def brute_force_free(act) -> bool:
    """Independent oracle: enumerate the span as concrete operators in the
    block representation of C(G) (x) A."""
    qg, A = act.group, act.carrier
    CG = qg.algebra
    ops = []
    for q in range(A.total_dim):
        b = A.basis_element(q)
        one_b = tensor_elements(CG.unit(), b)
        for p in range(A.total_dim):
            z = one_b * act.alpha(A.basis_element(p))
            ops.append(z.to_operator().ravel())
    return rank_of_span(ops) == CG.total_dim * A.total_dim


def test_freeness_against_brute_force(acts):
    expected = free_expectation()
    small = {
        n: a for n, a in acts.items()
        if a.group.algebra.total_dim * a.carrier.total_dim <= 64
    }
    assert len(small) >= 12
    for name, act in small.items():
        fr = check_freeness(act)
        assert fr.free == brute_force_free(act), name
        assert fr.free == expected[name], name


def test_freeness_rank_evidence(acts):
    fr = check_freeness(acts["triv_z2_c"])
    assert not fr.free
    assert fr.rank == 1 and fr.required == 2
    per = fr.per_irrep_defects
    assert any(v["defect"] > 0 for v in per.values())


def test_density_lemma(acts):
    for name in ["trans_z2", "trans_s3", "triv_z2_m2", "tensor_z2_m2"]:
        rep = verify_action_density_lemma(acts[name])
        assert rep.max_residual < 1e-10, name


def test_subspace_properties(acts):
    for name in ["trans_s3", "tensor_z2_m2", "trans_dual_s3"]:
        rep = spectral_subspace_properties(acts[name])
        assert rep.max_residual < 1e-9, name


def test_spectral_maps_relations(acts):
    act = acts["trans_s3"]
    assert act.report.residuals["E_composition"] < 1e-10
    assert act.report.residuals["E_completeness"] < 1e-10
    maps, basis = spectral_maps(act, 2)
    assert len(maps) == act.group.irreps[2].dim
    assert basis.shape[0] == act.group.irreps[2].dim ** 2


def test_restriction_invariance_error(acts):
    """Restricting to a non-invariant subspace reports the defect."""
    from qgact.actions import restriction_to_invariant_subalgebra

    act = acts["trans_s3"]
    rows = np.zeros((1, 6), dtype=complex)
    rows[0, 0] = 1.0  # delta_e alone is not translation invariant
    with pytest.raises(ActionError, match="invariant"):
        restriction_to_invariant_subalgebra(act, rows)


def test_injective_norm_sampling():
    """Sampled slice norms stay below the operator norm and approach it:
    the Monte-Carlo cross-check of the tensor-norm formula."""
    qg = group("s3")
    CG = qg.algebra
    co = next(c for c in qg.irreps if c.dim == 2)
    M2 = FiniteCStar((2,), "M2")
    rng = np.random.default_rng(42)
    coeffs = {}
    a = None
    for i in range(2):
        for j in range(2):
            u = co.coefficient(CG, i, j)
            m = M2.element(rng.normal(size=4) + 1j * rng.normal(size=4))
            term = tensor_elements(u, m)
            a = term if a is None else a + term
    target = op_norm(a)
    # functionals phi(x) = <xi, pi(x) eta> with ||xi|| = ||eta|| = 1 have
    # norm <= 1, and slices by them are contractive
    n = CG.rep_dim
    best = 0.0
    from qgact.algebra import to_kron_coords

    K = to_kron_coords(a, CG, M2).reshape(CG.total_dim, M2.total_dim)
    reps = [CG.basis_element(p).to_operator() for p in range(CG.total_dim)]
    for k in range(10_000):
        if k % 2 == 0:
            xi = rng.normal(size=n) + 1j * rng.normal(size=n)
            eta = rng.normal(size=n) + 1j * rng.normal(size=n)
        else:
            # peaked functionals: the extreme points for a commutative C(G)
            g = rng.integers(n)
            xi = np.zeros(n, dtype=complex)
            eta = np.zeros(n, dtype=complex)
            xi[g] = np.exp(2j * np.pi * rng.uniform())
            eta[g] = np.exp(2j * np.pi * rng.uniform())
        xi /= np.linalg.norm(xi)
        eta /= np.linalg.norm(eta)
        vals = np.array([xi.conj() @ R @ eta for R in reps])
        sliced = AlgebraElement(M2, vals @ K)
        v = op_norm(sliced)
        assert v <= target + 1e-9
        best = max(best, v)
    assert best >= 0.95 * target
