"""Actions of a finite quantum group on finite-dimensional C*-algebras.

An action is an injective unital *-homomorphism alpha: A -> C(G) (x) A
satisfying the action condition (Delta (x) id) alpha = (id (x) alpha) alpha
and the density condition, here an exact rank test.  Spectral subspaces,
the fixed-point expectation, and freeness all reduce to finite linear
algebra over the canonical bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    FiniteCStar,
    Functional,
    op_norm,
    orthonormal_span,
    project_onto_span,
    rank_of_span,
    subspace_distance,
    tensor_algebra,
    tensor_elements,
)
from .maps import (
    CertificationError,
    CertReport,
    LinearMap,
    certify_cp,
    certify_star_hom,
    max_col_op_norm,
    slice_left,
)
from .qgroup import QuantumGroup
from .structure import ConcreteAlgebra, identify_structure


class ActionError(CertificationError):
    pass


@dataclass
class Action:
    group: QuantumGroup
    carrier: FiniteCStar
    alpha: LinearMap
    report: CertReport = None
    spectral_bases: dict = field(default_factory=dict)  # irrep index -> rows
    label: str = ""

    @property
    def tensor_carrier(self) -> FiniteCStar:
        return tensor_algebra(self.group.algebra, self.carrier)

    def E_map(self, lam: int, k: int, s: int) -> LinearMap:
        om = self.group.omega(lam, k, s)
        return slice_left(om, self.group.algebra, self.carrier) @ self.alpha

    def E_projection(self, lam: int) -> LinearMap:
        d = self.group.irreps[lam].dim
        E = LinearMap.zero(self.carrier, self.carrier)
        for k in range(d):
            E = E + self.E_map(lam, k, k)
        return E

    def fixed_point_expectation(self) -> LinearMap:
        """E^t = (h (x) id) o alpha."""
        return slice_left(self.group.haar, self.group.algebra, self.carrier) @ self.alpha

    def spectral_basis(self, lam: int) -> np.ndarray:
        if lam not in self.spectral_bases:
            E = self.E_projection(lam)
            self.spectral_bases[lam] = orthonormal_span(
                [E.matrix[:, p] for p in range(self.carrier.total_dim)]
            )
        return self.spectral_bases[lam]


def make_action(
    group: QuantumGroup,
    carrier: FiniteCStar,
    alpha: LinearMap,
    tol: float = DEFAULT_TOL,
    label: str = "",
) -> Action:
    """Certify the action axioms and populate spectral data."""
    CG = group.algebra
    if alpha.domain.block_dims != carrier.block_dims or \
            alpha.codomain.block_dims != tensor_algebra(CG, carrier).block_dims:
        raise ActionError("alpha carrier mismatch")
    rep = CertReport("action", tol=tol)
    act = Action(group, carrier, alpha, rep, label=label)

    hom = certify_star_hom(alpha, tol)
    rep.merge(hom, "alpha_")
    rep.extras["alpha_min_singular_value"] = hom.extras["min_singular_value"]
    if not hom.extras["injective"]:
        raise ActionError("alpha is not injective", rep)
    if not hom.extras["unital"]:
        raise ActionError("alpha is not unital (nondegenerate)", rep)
    hom.require()

    ident_A = LinearMap.identity(carrier)
    ident_G = LinearMap.identity(CG)
    lhs = group.comult.tensor(ident_A) @ alpha
    rhs = ident_G.tensor(alpha) @ alpha
    rep.residuals["action_condition"] = lhs.defect(rhs)
    if rep.residuals["action_condition"] > tol:
        raise ActionError(
            f"action condition failed (residual {rep.residuals['action_condition']:.2e})",
            rep,
        )

    rank = density_rank(act)
    full = CG.total_dim * carrier.total_dim
    rep.extras["density_rank"] = rank
    rep.extras["density_required"] = full
    if rank != full:
        raise ActionError(f"density condition failed: rank {rank} < {full}", rep)

    # counit compatibility (epsilon (x) id) alpha = id
    eps_id = slice_left(group.counit, CG, carrier) @ alpha
    rep.residuals["counit_compatibility"] = eps_id.defect(ident_A)

    _certify_spectral(act, tol)
    rep.require()
    return act


def density_rank(act: Action) -> int:
    CG, A = act.group.algebra, act.carrier
    unit_A = A.unit()
    vecs = []
    for p in range(CG.total_dim):
        x1 = tensor_elements(CG.basis_element(p), unit_A)
        for q in range(A.total_dim):
            vecs.append((x1 * act.alpha(A.basis_element(q))).coeffs)
    return rank_of_span(vecs)


def _certify_spectral(act: Action, tol: float):
    """E-relations, completeness, the two descriptions of A_lambda, and the
    intertwining (P (x) id) alpha = alpha E."""
    rep = act.report
    qg, A = act.group, act.carrier
    total = LinearMap.zero(A, A)
    E_res = 0.0
    for a in qg.irreps:
        d = a.dim
        Es = [[act.E_map(a.index, k, s) for s in range(d)] for k in range(d)]
        for k in range(d):
            total = total + Es[k][k]
        for b in qg.irreps:
            e = b.dim
            Fs = [[act.E_map(b.index, k, s) for s in range(e)] for k in range(e)]
            for s in range(d):
                for m in range(d):
                    for l in range(e):
                        for n in range(e):
                            # left-to-right composition as in the E-relation
                            prod = Fs[l][n] @ Es[s][m]
                            if a.index == b.index and m == l:
                                E_res = max(E_res, prod.defect(Es[s][n]))
                            else:
                                E_res = max(
                                    E_res, max_col_op_norm(prod.matrix, A)
                                )
    rep.residuals["E_composition"] = E_res
    rep.residuals["E_completeness"] = total.defect(LinearMap.identity(A))

    # intertwining and the two descriptions of the spectral subspaces
    inter = 0.0
    desc = 0.0
    dims = []
    for a in qg.irreps:
        for i in range(a.dim):
            for j in range(a.dim):
                lhs = qg.P_map(a.index, i, j).tensor(LinearMap.identity(A)) @ act.alpha
                rhs = act.alpha @ act.E_map(a.index, i, j)
                inter = max(inter, lhs.defect(rhs))
        range_basis = act.spectral_basis(a.index)
        member_basis = _membership_basis(act, a.index)
        if range_basis.shape[0] != member_basis.shape[0]:
            raise ActionError(
                f"spectral subspace descriptions disagree in dimension for irrep "
                f"{a.index}: {range_basis.shape[0]} vs {member_basis.shape[0]}",
                rep,
            )
        desc = max(desc, subspace_distance(range_basis, member_basis))
        dims.append(range_basis.shape[0])
    rep.residuals["spectral_intertwining"] = inter
    rep.residuals["spectral_membership"] = desc
    rep.extras["spectral_dims"] = dims
    if sum(dims) != A.total_dim:
        raise ActionError(
            f"spectral subspaces do not decompose A: {dims} vs {A.total_dim}", rep
        )


def _membership_basis(act: Action, lam: int) -> np.ndarray:
    """A_lambda as {a : alpha(a) in C(G)_lambda (x) A} (nullspace description)."""
    qg, A = act.group, act.carrier
    P = qg.spectral_projection(lam)
    M = P.tensor(LinearMap.identity(A)).matrix @ act.alpha.matrix - act.alpha.matrix
    _, s, vh = np.linalg.svd(M)
    if s.size == 0 or s[0] < 1e-14:
        return np.eye(A.total_dim, dtype=complex)
    r = int(np.sum(s > 1e-9 * s[0]))
    return vh[r:].conj()


def spectral_maps(act: Action, lam: int):
    """E^lam_{ks} maps and an orthonormal basis of A_lambda."""
    d = act.group.irreps[lam].dim
    maps = [[act.E_map(lam, k, s) for s in range(d)] for k in range(d)]
    return maps, act.spectral_basis(lam)


# ---------------------------------------------------------------------------
# fixed point algebra
# ---------------------------------------------------------------------------

@dataclass
class FixedPointData:
    action: Action
    expectation: LinearMap
    basis: np.ndarray  # orthonormal rows spanning A^alpha
    concrete: ConcreteAlgebra  # structure of A^alpha inside the block rep of A
    inclusion_coeffs: np.ndarray  # columns: A-coeffs of the identified units
    report: CertReport


def fixed_point_algebra(act: Action, tol: float = DEFAULT_TOL) -> FixedPointData:
    rep = CertReport("fixed_point", tol=tol)
    A = act.carrier
    E = act.fixed_point_expectation()
    triv = act.group.trivial_index
    rep.residuals["expectation_vs_Etriv"] = E.defect(act.E_projection(triv))
    rep.residuals["idempotent"] = (E @ E).defect(E)
    cp = certify_cp(E, tol)
    rep.merge(cp, "expectation_")
    basis = act.spectral_basis(triv)
    # closure under products and adjoints
    clos = 0.0
    els = [AlgebraElement(A, basis[i]) for i in range(basis.shape[0])]
    for x in els:
        clos = max(
            clos,
            float(np.linalg.norm(x.star().coeffs - project_onto_span(x.star().coeffs, basis))),
        )
        for y in els:
            z = (x * y).coeffs
            clos = max(clos, float(np.linalg.norm(z - project_onto_span(z, basis))))
    rep.residuals["subalgebra_closure"] = clos
    # bimodule property E(a x b) = a E(x) b for a, b in A^alpha
    bim = 0.0
    for a in els:
        for b in els:
            for p in range(A.total_dim):
                x = A.basis_element(p)
                bim = max(bim, op_norm(E(a * x * b) - a * E(x) * b))
    rep.residuals["bimodule"] = bim
    # faithfulness via the Gram matrix of (a,b) -> trace E(a* b)
    tr = _trace_functional(A)
    t = A.total_dim
    Gr = np.zeros((t, t), dtype=complex)
    for p in range(t):
        xp = A.basis_element(p).star()
        for q in range(t):
            Gr[p, q] = tr(E(xp * A.basis_element(q)))
    Gr = (Gr + Gr.conj().T) / 2
    mineig = float(np.min(np.linalg.eigvalsh(Gr)))
    rep.extras["faithfulness_min_eigenvalue"] = mineig
    rep.residuals["faithfulness"] = max(0.0, -mineig) if mineig < tol else 0.0
    if mineig <= tol:
        raise ActionError(f"expectation not faithful (min eig {mineig:.2e})", rep)
    # identify the abstract structure of A^alpha inside the block rep of A
    ops = [AlgebraElement(A, basis[i]).to_operator() for i in range(basis.shape[0])]
    concrete = identify_structure(ops, seed=act.group.seed, label="fixed_points")
    incl = np.zeros((A.total_dim, concrete.structure.total_dim), dtype=complex)
    col = 0
    for b, d in enumerate(concrete.structure.block_dims):
        for i in range(d):
            for j in range(d):
                incl[:, col] = _operator_to_coeffs(concrete.units[b][i][j], A)
                col += 1
    rep.require()
    return FixedPointData(act, E, basis, concrete, incl, rep)


def _trace_functional(A: FiniteCStar) -> Functional:
    cov = np.zeros(A.total_dim, dtype=complex)
    for b, d in enumerate(A.block_dims):
        o = A.block_offsets[b]
        cov[o : o + d * d] = np.eye(d).ravel()
    return Functional(A, cov)


def _operator_to_coeffs(M: np.ndarray, A: FiniteCStar) -> np.ndarray:
    out = np.zeros(A.total_dim, dtype=complex)
    for b, d in enumerate(A.block_dims):
        o = A.rep_offsets[b]
        out[A.block_offsets[b] : A.block_offsets[b] + d * d] = M[
            o : o + d, o : o + d
        ].ravel()
    return out


# ---------------------------------------------------------------------------
# freeness
# ---------------------------------------------------------------------------

@dataclass
class FreenessReport:
    free: bool
    rank: int
    required: int
    per_irrep_defects: dict

    def to_dict(self):
        return {
            "free": self.free,
            "rank": self.rank,
            "required": self.required,
            "per_irrep_defects": {str(k): v for k, v in self.per_irrep_defects.items()},
        }


def check_freeness(act: Action) -> FreenessReport:
    """Exact rank test of [(1 (x) A) alpha(A)] = C(G) (x) A, with the per-irrep
    refinement [(1 (x) A) alpha(A_lambda)] vs C(G)_lambda (x) A."""
    qg, A = act.group, act.carrier
    CG = qg.algebra
    unit_G = CG.unit()
    vecs = []
    for q in range(A.total_dim):
        e1b = tensor_elements(unit_G, A.basis_element(q))
        for p in range(A.total_dim):
            vecs.append((e1b * act.alpha(A.basis_element(p))).coeffs)
    rank = rank_of_span(vecs)
    required = CG.total_dim * A.total_dim
    per = {}
    ident_A = LinearMap.identity(A)
    for a in qg.irreps:
        basis_lam = act.spectral_basis(a.index)
        sub = []
        for q in range(A.total_dim):
            e1b = tensor_elements(unit_G, A.basis_element(q))
            for i in range(basis_lam.shape[0]):
                sub.append(
                    (e1b * act.alpha(AlgebraElement(A, basis_lam[i]))).coeffs
                )
        r = rank_of_span(sub) if sub else 0
        want = a.dim * a.dim * A.total_dim  # dim C(G)_lambda (x) A
        per[a.index] = {"rank": r, "required": want, "defect": want - r}
    return FreenessReport(rank == required, rank, required, per)


def verify_action_density_lemma(act: Action, tol: float = DEFAULT_TOL) -> CertReport:
    """1 (x) E^lam(a) = sum_st ((u_st)^* (x) 1)(alpha E_st)(a) on the basis."""
    rep = CertReport("action_density_lemma", tol=tol)
    qg, A = act.group, act.carrier
    CG = qg.algebra
    res = 0.0
    for a in qg.irreps:
        d = a.dim
        E = act.E_projection(a.index)
        # pairing note: with omega_{sm}(u_{ln}) = delta_ls delta_mn the valid
        # identity pairs (u_st)^* with E_{ts}
        Emaps = [[act.E_map(a.index, s, t_) for t_ in range(d)] for s in range(d)]
        for p in range(A.total_dim):
            x = A.basis_element(p)
            lhs = tensor_elements(CG.unit(), E(x))
            rhs = lhs.parent.zero()
            for s in range(d):
                for t_ in range(d):
                    ust = a.coefficient(CG, s, t_)
                    rhs = rhs + tensor_elements(ust.star(), A.unit()) * act.alpha(
                        Emaps[t_][s](x)
                    )
            res = max(res, op_norm(lhs - rhs))
    rep.residuals["density_identity"] = res
    return rep


def spectral_subspace_properties(act: Action, tol: float = DEFAULT_TOL) -> CertReport:
    """A_lam A_mu inside A_{lam (x) mu}, (A_lam)^* = A_{conj lam}, and
    h-orthogonality of distinct spectral subspaces under <a,b> = E^t(a^* b)."""
    rep = CertReport("spectral_subspaces", tol=tol)
    qg, A = act.group, act.carrier
    E = act.fixed_point_expectation()
    # product containment: alpha(xy) must live in C(G)_{lam (x) mu} (x) A,
    # i.e. xy is in the sum of A_nu over irreducible components nu of lam(x)mu
    prod_res = 0.0
    for a in qg.irreps:
        Ba = act.spectral_basis(a.index)
        for b in qg.irreps:
            Bb = act.spectral_basis(b.index)
            comps = _tensor_components(qg, a.index, b.index)
            rows = [act.spectral_basis(nu) for nu in comps]
            rows = [r for r in rows if r.shape[0]]
            allowed = (
                orthonormal_span([row for r in rows for row in r])
                if rows
                else np.zeros((0, A.total_dim), dtype=complex)
            )
            for i in range(Ba.shape[0]):
                for j in range(Bb.shape[0]):
                    z = (AlgebraElement(A, Ba[i]) * AlgebraElement(A, Bb[j])).coeffs
                    prod_res = max(
                        prod_res,
                        float(np.linalg.norm(z - project_onto_span(z, allowed))),
                    )
    rep.residuals["product_containment"] = prod_res
    # adjoints: (A_lam)^* = A_{bar lam}
    star_res = 0.0
    for a in qg.irreps:
        bar = _conjugate_irrep(qg, a.index)
        Ba = act.spectral_basis(a.index)
        Bbar = act.spectral_basis(bar)
        for i in range(Ba.shape[0]):
            z = AlgebraElement(A, Ba[i]).star().coeffs
            star_res = max(
                star_res, float(np.linalg.norm(z - project_onto_span(z, Bbar)))
            )
    rep.residuals["adjoint_containment"] = star_res
    # orthogonality of distinct subspaces under E^t(a^* b)
    orth = 0.0
    for a in qg.irreps:
        Ba = act.spectral_basis(a.index)
        for b in qg.irreps:
            if b.index <= a.index:
                continue
            Bb = act.spectral_basis(b.index)
            for i in range(Ba.shape[0]):
                xa = AlgebraElement(A, Ba[i]).star()
                for j in range(Bb.shape[0]):
                    orth = max(orth, op_norm(E(xa * AlgebraElement(A, Bb[j]))))
    rep.residuals["bimodule_orthogonality"] = orth
    return rep


def _tensor_components(qg: QuantumGroup, lam: int, mu: int) -> list[int]:
    """Irreducible components of u^lam (x) u^mu (indices into qg.irreps).

    The product corepresentation has coefficients w_{(ik),(jl)} = u_ij v_kl;
    component nu appears iff an intertwiner to u^nu exists."""
    a, b = qg.irreps[lam], qg.irreps[mu]
    t = qg.dim
    d = a.dim * b.dim
    prod = np.zeros((t, d, d), dtype=complex)
    CG = qg.algebra
    for i in range(a.dim):
        for j in range(a.dim):
            for k in range(b.dim):
                for l in range(b.dim):
                    z = a.coefficient(CG, i, j) * b.coefficient(CG, k, l)
                    prod[:, i * b.dim + k, j * b.dim + l] = z.coeffs
    out = []
    for c in qg.irreps:
        if c.dim > d:
            continue
        if _has_intertwiner(prod, c.coef):
            out.append(c.index)
    return out


def _conjugate_irrep(qg: QuantumGroup, lam: int) -> int:
    """The class of the conjugate corepresentation (entrywise adjoint)."""
    co = qg.irreps[lam]
    sp = qg.algebra.star_permutation()
    conj = np.zeros_like(co.coef)
    for i in range(co.dim):
        for j in range(co.dim):
            conj[:, i, j] = np.conj(co.coef[:, i, j])[sp]
    for c in qg.irreps:
        if c.dim == co.dim and _has_intertwiner(conj, c.coef):
            return c.index
    raise ActionError(f"no conjugate irrep found for index {lam}")


def _has_intertwiner(c1: np.ndarray, c2: np.ndarray) -> bool:
    """Nonzero T with c1 (1 (x) T) = (1 (x) T) c2 slice-wise."""
    d1, d2 = c1.shape[1], c2.shape[1]
    rows = []
    for p in range(c1.shape[0]):
        rows.append(
            np.kron(c1[p], np.eye(d2)) - np.kron(np.eye(d1), c2[p].T)
        )
    M = np.vstack(rows)
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[-1] <= 1e-8 * max(1.0, s[0]))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def translation_action(qg: QuantumGroup, tol: float = DEFAULT_TOL) -> Action:
    """The left translation action alpha = Delta on A = C(G)."""
    return make_action(qg, qg.algebra, qg.comult, tol=tol, label="translation")


def trivial_action(qg: QuantumGroup, A: FiniteCStar, tol: float = DEFAULT_TOL) -> Action:
    CG = qg.algebra
    CGA = tensor_algebra(CG, A)
    M = np.zeros((CGA.total_dim, A.total_dim), dtype=complex)
    unit = CG.unit()
    for p in range(A.total_dim):
        M[:, p] = tensor_elements(unit, A.basis_element(p)).coeffs
    return make_action(qg, A, LinearMap(A, CGA, M), tol=tol, label="trivial")


def tensor_action(act: Action, D: FiniteCStar, tol: float = DEFAULT_TOL) -> Action:
    """alpha (x) id_D on carrier A (x) D."""
    AD = tensor_algebra(act.carrier, D)
    alpha_D = act.alpha.tensor(LinearMap.identity(D))
    return make_action(
        act.group, AD, alpha_D, tol=tol,
        label=(act.label + "(x)id" if act.label else "tensor"),
    )


def restriction_to_invariant_subalgebra(
    act: Action, basis_coeffs: np.ndarray, tol: float = DEFAULT_TOL
) -> tuple[Action, ConcreteAlgebra, np.ndarray]:
    """Restrict to an alpha-invariant unital subalgebra of the carrier.

    ``basis_coeffs`` rows span the subspace (in carrier coefficients).  The
    span must be a subalgebra whose unit p satisfies alpha(p) = 1 (x) p;
    returns the restricted action on the identified abstract carrier, the
    identification, and the inclusion coefficient matrix."""
    A = act.carrier
    CG = act.group.algebra
    rows = orthonormal_span(list(basis_coeffs))
    # invariance: alpha(span) inside C(G) (x) span
    inv_rows = orthonormal_span(
        [
            tensor_elements(CG.basis_element(p), AlgebraElement(A, rows[i])).coeffs
            for p in range(CG.total_dim)
            for i in range(rows.shape[0])
        ]
    )
    defect = np.zeros(rows.shape[0])
    for i in range(rows.shape[0]):
        v = act.alpha(AlgebraElement(A, rows[i])).coeffs
        defect[i] = float(np.linalg.norm(v - project_onto_span(v, inv_rows)))
    if defect.max() > tol:
        raise ActionError(
            f"subspace is not invariant (defect vector {np.round(defect, 6)})"
        )
    ops = [AlgebraElement(A, rows[i]).to_operator() for i in range(rows.shape[0])]
    concrete = identify_structure(ops, seed=act.group.seed, label="restriction")
    S = concrete.structure
    incl = np.zeros((A.total_dim, S.total_dim), dtype=complex)
    col = 0
    for b, d in enumerate(S.block_dims):
        for i in range(d):
            for j in range(d):
                incl[:, col] = _operator_to_coeffs(concrete.units[b][i][j], A)
                col += 1
    # the subalgebra unit must be fixed: alpha(p) = 1 (x) p
    p_el = AlgebraElement(A, incl @ S.unit().coeffs)
    unit_res = op_norm(act.alpha(p_el) - tensor_elements(CG.unit(), p_el))
    if unit_res > tol:
        raise ActionError(
            f"subalgebra unit is not invariant (residual {unit_res:.2e})"
        )
    # restricted alpha in the identified basis
    CGS = tensor_algebra(CG, S)
    proj = np.linalg.pinv(incl)
    lift = LinearMap.identity(CG).tensor(LinearMap(S, A, incl))
    # alpha restricted: S -> C(G)(x)S via pinv of (id (x) incl)
    big_incl = lift.matrix
    M = np.linalg.pinv(big_incl) @ act.alpha.matrix @ incl
    resid = float(
        np.linalg.norm(big_incl @ M - act.alpha.matrix @ incl)
    )
    if resid > tol * max(1.0, float(np.linalg.norm(act.alpha.matrix @ incl))):
        raise ActionError(f"restriction did not close (residual {resid:.2e})")
    sub = make_action(
        act.group, S, LinearMap(S, CGS, M), tol=tol,
        label=(act.label + "|sub" if act.label else "restriction"),
    )
    return sub, concrete, incl
