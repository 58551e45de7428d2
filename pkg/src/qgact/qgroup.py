"""Finite compact quantum groups: Hopf data, Haar state, GNS space,
irreducible corepresentations, orthogonality data, counit/antipode,
fundamental unitaries, and duals.

Scope is finite quantum groups admitting a faithful invariant state; data
that fails any certification is rejected with the residual as evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    FiniteCStar,
    Functional,
    factor_permutation,
    op_norm,
    orthonormal_span,
    rank_of_span,
    tensor_algebra,
    tensor_elements,
    tensor_permutation,
    to_kron_coords,
)
from .maps import (
    CertificationError,
    CertReport,
    LinearMap,
    certify_star_hom,
    left_multiplication,
    max_col_op_norm,
    right_multiplication,
    slice_left,
    slice_right,
)
from .structure import EIGENGAP, MAX_RESEEDS, commutant, random_hermitian_in_span, split_eigenspaces

DEFAULT_SEED = 7


class HopfError(CertificationError):
    pass


@dataclass
class Corepresentation:
    """Unitary corepresentation in coefficient form.

    ``coef[p, i, j]`` is the coefficient of the p-th canonical basis element
    of C(G) in the matrix coefficient u_{ij}."""

    index: int
    dim: int
    coef: np.ndarray
    F: np.ndarray | None = None
    qdim: float | None = None

    def coefficient(self, parent: FiniteCStar, i: int, j: int) -> AlgebraElement:
        return AlgebraElement(parent, self.coef[:, i, j])

    def coeff_basis(self, parent: FiniteCStar) -> list[AlgebraElement]:
        return [
            self.coefficient(parent, i, j)
            for i in range(self.dim)
            for j in range(self.dim)
        ]

    def as_element(self, parent: FiniteCStar) -> AlgebraElement:
        Md = FiniteCStar((self.dim,), f"M{self.dim}")
        kron = self.coef.reshape(parent.total_dim, self.dim * self.dim).ravel()
        return AlgebraElement(
            tensor_algebra(parent, Md), kron[tensor_permutation(parent, Md)]
        )

    def character(self, parent: FiniteCStar) -> AlgebraElement:
        return AlgebraElement(parent, np.einsum("pii->p", self.coef))

    def is_trivial(self, parent: FiniteCStar, tol: float = 1e-8) -> bool:
        return self.dim == 1 and op_norm(
            self.coefficient(parent, 0, 0) - parent.unit()
        ) <= tol


@dataclass
class QuantumGroup:
    algebra: FiniteCStar
    comult: LinearMap
    haar: Functional = None
    counit: Functional = None
    antipode: LinearMap = None
    irreps: list[Corepresentation] = None
    gns_gram: np.ndarray = None
    gns_basis: np.ndarray = None  # columns: coefficients of the ON basis
    gns_coords: np.ndarray = None  # coords = gns_coords @ coeffs
    W: np.ndarray = None
    V: np.ndarray = None
    report: CertReport = None
    seed: int = DEFAULT_SEED

    @property
    def dim(self) -> int:
        return self.algebra.total_dim

    @property
    def trivial_index(self) -> int:
        for k, co in enumerate(self.irreps):
            if co.is_trivial(self.algebra):
                return k
        raise HopfError("no trivial corepresentation found")

    def gns_vector(self, x: AlgebraElement) -> np.ndarray:
        return self.gns_coords @ x.coeffs

    def gns_element(self, v: np.ndarray) -> AlgebraElement:
        return AlgebraElement(self.algebra, self.gns_basis @ v)

    def gns_rep(self, x: AlgebraElement) -> np.ndarray:
        """pi(x) acting on L^2(G) in the orthonormal GNS basis."""
        return self.gns_coords @ left_multiplication(x).matrix @ self.gns_basis

    def coefficient_matrix(self) -> np.ndarray:
        """Columns are the u^lambda_{ij} over all irreps, (lambda,(i,j)) order."""
        cols = []
        for co in self.irreps:
            for i in range(co.dim):
                for j in range(co.dim):
                    cols.append(co.coef[:, i, j])
        return np.stack(cols, axis=1)

    def omega(self, lam: int, s: int, m: int) -> Functional:
        """The functional dual to the matrix coefficients of irrep lam."""
        co = self.irreps[lam]
        Finv = np.linalg.inv(co.F)
        cov = np.zeros(self.dim, dtype=complex)
        for k in range(co.dim):
            usk_star = co.coefficient(self.algebra, s, k).star()
            cov += co.qdim * Finv[m, k] * (
                self.haar.coeffs @ right_multiplication(usk_star).matrix
            )
        return Functional(self.algebra, cov)

    def P_map(self, lam: int, k: int, s: int) -> LinearMap:
        return slice_left(self.omega(lam, k, s), self.algebra, self.algebra) @ self.comult

    def spectral_projection(self, lam: int) -> LinearMap:
        co = self.irreps[lam]
        P = LinearMap.zero(self.algebra, self.algebra)
        for k in range(co.dim):
            P = P + self.P_map(lam, k, k)
        return P

    def multiplication_map(self) -> LinearMap:
        """m: C(G)(x)C(G) -> C(G)."""
        A = self.algebra
        AA = tensor_algebra(A, A)
        perm = tensor_permutation(A, A)
        iA, iB = np.divmod(perm, A.total_dim)
        M = np.zeros((A.total_dim, AA.total_dim), dtype=complex)
        for p in range(AA.total_dim):
            M[:, p] = (A.basis_element(iA[p]) * A.basis_element(iB[p])).coeffs
        return LinearMap(AA, A, M)


# ---------------------------------------------------------------------------
# construction from a finite group multiplication table
# ---------------------------------------------------------------------------

def validate_group_table(table) -> np.ndarray:
    T = np.asarray(table, dtype=int)
    n = T.shape[0]
    if T.shape != (n, n):
        raise HopfError("multiplication table must be square")
    if T.min() < 0 or T.max() >= n:
        raise HopfError("table entries must be group element indices")
    ident = None
    for e in range(n):
        if all(T[e, g] == g and T[g, e] == g for g in range(n)):
            ident = e
            break
    if ident is None:
        raise HopfError("group axiom failed: no identity element")
    for g in range(n):
        if ident not in T[g, :]:
            raise HopfError(f"group axiom failed: element {g} has no inverse")
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if T[T[a, b], c] != T[a, T[b, c]]:
                    raise HopfError(
                        f"group axiom failed: associativity at ({a},{b},{c})"
                    )
    return T


def group_comultiplication(T: np.ndarray, label: str = "") -> tuple[FiniteCStar, LinearMap]:
    """C(G) for a finite group: blocks all of size 1, Delta(d_g) = sum over
    st = g of d_s (x) d_t."""
    n = T.shape[0]
    A = FiniteCStar((1,) * n, label or "C(G)")
    AA = tensor_algebra(A, A)
    perm = tensor_permutation(A, A)
    M = np.zeros((AA.total_dim, n), dtype=complex)
    kron = np.zeros((n * n, n), dtype=complex)
    for s in range(n):
        for t in range(n):
            kron[s * n + t, T[s, t]] = 1.0
    M = kron[perm, :]
    return A, LinearMap(A, AA, M)


def from_finite_group(table, label: str = "", tol: float = DEFAULT_TOL,
                      seed: int = DEFAULT_SEED) -> QuantumGroup:
    T = validate_group_table(table)
    A, comult = group_comultiplication(T, label)
    return from_hopf_data(A, comult, tol=tol, seed=seed)


# ---------------------------------------------------------------------------
# full Hopf certification pipeline
# ---------------------------------------------------------------------------

def from_hopf_data(
    algebra: FiniteCStar,
    comult: LinearMap,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_SEED,
) -> QuantumGroup:
    rep = CertReport("quantum_group", tol=tol)
    qg = QuantumGroup(algebra=algebra, comult=comult, report=rep, seed=seed)

    hom = certify_star_hom(comult, tol)
    rep.merge(hom, "comult_")
    if not hom.extras["unital"]:
        raise HopfError("comultiplication is not unital", hom)
    hom.require()

    AA = tensor_algebra(algebra, algebra)
    coassoc = (comult.tensor(LinearMap.identity(algebra)) @ comult).defect(
        LinearMap.identity(algebra).tensor(comult) @ comult
    )
    rep.residuals["coassociativity"] = coassoc
    if coassoc > tol:
        raise HopfError(f"coassociativity failed (residual {coassoc:.2e})", rep)

    basis = algebra.basis()
    unit = algebra.unit()
    span_r = rank_of_span(
        [(comult(x) * tensor_elements(unit, y)).coeffs for x in basis for y in basis]
    )
    span_l = rank_of_span(
        [(comult(x) * tensor_elements(y, unit)).coeffs for x in basis for y in basis]
    )
    rep.extras["density_rank_right"] = span_r
    rep.extras["density_rank_left"] = span_l
    full = AA.total_dim
    if span_r != full or span_l != full:
        raise HopfError(
            f"density condition failed: span ranks {span_l},{span_r} < {full}", rep
        )

    _compute_haar(qg, tol)
    _compute_gns(qg, tol)
    _decompose_irreps(qg, tol)
    _compute_schur(qg, tol)
    _certify_omega_P(qg, tol)
    _compute_counit_antipode(qg, tol)
    _compute_fundamental_unitaries(qg, tol)
    rep.require()
    return qg


def haar_state(algebra: FiniteCStar, comult: LinearMap, tol: float = DEFAULT_TOL) -> Functional:
    """Solve the bi-invariance system (h(x)id = (h(x)id)Delta both sides);
    the solution space must be one-dimensional and positive."""
    t = algebra.total_dim
    unit = algebra.unit().coeffs
    rows = []
    for p in range(t):
        K = to_kron_coords(
            comult(algebra.basis_element(p)), algebra, algebra
        ).reshape(t, t)
        x = np.zeros(t)
        x[p] = 1.0
        # (h (x) id) Delta(b_p) = h(b_p) 1:  sum_q h_q (K[q,:] - delta_pq 1)
        rows.append(K - np.outer(x, unit))
        rows.append(K.T - np.outer(x, unit))
    # unknowns h_q: equations sum_q h_q M[q, r] = 0
    M = np.concatenate([blk[None] for blk in rows], axis=0)  # (2t, t, t)
    big = M.transpose(0, 2, 1).reshape(-1, t)
    _, s, vh = np.linalg.svd(big)
    null_dim = int(np.sum(s <= 1e-10 * s[0]))
    if null_dim != 1:
        raise HopfError(
            f"bi-invariant functional space has dimension {null_dim}, expected 1"
        )
    h = vh[-1].conj()
    h = h / (h @ unit)
    phi = Functional(algebra, h)
    if not phi.is_positive(tol):
        raise HopfError("normalized invariant functional is not positive")
    return phi


def _compute_haar(qg: QuantumGroup, tol: float):
    qg.haar = haar_state(qg.algebra, qg.comult, tol)
    h_id = slice_left(qg.haar, qg.algebra, qg.algebra) @ qg.comult
    id_h = slice_right(qg.haar, qg.algebra, qg.algebra) @ qg.comult
    target = LinearMap(
        qg.algebra,
        qg.algebra,
        np.outer(qg.algebra.unit().coeffs, qg.haar.coeffs),
    )
    qg.report.residuals["haar_invariance"] = max(
        h_id.defect(target), id_h.defect(target)
    )


def _compute_gns(qg: QuantumGroup, tol: float):
    A = qg.algebra
    t = A.total_dim
    G = np.zeros((t, t), dtype=complex)
    for p in range(t):
        bs = A.basis_element(p).star()
        for q in range(t):
            G[p, q] = qg.haar(bs * A.basis_element(q))
    G = (G + G.conj().T) / 2
    mineig = float(np.min(np.linalg.eigvalsh(G)))
    qg.report.extras["gns_min_eigenvalue"] = mineig
    if mineig <= tol:
        raise HopfError(f"Haar state not faithful (Gram min eigenvalue {mineig:.2e})")
    L = np.linalg.cholesky(G)
    C = np.linalg.inv(L).conj().T  # columns = ON basis coefficients
    qg.gns_gram = G
    qg.gns_basis = C
    qg.gns_coords = C.conj().T @ G


def _regular_corepresentation(qg: QuantumGroup) -> np.ndarray:
    """coef[p, i, j] of the regular corepresentation on L^2(G)."""
    A = qg.algebra
    t = A.total_dim
    raw = np.zeros((t, t, t), dtype=complex)
    V = qg.gns_coords
    for j in range(t):
        fj = AlgebraElement(A, qg.gns_basis[:, j])
        K = to_kron_coords(qg.comult(fj), A, A).reshape(t, t)
        # raw[:, i, j] = coefficients of (id (x) <f_i|) Delta(f_j)
        raw[:, :, j] = K @ V.T
    # orientation fix: u_{ij} = raw_{ji}^* satisfies the corepresentation
    # identity Delta(u_ij) = sum_k u_ik (x) u_kj
    coef = np.zeros_like(raw)
    sp = A.star_permutation()
    for i in range(t):
        for j in range(t):
            coef[:, i, j] = np.conj(raw[:, j, i])[sp]
    return coef


def corep_identity_residual(qg: QuantumGroup, coef: np.ndarray) -> float:
    """max_ij || Delta(u_ij) - sum_k u_ik (x) u_kj ||."""
    A = qg.algebra
    d = coef.shape[1]
    res = 0.0
    for i in range(d):
        for j in range(d):
            lhs = qg.comult(AlgebraElement(A, coef[:, i, j]))
            rhs = lhs.parent.zero()
            for k in range(d):
                rhs = rhs + tensor_elements(
                    AlgebraElement(A, coef[:, i, k]), AlgebraElement(A, coef[:, k, j])
                )
            res = max(res, op_norm(lhs - rhs))
    return res


def corep_unitarity_residual(qg: QuantumGroup, coef: np.ndarray) -> float:
    A = qg.algebra
    d = coef.shape[1]
    Md = FiniteCStar((d,))
    co = Corepresentation(-1, d, coef)
    u = co.as_element(A)
    AMd = u.parent
    one = AMd.unit()
    return max(op_norm(u * u.star() - one), op_norm(u.star() * u - one))


def _slice_commutant(coef: np.ndarray) -> list[np.ndarray]:
    """Intertwiners of the corepresentation = commutant of coefficient slices."""
    return commutant([coef[p] for p in range(coef.shape[0])])


def _split_corep(coef: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    """Recursively split a unitary corepresentation into irreducible pieces."""
    comm = _slice_commutant(coef)
    cdim = rank_of_span([c.ravel() for c in comm])
    if cdim == 1:
        return [coef]
    for attempt in range(MAX_RESEEDS):
        H = random_hermitian_in_span(comm, rng)
        bases, gap = split_eigenspaces(H)
        if len(bases) > 1 and gap > EIGENGAP:
            break
    else:
        raise HopfError("eigengap below threshold after reseeds in irrep splitting")
    out = []
    for Q in bases:
        sub = np.einsum("ia,pij,jb->pab", np.conj(Q), coef, Q, optimize=True)
        out.extend(_split_corep(sub, rng))
    return out


def _equivalent(c1: np.ndarray, c2: np.ndarray) -> bool:
    if c1.shape[1] != c2.shape[1]:
        return False
    d = c1.shape[1]
    rows = []
    for p in range(c1.shape[0]):
        rows.append(np.kron(c1[p], np.eye(d)) - np.kron(np.eye(d), c2[p].T))
    A = np.vstack(rows)
    s = np.linalg.svd(A, compute_uv=False)
    return bool(s[-1] <= 1e-8 * s[0])


def _decompose_irreps(qg: QuantumGroup, tol: float):
    A = qg.algebra
    rng = np.random.default_rng(qg.seed)
    reg = _regular_corepresentation(qg)
    qg.report.residuals["regular_corep_unitarity"] = corep_unitarity_residual(qg, reg)
    qg.report.residuals["regular_corep_identity"] = corep_identity_residual(qg, reg)
    pieces = _split_corep(reg, rng)
    classes: list[np.ndarray] = []
    for c in pieces:
        if not any(_equivalent(c, rep) for rep in classes):
            classes.append(c)
    total = sum(c.shape[1] ** 2 for c in classes)
    qg.report.extras["irrep_dims"] = sorted(c.shape[1] for c in classes)
    if total != A.total_dim:
        raise HopfError(
            f"Peter-Weyl dimension count failed: sum d^2 = {total} != {A.total_dim}"
        )

    def sort_key(c):
        chi = np.einsum("pii->p", c)
        vec = tuple(
            (round(float(z.real), 6), round(float(z.imag), 6)) for z in chi
        )
        return (c.shape[1], vec)

    classes.sort(key=sort_key)
    qg.irreps = [
        Corepresentation(k, c.shape[1], c) for k, c in enumerate(classes)
    ]
    uni = max(corep_unitarity_residual(qg, c.coef) for c in qg.irreps)
    ide = max(corep_identity_residual(qg, c.coef) for c in qg.irreps)
    qg.report.residuals["irrep_unitarity"] = uni
    qg.report.residuals["irrep_identity"] = ide
    M = qg.coefficient_matrix()
    s = np.linalg.svd(M, compute_uv=False)
    qg.report.extras["coeff_basis_condition"] = float(s[0] / s[-1])
    if np.sum(s > 1e-9 * s[0]) != A.total_dim:
        raise HopfError("matrix coefficients do not span C(G)")
    qg.trivial_index  # raises if missing


def _compute_schur(qg: QuantumGroup, tol: float):
    res, cross = 0.0, 0.0
    for co in qg.irreps:
        F, q, r = schur_solve(qg, co)
        co.F, co.qdim = F, q
        res = max(res, r)
    A = qg.algebra
    for a in qg.irreps:
        for b in qg.irreps:
            if a.index == b.index:
                continue
            for i in range(a.dim):
                for j in range(a.dim):
                    ua = a.coefficient(A, i, j)
                    for k in range(b.dim):
                        for l in range(b.dim):
                            ub = b.coefficient(A, k, l)
                            cross = max(
                                cross,
                                abs(qg.haar(ua * ub.star())),
                                abs(qg.haar(ua.star() * ub)),
                            )
    qg.report.residuals["schur"] = res
    qg.report.residuals["schur_cross_irrep"] = cross


def schur_solve(qg: QuantumGroup, co: Corepresentation) -> tuple[np.ndarray, float, float]:
    """Solve the orthogonality relations for F and the quantum dimension.

    Uses both displayed families: h(u_ij u_kl^*) determines F/q and
    h(u_ij^* u_kl) determines F^{-1}/q; consistency pins q."""
    A = qg.algebra
    d = co.dim
    M1 = np.zeros((d, d, d, d), dtype=complex)
    M2 = np.zeros((d, d, d, d), dtype=complex)
    els = [[co.coefficient(A, i, j) for j in range(d)] for i in range(d)]
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    M1[i, j, k, l] = qg.haar(els[i][j] * els[k][l].star())
                    M2[i, j, k, l] = qg.haar(els[i][j].star() * els[k][l])
    N1 = np.einsum("ijil->lj", M1) / d  # = F/q
    N2 = np.einsum("ijkj->ik", M2) / d  # = F^{-1}/q
    tr = np.trace(N1 @ N2).real
    if tr <= 0:
        raise HopfError("Schur system inconsistent: non-Kac or corrupted data")
    q = float(np.sqrt(d / tr))
    F = q * N1
    F = (F + F.conj().T) / 2
    eigs = np.linalg.eigvalsh(F)
    if eigs.min() <= 1e-9 * max(1.0, eigs.max()):
        raise HopfError("Schur F matrix not positive definite: non-Kac or corrupted data")
    # residual of the displayed relation with the solved F
    expect = np.einsum("ik,lj->ijkl", np.eye(d), F) / q
    r1 = float(np.max(np.abs(M1 - expect)))
    Finv = np.linalg.inv(F)
    expect2 = np.einsum("ik,lj->ijkl", Finv, np.eye(d)) / q
    r2 = float(np.max(np.abs(M2 - expect2)))
    r = max(r1, r2)
    if r > 100 * qg.report.tol:
        raise HopfError(
            f"Schur relations inconsistent (residual {r:.2e}): non-Kac or corrupted data"
        )
    return F, q, r


def _certify_omega_P(qg: QuantumGroup, tol: float):
    A = qg.algebra
    pair_res = 0.0
    conv_res = 0.0
    for a in qg.irreps:
        for s in range(a.dim):
            for m in range(a.dim):
                om = qg.omega(a.index, s, m)
                for b in qg.irreps:
                    for l in range(b.dim):
                        for n in range(b.dim):
                            val = om(b.coefficient(A, l, n))
                            want = 1.0 if (a.index == b.index and l == s and n == m) else 0.0
                            pair_res = max(pair_res, abs(val - want))
    # convolution: (omega_sm (x) omega_ln) o Delta = delta_ml omega_sn
    for a in qg.irreps:
        d = a.dim
        oms = [[qg.omega(a.index, s, m) for m in range(d)] for s in range(d)]
        for s in range(d):
            for m in range(d):
                for l in range(d):
                    for n in range(d):
                        cov = _convolve(qg, oms[s][m], oms[l][n])
                        want = oms[s][n].coeffs if m == l else 0.0
                        conv_res = max(conv_res, float(np.max(np.abs(cov - want))))
    qg.report.residuals["omega_pairing"] = pair_res
    qg.report.residuals["omega_convolution"] = conv_res
    # P relations and completeness
    P_res = 0.0
    total = LinearMap.zero(A, A)
    for a in qg.irreps:
        d = a.dim
        Ps = [[qg.P_map(a.index, k, s) for s in range(d)] for k in range(d)]
        for k in range(d):
            total = total + Ps[k][k]
        for b in qg.irreps:
            e = b.dim
            Qs = [[qg.P_map(b.index, k, s) for s in range(e)] for k in range(e)]
            for s in range(d):
                for m in range(d):
                    for l in range(e):
                        for n in range(e):
                            # the displayed product composes left to right:
                            # P_sm P_ln means "apply P_sm, then P_ln"
                            prod = Qs[l][n] @ Ps[s][m]
                            if a.index == b.index and m == l:
                                P_res = max(P_res, prod.defect(Ps[s][n]))
                            else:
                                P_res = max(
                                    P_res, max_col_op_norm(prod.matrix, A)
                                )
    qg.report.residuals["P_composition"] = P_res
    qg.report.residuals["P_completeness"] = total.defect(LinearMap.identity(A))
    # P^lambda projects onto C(G)_lambda
    proj_res = 0.0
    for a in qg.irreps:
        P = qg.spectral_projection(a.index)
        span = orthonormal_span([a.coef[:, i, j] for i in range(a.dim) for j in range(a.dim)])
        for p in range(A.total_dim):
            v = P.matrix[:, p]
            proj = span.T @ (span.conj() @ v)
            proj_res = max(proj_res, float(np.linalg.norm(v - proj)))
        for i in range(a.dim):
            for j in range(a.dim):
                v = a.coef[:, i, j]
                proj_res = max(proj_res, float(np.linalg.norm(P.matrix @ v - v)))
    qg.report.residuals["P_range"] = proj_res


def _convolve(qg: QuantumGroup, om1: Functional, om2: Functional) -> np.ndarray:
    """(om1 (x) om2) o Delta as a covector."""
    A = qg.algebra
    t = A.total_dim
    out = np.zeros(t, dtype=complex)
    for p in range(t):
        K = to_kron_coords(qg.comult(A.basis_element(p)), A, A).reshape(t, t)
        out[p] = om1.coeffs @ K @ om2.coeffs
    return out


def _compute_counit_antipode(qg: QuantumGroup, tol: float):
    A = qg.algebra
    M = qg.coefficient_matrix()
    Minv = np.linalg.inv(M)
    eps_u = []
    S_cols = []
    for co in qg.irreps:
        for i in range(co.dim):
            for j in range(co.dim):
                eps_u.append(1.0 if i == j else 0.0)
                S_cols.append(co.coefficient(A, j, i).star().coeffs)
    qg.counit = Functional(A, np.array(eps_u, dtype=complex) @ Minv)
    qg.antipode = LinearMap(A, A, np.stack(S_cols, axis=1) @ Minv)

    ident = LinearMap.identity(A)
    eps_l = slice_left(qg.counit, A, A) @ qg.comult
    eps_r = slice_right(qg.counit, A, A) @ qg.comult
    qg.report.residuals["counit"] = max(eps_l.defect(ident), eps_r.defect(ident))
    m = qg.multiplication_map()
    lhs = m @ (qg.antipode.tensor(ident) @ qg.comult)
    target = LinearMap(A, A, np.outer(A.unit().coeffs, qg.counit.coeffs))
    lhs2 = m @ (ident.tensor(qg.antipode) @ qg.comult)
    qg.report.residuals["antipode"] = max(lhs.defect(target), lhs2.defect(target))
    # counit must be a *-character
    char = certify_star_hom(
        LinearMap(A, FiniteCStar((1,), "C"), qg.counit.coeffs[None, :]), tol
    )
    qg.report.residuals["counit_character"] = max(
        char.residuals["multiplicativity"], char.residuals["star"]
    )


def _compute_fundamental_unitaries(qg: QuantumGroup, tol: float):
    A = qg.algebra
    t = A.total_dim
    Vc = qg.gns_coords
    Theta = np.zeros((t * t, t * t), dtype=complex)
    Vop = np.zeros((t * t, t * t), dtype=complex)
    fs = [AlgebraElement(A, qg.gns_basis[:, k]) for k in range(t)]
    for k in range(t):
        for l in range(t):
            zW = qg.comult(fs[l]) * tensor_elements(fs[k], A.unit())
            KW = to_kron_coords(zW, A, A).reshape(t, t)
            Theta[:, k * t + l] = (Vc @ KW @ Vc.T).ravel()
            zV = qg.comult(fs[k]) * tensor_elements(A.unit(), fs[l])
            KV = to_kron_coords(zV, A, A).reshape(t, t)
            Vop[:, k * t + l] = (Vc @ KV @ Vc.T).ravel()
    W = Theta.conj().T
    qg.W, qg.V = W, Vop
    eye = np.eye(t * t)
    qg.report.residuals["W_unitary"] = max(
        float(np.linalg.norm(W @ W.conj().T - eye, 2)),
        float(np.linalg.norm(W.conj().T @ W - eye, 2)),
    )
    qg.report.residuals["V_unitary"] = max(
        float(np.linalg.norm(Vop @ Vop.conj().T - eye, 2)),
        float(np.linalg.norm(Vop.conj().T @ Vop - eye, 2)),
    )
    qg.report.residuals["pentagon_W"] = _pentagon_residual(W, t)
    qg.report.residuals["pentagon_V"] = _pentagon_residual(Vop, t)
    # Delta(x) = W* (1 (x) x) W on C(G)
    conj_res = 0.0
    for p in range(t):
        x = A.basis_element(p)
        lhs = _gns_tensor_rep(qg, qg.comult(x))
        rhs = W.conj().T @ np.kron(np.eye(t), qg.gns_rep(x)) @ W
        conj_res = max(conj_res, float(np.linalg.norm(lhs - rhs, 2)))
    qg.report.residuals["W_implements_comult"] = conj_res


def _gns_tensor_rep(qg: QuantumGroup, w: AlgebraElement) -> np.ndarray:
    """(pi (x) pi)(w) on L^2(G) (x) L^2(G) for w in C(G) (x) C(G)."""
    A = qg.algebra
    t = A.total_dim
    K = to_kron_coords(w, A, A).reshape(t, t)
    reps = np.stack([qg.gns_rep(A.basis_element(p)) for p in range(t)])
    return np.einsum("pq,pab,qcd->acbd", K, reps, reps, optimize=True).reshape(
        t * t, t * t
    )


def op_leg(M: np.ndarray, legs: tuple[int, ...], dims: list[int]) -> np.ndarray:
    """Embed an operator acting on the tensor factors `legs` (1-based) of a
    Hilbert space tensor product with the given factor dimensions."""
    n = len(dims)
    legs0 = [p - 1 for p in legs]
    rest = [p for p in range(n) if p not in legs0]
    dl = int(np.prod([dims[p] for p in legs0]))
    dr = int(np.prod([dims[p] for p in rest])) if rest else 1
    M = np.asarray(M)
    big = np.kron(M, np.eye(dr, dtype=complex))
    # current factor order: legs0 + rest; permute to 0..n-1
    order = legs0 + rest
    inv = np.argsort(order)
    shaped = big.reshape([dims[p] for p in order] * 2)
    axes = list(inv) + [n + i for i in inv]
    return shaped.transpose(axes).reshape(int(np.prod(dims)), int(np.prod(dims)))


def _pentagon_residual(U: np.ndarray, t: int) -> float:
    dims = [t, t, t]
    U12 = op_leg(U, (1, 2), dims)
    U13 = op_leg(U, (1, 3), dims)
    U23 = op_leg(U, (2, 3), dims)
    return float(np.linalg.norm(U12 @ U13 @ U23 - U23 @ U12, 2))


# ---------------------------------------------------------------------------
# the dual quantum group
# ---------------------------------------------------------------------------

@dataclass
class DualQuantumGroup:
    base: QuantumGroup
    algebra: FiniteCStar
    omega_basis: list[Functional]
    comult_hat: LinearMap
    comult_check: LinearMap
    report: CertReport

    @property
    def comult_crossed(self) -> LinearMap:
        """The opposite comultiplication re-expressed in the crossed-adapted
        basis (conjugated by the blockwise transpose, matching
        crossed_embedding_ops)."""
        DU = self.algebra
        t = DU.total_dim
        tp = DU.star_permutation()  # transpose permutation (no conjugation)
        DUD = tensor_algebra(DU, DU)
        perm = tensor_permutation(DU, DU)
        i1, i2 = np.divmod(perm, t)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(DUD.total_dim)
        target = inv[tp[i1] * t + tp[i2]]
        M = self.comult_check.matrix[:, tp]
        out = np.zeros_like(M)
        out[target, :] = M
        return LinearMap(DU, DUD, out)

    def embedding_ops(self) -> list[np.ndarray]:
        """Images of the canonical basis under the representation on L^2(G),
        omega |x> = |(id (x) omega) Delta(x)>."""
        qg = self.base
        A = qg.algebra
        out = []
        for om in self.omega_basis:
            sr = slice_right(om, A, A)
            out.append(qg.gns_coords @ sr.matrix @ qg.comult.matrix @ qg.gns_basis)
        return out

    def crossed_embedding_ops(self) -> list[np.ndarray]:
        """The *-representation of c_0(G-hat) on L^2(G) adapted to crossed
        products: the basis unit e^lam_{sm} acts by
        |x> -> |(omega^lam_{ms} (x) id) Delta(x)>.

        First-leg slicing is an anti-representation of the convolution
        product, so the index transpose restores the matrix-unit rule; the
        resulting map is a faithful unital *-representation under which
        [(c_0(G-hat) (x) 1) alpha(A)] is closed."""
        qg = self.base
        A = qg.algebra
        out = []
        for lam, co in enumerate(qg.irreps):
            d = co.dim
            for s in range(d):
                for m in range(d):
                    om = self.basis_functional(lam, m, s)
                    sl = slice_left(om, A, A)
                    out.append(
                        qg.gns_coords @ sl.matrix @ qg.comult.matrix @ qg.gns_basis
                    )
        return out

    def basis_functional(self, lam: int, s: int, m: int) -> Functional:
        return self.omega_basis[self.algebra.basis_index(lam, s, m)]

    def as_quantum_group(self, opposite: bool = False, tol: float = DEFAULT_TOL,
                         seed: int = DEFAULT_SEED) -> QuantumGroup:
        comult = self.comult_check if opposite else self.comult_hat
        return from_hopf_data(self.algebra, comult, tol=tol, seed=seed)

    def check_group(self, tol: float = DEFAULT_TOL,
                    seed: int = DEFAULT_SEED) -> QuantumGroup:
        """The opposite dual in the crossed-adapted presentation; the carrier
        of dual actions on crossed products."""
        return from_hopf_data(self.algebra, self.comult_crossed, tol=tol, seed=seed)


def dual(qg: QuantumGroup, tol: float = DEFAULT_TOL) -> DualQuantumGroup:
    """c_0(G-hat): blocks sized by the irrep dimensions, basis the omega
    functionals, comultiplication dual to multiplication."""
    A = qg.algebra
    rep = CertReport("dual_quantum_group", tol=tol)
    blocks = tuple(co.dim for co in qg.irreps)
    DU = FiniteCStar(blocks, (A.label + "^" if A.label else "dual"))
    omegas = []
    for lam, co in enumerate(qg.irreps):
        for s in range(co.dim):
            for m in range(co.dim):
                omegas.append(qg.omega(lam, s, m))

    # rank-one correspondence: convolution matches matrix-unit products,
    # involution omega*(x) = conj(omega(S(x)*)) matches the adjoint
    conv_res, star_res = 0.0, 0.0
    t = DU.total_dim
    idx = []
    for lam, co in enumerate(qg.irreps):
        for s in range(co.dim):
            for m in range(co.dim):
                idx.append((lam, s, m))
    for p, (lam, s, m) in enumerate(idx):
        for q, (mu, l, n) in enumerate(idx):
            cov = _convolve(qg, omegas[p], omegas[q])
            want = np.zeros(A.total_dim, dtype=complex)
            if lam == mu and m == l:
                want = omegas[DU.basis_index(lam, s, n)].coeffs
            conv_res = max(conv_res, float(np.max(np.abs(cov - want))))
    for p, (lam, s, m) in enumerate(idx):
        # involution on the dual: omega^*(x) = conj(omega(S(x)^*))
        cov = np.zeros(A.total_dim, dtype=complex)
        for r in range(A.total_dim):
            x = A.basis_element(r)
            cov[r] = np.conj(omegas[p](qg.antipode(x.star())))
        want = omegas[DU.basis_index(lam, m, s)].coeffs
        star_res = max(star_res, float(np.max(np.abs(cov - want))))
    rep.residuals["rank_one_convolution"] = conv_res
    rep.residuals["rank_one_involution"] = star_res

    # comultiplication dual to multiplication, coordinates via biorthogonality
    M = qg.coefficient_matrix()
    DUD = tensor_algebra(DU, DU)
    perm = tensor_permutation(DU, DU)
    iA, iB = np.divmod(perm, t)
    hat = np.zeros((DUD.total_dim, t), dtype=complex)
    ucols = [AlgebraElement(A, M[:, k]) for k in range(t)]
    prods = [[(ucols[a] * ucols[b]) for b in range(t)] for a in range(t)]
    for p in range(t):
        vals = np.array(
            [[omegas[p](prods[a][b]) for b in range(t)] for a in range(t)]
        )
        hat[:, p] = vals[iA, iB]
    comult_hat = LinearMap(DU, DUD, hat)
    flip = factor_perm_matrix(DU)
    comult_check = LinearMap(DU, DUD, flip @ hat)

    # discrete-side conditions: coassociativity + the two density spans
    ident = LinearMap.identity(DU)
    coassoc = (comult_hat.tensor(ident) @ comult_hat).defect(
        ident.tensor(comult_hat) @ comult_hat
    )
    rep.residuals["dual_coassociativity"] = coassoc
    unit = DU.unit()
    basis = DU.basis()
    r1 = rank_of_span(
        [
            (tensor_elements(x, unit) * comult_hat(y)).coeffs
            for x in basis
            for y in basis
        ]
    )
    r2 = rank_of_span(
        [
            (tensor_elements(unit, x) * comult_hat(y)).coeffs
            for x in basis
            for y in basis
        ]
    )
    rep.extras["dual_density_ranks"] = [r1, r2]
    if r1 != DUD.total_dim or r2 != DUD.total_dim:
        raise HopfError(f"dual density spans {r1},{r2} < {DUD.total_dim}", rep)
    # embedding into B(L^2(G)) must be a faithful *-representation
    dqg = DualQuantumGroup(qg, DU, omegas, comult_hat, comult_check, rep)
    for name, ops in [
        ("embedding", dqg.embedding_ops()),
        ("crossed_embedding", dqg.crossed_embedding_ops()),
    ]:
        hom_res = 0.0
        for p in range(t):
            for q in range(t):
                z = basis[p] * basis[q]
                prod_op = sum(z.coeffs[r] * ops[r] for r in range(t))
                hom_res = max(
                    hom_res, float(np.linalg.norm(ops[p] @ ops[q] - prod_op, 2))
                )
            zs = basis[p].star()
            star_op = sum(zs.coeffs[r] * ops[r] for r in range(t))
            hom_res = max(hom_res, float(np.linalg.norm(ops[p].conj().T - star_op, 2)))
        rep.residuals[f"{name}_star_hom"] = hom_res
        rep.extras[f"{name}_rank"] = rank_of_span([o.ravel() for o in ops])
        if rep.extras[f"{name}_rank"] != t:
            raise HopfError(f"dual {name} is not injective", rep)
    rep.require()
    return dqg


def factor_perm_matrix(Q: FiniteCStar) -> np.ndarray:
    """Matrix of the flip automorphism on Q (x) Q coefficient space."""
    QQ = tensor_algebra(Q, Q)
    t = Q.total_dim
    perm = tensor_permutation(Q, Q)
    iA, iB = np.divmod(perm, t)
    flipped_kron = iB * t + iA
    inv = np.empty(QQ.total_dim, dtype=np.intp)
    inv[perm] = np.arange(QQ.total_dim)
    M = np.zeros((QQ.total_dim, QQ.total_dim))
    M[np.arange(QQ.total_dim), inv[flipped_kron]] = 1.0
    return M
