"""Identify the block structure of a concrete operator algebra.

Given a spanning family of matrices closed under products and adjoints, this
recovers the abstract direct-sum-of-matrix-blocks structure together with an
explicit system of matrix units, by center analysis and random self-adjoint
splitting.  The same machinery decomposes corepresentation commutants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import FiniteCStar, orthonormal_span, rank_of_span, RANK_RTOL
from .maps import CertificationError, CertReport, LinearMap

MAX_RESEEDS = 8
EIGENGAP = 1e-6


def commutant(ops: list[np.ndarray]) -> list[np.ndarray]:
    """Basis of {T : T M = M T for all M in ops}."""
    n = ops[0].shape[0]
    rows = []
    eye = np.eye(n)
    for M in ops:
        # vec(TM - MT) with row-major vec: (I (x) M^T - M (x) I) vec(T)
        rows.append(np.kron(eye, M.T) - np.kron(M, eye))
    A = np.vstack(rows)
    _, s, vh = np.linalg.svd(A, full_matrices=False)
    tolv = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 1.0)
    null = vh[np.sum(s > max(tolv, 1e-12)) :].conj()
    return [v.reshape(n, n) for v in null]


def center_in_span(basis: list[np.ndarray]) -> list[np.ndarray]:
    """Basis of {z in span(basis) : z M = M z for all M in basis}, solved in
    span coordinates (cheap even for large ambient dimension).

    Accumulates the normal matrix of the commutation constraints generator by
    generator, so memory stays O(k * n^2)."""
    k = len(basis)
    N = np.zeros((k, k), dtype=complex)
    stack = np.stack(basis)  # (k, n, n)
    for M in basis:
        C = (stack @ M - M @ stack).reshape(k, -1)  # rows: comm(B_b, M)
        N += C.conj() @ C.T
    N = (N + N.conj().T) / 2
    w, v = np.linalg.eigh(N)
    wmax = max(float(w[-1]), 1.0)
    null = [v[:, i] for i in range(k) if w[i] <= 1e-14 * wmax]
    return [np.tensordot(c, stack, axes=(0, 0)) for c in null]


def random_hermitian_in_span(
    basis: list[np.ndarray], rng: np.random.Generator
) -> np.ndarray:
    coeffs = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    M = sum(c * b for c, b in zip(coeffs, basis))
    return (M + M.conj().T) / 2


def split_eigenspaces(H: np.ndarray, gap: float = EIGENGAP):
    """Group eigenvalues of a hermitian matrix; returns list of column bases.

    Each basis has its column phases normalized (first sizable entry real
    positive) for run-to-run determinism."""
    w, v = np.linalg.eigh(H)
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            groups.append((start, i))
            start = i
    mingap = min(
        (w[b] - w[a2 - 1] for (a, a2), (b, b2) in zip(groups, groups[1:])),
        default=np.inf,
    )
    bases = []
    for a, b in groups:
        Q = v[:, a:b].copy()
        for c in range(Q.shape[1]):
            col = Q[:, c]
            nz = np.argmax(np.abs(col) > 1e-8)
            ph = col[nz] / abs(col[nz])
            Q[:, c] = col / ph
        bases.append(Q)
    return bases, float(mingap)


@dataclass
class ConcreteAlgebra:
    """A concrete operator algebra with identified abstract structure.

    ``units[b][i][j]`` is the concrete matrix-unit operator for block b; the
    abstract carrier's canonical basis maps to these under ``iso``."""

    structure: FiniteCStar
    units: list  # nested: per block, d x d matrices
    span_basis: np.ndarray  # orthonormal rows spanning the algebra (vectorized)
    ambient_dim: int
    report: CertReport

    def iso(self, x) -> np.ndarray:
        """Abstract element (AlgebraElement or coeff vector) -> concrete matrix."""
        coeffs = getattr(x, "coeffs", x)
        M = np.zeros((self.ambient_dim, self.ambient_dim), dtype=complex)
        p = 0
        for b, d in enumerate(self.structure.block_dims):
            for i in range(d):
                for j in range(d):
                    M += coeffs[p] * self.units[b][i][j]
                    p += 1
        return M

    def _unit_columns(self):
        if not hasattr(self, "_ucols"):
            cols = []
            for b, d in enumerate(self.structure.block_dims):
                for i in range(d):
                    for j in range(d):
                        cols.append(self.units[b][i][j].ravel())
            self._ucols = np.stack(cols, axis=1)
            self._ucols_pinv = np.linalg.pinv(self._ucols)
        return self._ucols, self._ucols_pinv

    def coords(self, M: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
        """Concrete matrix -> abstract coefficient vector (least squares,
        cached pseudo-inverse)."""
        A, Ap = self._unit_columns()
        sol = Ap @ M.ravel()
        resid = float(np.linalg.norm(A @ sol - M.ravel()))
        if resid > rtol * max(1.0, float(np.linalg.norm(M))):
            raise CertificationError(
                f"matrix is not in the identified algebra (residual {resid:.2e})"
            )
        return sol


def _corner_matrix_units(
    corner_ops: list[np.ndarray], P: np.ndarray, rng: np.random.Generator
):
    """Matrix units for a factor p S p acting on range(P) (P = basis columns)."""
    comp = [P.conj().T @ M @ P for M in corner_ops]
    span = orthonormal_span([M.ravel() for M in comp])
    n2 = span.shape[0]
    n = int(round(np.sqrt(n2)))
    if n * n != n2:
        raise CertificationError(f"corner dimension {n2} is not a square")
    basis = [v.reshape(comp[0].shape) for v in span]
    for attempt in range(MAX_RESEEDS):
        H = random_hermitian_in_span(basis, rng)
        eig_bases, gap = split_eigenspaces(H)
        if len(eig_bases) == n and gap > EIGENGAP:
            break
    else:
        raise CertificationError("could not split factor into minimal projections")
    # spectral projections of H are the diagonal matrix units e_ii
    e = [Q @ Q.conj().T for Q in eig_bases]
    # partial isometries e_ii -> e_11 inside the algebra
    units = [[None] * n for _ in range(n)]
    span_rows = span
    m = comp[0].shape[0]

    def project_to_algebra(M):
        v = span_rows.conj() @ M.ravel()
        return (v @ span_rows).reshape(m, m)

    v1 = [None] * n
    v1[0] = e[0]
    for i in range(1, n):
        S = project_to_algebra(e[i] @ random_hermitian_in_span(basis, rng) @ e[0])
        # polar part: S = v |S|; v is a partial isometry e_11 -> e_ii
        u, s, vh = np.linalg.svd(S)
        r = int(np.sum(s > 1e-8 * s[0])) if s.size and s[0] > 0 else 0
        if r == 0:
            raise CertificationError("degenerate partial isometry in factor")
        v1[i] = u[:, :r] @ vh[:r]
    for i in range(n):
        for j in range(n):
            units[i][j] = v1[i] @ v1[j].conj().T
    # push back to the ambient space
    return [[P @ units[i][j] @ P.conj().T for j in range(n)] for i in range(n)]


def identify_structure(
    ops: list[np.ndarray],
    seed: int = 7,
    tol: float = 1e-8,
    label: str = "",
    closure_generators: list[np.ndarray] | None = None,
) -> ConcreteAlgebra:
    """Identify span(ops) as a FiniteCStar with explicit matrix units.

    ``ops`` must span a unital *-subalgebra of the ambient matrix algebra;
    closure under products/adjoints is certified (via ``closure_generators``
    when the full pairwise product set would be too large).  Blocks are
    sorted by size, then by a deterministic fingerprint.
    """
    rng = np.random.default_rng(seed)
    m = ops[0].shape[0]
    span = orthonormal_span([M.ravel() for M in ops])
    dim = span.shape[0]
    basis = [v.reshape(m, m) for v in span]
    rep = CertReport("identify_structure", tol=tol)

    def span_residual(M):
        v = M.ravel()
        proj = (span.conj() @ v) @ span
        return float(np.linalg.norm(v - proj))

    rep.residuals["adjoint_closure"] = max(
        span_residual(M.conj().T) for M in basis
    )
    gens = closure_generators if closure_generators is not None else basis
    if len(basis) * len(gens) <= 20000:
        rep.residuals["product_closure"] = max(
            span_residual(B @ g) for B in basis for g in gens
        )
    else:
        sel = basis[:: max(1, len(basis) // 64)]
        rep.residuals["product_closure"] = max(
            span_residual(B @ g) for B in sel for g in gens
        )
    # unit of the algebra: solve for the identity element of the span
    unit = _span_unit(basis, span, m)
    rep.residuals["unit_in_span"] = span_residual(unit)

    # when the algebra unit is a proper projection, compress everything to its
    # support so eigen-splitting never sees the complement kernel
    support = None
    if float(np.linalg.norm(unit - np.eye(m))) > 1e-9:
        Hu = (unit + unit.conj().T) / 2
        w, vv = np.linalg.eigh(Hu)
        support = vv[:, w > 0.5]
        basis = [support.conj().T @ M @ support for M in basis]
        m_small = support.shape[1]
        span_small = orthonormal_span([M.ravel() for M in basis])
        span = span_small
        m = m_small
        unit = _span_unit(basis, span, m)

    center_basis = center_in_span(basis)
    zdim = len(center_basis)
    rep.extras["center_dim"] = zdim

    for attempt in range(MAX_RESEEDS):
        if zdim == 1:
            projections = [unit]
            break
        Z = random_hermitian_in_span(center_basis, rng)
        eig_bases, gap = split_eigenspaces(Z)
        if len(eig_bases) == zdim and gap > EIGENGAP:
            projections = [Q @ Q.conj().T for Q in eig_bases]
            break
    else:
        raise CertificationError("center splitting failed after reseeds")

    blocks = []
    for P in projections:
        w, v = np.linalg.eigh((P + P.conj().T) / 2)
        cols = v[:, w > 0.5]
        corner = [M for M in basis]
        units = _corner_matrix_units(corner, cols, rng)
        blocks.append(units)
    sizes = [len(u) for u in blocks]
    # canonical order: by block size, then by fingerprint of the block trace
    def fingerprint(units):
        tr = sum(np.trace(units[i][i]).real for i in range(len(units)))
        return round(tr, 6)

    order = sorted(range(len(blocks)), key=lambda b: (sizes[b], fingerprint(blocks[b])))
    blocks = [blocks[b] for b in order]
    sizes = [sizes[b] for b in order]
    structure = FiniteCStar(tuple(sizes), label)
    if structure.total_dim != dim:
        raise CertificationError(
            f"identified structure dim {structure.total_dim} != span dim {dim}"
        )
    if support is not None:
        blocks = [
            [[support @ U @ support.conj().T for U in row] for row in unit_blk]
            for unit_blk in blocks
        ]
        m = ops[0].shape[0]
        span = orthonormal_span([M.ravel() for M in ops])
    alg = ConcreteAlgebra(structure, blocks, span, m, rep)
    rep.merge(_certify_units(alg, tol))
    rep.require()
    return alg


def _subspace_intersection(R1: np.ndarray, R2: np.ndarray, tol: float = 1e-8):
    """Rows spanning the intersection of two row-span subspaces
    (inputs must have orthonormal rows)."""
    if R1.shape[0] == 0 or R2.shape[0] == 0:
        return np.zeros((0, R1.shape[1]), dtype=complex)
    M = R1 @ R2.conj().T
    u, s, _ = np.linalg.svd(M)
    take = s > 1 - tol
    return u[:, : len(s)][:, take].conj().T @ R1


def _span_unit(basis, span, m):
    """Element u of the span with u b = b for all basis b (the algebra unit).

    Fast path: when the ambient identity lies in the span it is the unit.
    Otherwise solve against a small generating subset and verify against the
    full basis."""
    stack = np.stack(basis)
    eye = np.eye(m, dtype=complex)
    proj = (span.conj() @ eye.ravel()) @ span
    u = proj.reshape(m, m)
    if float(np.linalg.norm(np.matmul(u, stack) - stack)) < 1e-9 * max(
        1.0, float(np.linalg.norm(stack))
    ):
        return u
    k = len(basis)
    sel = basis[:: max(1, k // 12)]
    rows = [np.stack([(Bk @ B).ravel() for Bk in basis], axis=1) for B in sel]
    rhs = [B.ravel() for B in sel]
    sol, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
    u = np.tensordot(sol, stack, axes=(0, 0))
    resid = float(np.linalg.norm(np.matmul(u, stack) - stack))
    if resid > 1e-7 * max(1.0, float(np.linalg.norm(stack))):
        raise CertificationError(f"span has no left unit (residual {resid:.2e})")
    return u


def _certify_units(alg: ConcreteAlgebra, tol: float) -> CertReport:
    rep = CertReport("matrix_units", tol=tol)
    res = 0.0
    star = 0.0
    for b, d in enumerate(alg.structure.block_dims):
        U = alg.units[b]
        for i in range(d):
            for j in range(d):
                star = max(star, float(np.linalg.norm(U[i][j].conj().T - U[j][i])))
                for k in range(d):
                    for l in range(d):
                        prod = U[i][j] @ U[k][l]
                        expect = U[i][l] if j == k else 0 * prod
                        res = max(res, float(np.linalg.norm(prod - expect)))
        # cross-block orthogonality
        for b2 in range(b + 1, alg.structure.num_blocks):
            res = max(
                res,
                float(np.linalg.norm(U[0][0] @ alg.units[b2][0][0])),
            )
    rep.residuals["unit_products"] = res
    rep.residuals["unit_star"] = star
    # the units must span the algebra
    vecs = [
        alg.units[b][i][j].ravel()
        for b, d in enumerate(alg.structure.block_dims)
        for i in range(d)
        for j in range(d)
    ]
    r = rank_of_span(vecs)
    rep.extras["units_rank"] = r
    rep.residuals["units_span"] = 0.0 if r == alg.structure.total_dim else 1.0
    return rep
