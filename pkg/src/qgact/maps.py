"""Linear maps between finite-dimensional C*-algebras and their certification.

Every certificate records the achieved residual, never just a boolean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    RANK_RTOL,
    AlgebraElement,
    AlgebraError,
    FiniteCStar,
    Functional,
    op_norm,
    rank_of_span,
    tensor_algebra,
    tensor_permutation,
    to_kron_coords,
)


class CertificationError(ValueError):
    def __init__(self, message: str, report: "CertReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class CertReport:
    """Named residuals of a verification run, with the tolerance used."""

    name: str
    residuals: dict[str, float] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    tol: float = DEFAULT_TOL

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def merge(self, other: "CertReport", prefix: str = "") -> "CertReport":
        for k, v in other.residuals.items():
            self.residuals[prefix + k] = v
        return self

    def require(self):
        if not self.passed:
            bad = {k: v for k, v in self.residuals.items() if v > self.tol}
            raise CertificationError(f"{self.name} failed: {bad}", self)
        return self

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "tol": self.tol,
            "passed": self.passed,
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
            "extras": _jsonable(self.extras),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@dataclass
class LinearMap:
    """Linear map stored as a dense matrix in the canonical bases."""

    domain: FiniteCStar
    codomain: FiniteCStar
    matrix: np.ndarray
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        expected = (self.codomain.total_dim, self.domain.total_dim)
        if self.matrix.shape != expected:
            raise AlgebraError(f"map matrix shape {self.matrix.shape} != {expected}")

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        if x.parent.block_dims != self.domain.block_dims:
            raise AlgebraError("element not in the domain")
        return AlgebraElement(self.codomain, self.matrix @ x.coeffs)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """self after other."""
        if other.codomain.block_dims != self.domain.block_dims:
            raise AlgebraError("composition carrier mismatch")
        return LinearMap(other.domain, self.codomain, self.matrix @ other.matrix)

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return self.compose(other)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.domain, self.codomain, self.matrix + other.matrix)

    def __mul__(self, scalar) -> "LinearMap":
        return LinearMap(self.domain, self.codomain, self.matrix * scalar)

    __rmul__ = __mul__

    @staticmethod
    def identity(A: FiniteCStar) -> "LinearMap":
        return LinearMap(A, A, np.eye(A.total_dim, dtype=complex))

    @staticmethod
    def zero(A: FiniteCStar, B: FiniteCStar) -> "LinearMap":
        return LinearMap(A, B, np.zeros((B.total_dim, A.total_dim), dtype=complex))

    def tensor(self, other: "LinearMap") -> "LinearMap":
        dom = tensor_algebra(self.domain, other.domain)
        cod = tensor_algebra(self.codomain, other.codomain)
        K = np.kron(self.matrix, other.matrix)
        p_out = tensor_permutation(self.codomain, other.codomain)
        p_in = tensor_permutation(self.domain, other.domain)
        return LinearMap(dom, cod, K[np.ix_(p_out, p_in)])

    def defect(self, other: "LinearMap") -> float:
        """Max operator-norm residual of (self - other) on the basis.

        Frobenius prescreen: coefficient 2-norms bound the operator norm, so
        exact SVDs run only on the worst columns."""
        D = self.matrix - other.matrix
        fro = np.linalg.norm(D, axis=0)
        top = float(fro.max()) if fro.size else 0.0
        if top < 1e-11:
            return top  # Frobenius already bounds the operator norm
        order = np.argsort(fro)[::-1]
        best = 0.0
        for p in order:
            if fro[p] <= best:
                break
            best = max(best, op_norm(AlgebraElement(self.codomain, D[:, p])))
        return best


def max_col_op_norm(M: np.ndarray, algebra: FiniteCStar) -> float:
    """Max operator norm over the columns of M (codomain coefficient vectors),
    with a Frobenius prescreen."""
    fro = np.linalg.norm(M, axis=0)
    top = float(fro.max()) if fro.size else 0.0
    if top < 1e-11:
        return top
    order = np.argsort(fro)[::-1]
    best = 0.0
    for p in order:
        if fro[p] <= best:
            break
        best = max(best, op_norm(AlgebraElement(algebra, M[:, p])))
    return best


def functional_as_map(phi: Functional) -> np.ndarray:
    return phi.coeffs[None, :]


def slice_left(omega: Functional, A: FiniteCStar, B: FiniteCStar) -> LinearMap:
    """(omega (x) id): A(x)B -> B.

    Every canonical basis element of A(x)B is a pure tensor of matrix units,
    so columns can be filled directly from the kron index decomposition."""
    AB = tensor_algebra(A, B)
    perm = tensor_permutation(A, B)
    iA, iB = np.divmod(perm, B.total_dim)
    M = np.zeros((B.total_dim, AB.total_dim), dtype=complex)
    M[iB, np.arange(AB.total_dim)] = omega.coeffs[iA]
    return LinearMap(AB, B, M)


def slice_right(omega: Functional, A: FiniteCStar, B: FiniteCStar) -> LinearMap:
    """(id (x) omega): A(x)B -> A."""
    AB = tensor_algebra(A, B)
    perm = tensor_permutation(A, B)
    iA, iB = np.divmod(perm, B.total_dim)
    M = np.zeros((A.total_dim, AB.total_dim), dtype=complex)
    M[iA, np.arange(AB.total_dim)] = omega.coeffs[iB]
    return LinearMap(AB, A, M)


def tensor_functionals(om1: Functional, om2: Functional) -> Functional:
    AB = tensor_algebra(om1.parent, om2.parent)
    perm = tensor_permutation(om1.parent, om2.parent)
    kron = np.kron(om1.coeffs, om2.coeffs)
    return Functional(AB, kron[perm])


def left_multiplication(a: AlgebraElement) -> LinearMap:
    A = a.parent
    M = np.zeros((A.total_dim, A.total_dim), dtype=complex)
    for b, d in enumerate(A.block_dims):
        o = A.block_offsets[b]
        blk = a.blocks()[b]
        M[o : o + d * d, o : o + d * d] = np.kron(blk, np.eye(d, dtype=complex))
    return LinearMap(A, A, M)


def right_multiplication(a: AlgebraElement) -> LinearMap:
    A = a.parent
    M = np.zeros((A.total_dim, A.total_dim), dtype=complex)
    for b, d in enumerate(A.block_dims):
        o = A.block_offsets[b]
        blk = a.blocks()[b]
        M[o : o + d * d, o : o + d * d] = np.kron(np.eye(d, dtype=complex), blk.T)
    return LinearMap(A, A, M)


def star_conjugate_map(phi: LinearMap) -> LinearMap:
    """The map x -> phi(x*)*; star permutations are involutions."""
    sd = phi.domain.star_permutation()
    sc = phi.codomain.star_permutation()
    return LinearMap(
        phi.domain, phi.codomain, np.conj(phi.matrix)[np.ix_(sc, sd)]
    )


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def _image_blocks(M: np.ndarray, B: FiniteCStar) -> list[np.ndarray]:
    """Columns of M are codomain coefficient vectors; return per-block stacks
    of shape (ncols, d, d)."""
    out = []
    for b, d in enumerate(B.block_dims):
        o = B.block_offsets[b]
        out.append(np.ascontiguousarray(M[o : o + d * d, :].T.reshape(-1, d, d)))
    return out


def _pairwise_product_defect(phi: LinearMap) -> tuple[float, float]:
    """Exact max residual of phi(xy) - phi(x)phi(y) over all canonical basis
    pairs, in operator norm.  Batched per codomain block with a Frobenius
    prescreen (op norm <= Frobenius norm) so SVDs run only on the worst pairs."""
    A, B = phi.domain, phi.codomain
    t = A.total_dim
    img_blocks = _image_blocks(phi.matrix, B)
    # expected images phi(b_p b_q): basis products are delta-pattern matrix units
    exp_col = -np.ones((t, t), dtype=np.intp)
    for b, d in enumerate(A.block_dims):
        o = A.block_offsets[b]
        for i in range(d):
            for j in range(d):
                p = o + i * d + j
                for k in range(d):
                    exp_col[p, o + j * d + k] = o + i * d + k
    fro2 = np.zeros((t, t))
    chunk = max(1, int(2**22 / max(1, t * max(B.block_dims) ** 2)))
    for blk, d in zip(img_blocks, B.block_dims):
        for s in range(0, t, chunk):
            e = min(t, s + chunk)
            P = np.einsum("aij,bjk->abik", blk[s:e], blk, optimize=True)
            E = np.zeros_like(P)
            cols = exp_col[s:e]
            rows_i, rows_j = np.nonzero(cols >= 0)
            E[rows_i, rows_j] = blk[cols[rows_i, rows_j]]
            fro2[s:e] += (np.abs(P - E) ** 2).reshape(e - s, t, -1).sum(axis=2)
    fro = np.sqrt(fro2)
    best = 0.0
    order = np.argsort(fro.ravel())[::-1]
    for flat in order[: min(64, order.size)]:
        p, q = divmod(int(flat), t)
        if fro[p, q] <= best:
            break
        x = AlgebraElement(B, phi.matrix[:, p])
        y = AlgebraElement(B, phi.matrix[:, q])
        c = exp_col[p, q]
        expect = AlgebraElement(B, phi.matrix[:, c]) if c >= 0 else B.zero()
        best = max(best, op_norm(x * y - expect))
    return best, float(fro.max())


def certify_star_hom(phi: LinearMap, tol: float = DEFAULT_TOL) -> CertReport:
    """Multiplicativity / star residuals over the full canonical basis, plus
    injectivity, unitality and nondegeneracy evidence."""
    A, B = phi.domain, phi.codomain
    rep = CertReport("star_hom", tol=tol)
    mult, _ = _pairwise_product_defect(phi)
    rep.residuals["multiplicativity"] = mult
    rep.residuals["star"] = star_conjugate_map(phi).defect(phi)
    smin = float(np.linalg.svd(phi.matrix, compute_uv=False)[-1]) if A.total_dim else 0.0
    rep.extras["min_singular_value"] = smin
    rep.extras["injective"] = bool(smin > tol)
    unit_res = op_norm(phi(A.unit()) - B.unit())
    rep.extras["unital_residual"] = unit_res
    rep.extras["unital"] = bool(unit_res <= tol)
    if unit_res <= tol:
        rep.extras["nondegenerate"] = True
        rep.extras["nondegenerate_rank"] = B.total_dim
        rep.extras["nondegeneracy_source"] = "unital"
    elif A.total_dim * B.total_dim <= 20000:
        prods = [
            (phi(x) * y).coeffs for x in A.basis() for y in B.basis()
        ]
        r = rank_of_span(prods)
        rep.extras["nondegenerate_rank"] = r
        rep.extras["nondegenerate"] = bool(r == B.total_dim)
        rep.extras["nondegeneracy_source"] = "rank"
    else:
        rep.extras["nondegenerate"] = False
        rep.extras["nondegeneracy_source"] = "not-unital (rank test skipped: size)"
    return rep


def choi_matrices(phi: LinearMap) -> list[np.ndarray]:
    """Per-block Choi matrices; phi is cp iff all are PSD."""
    A, B = phi.domain, phi.codomain
    n = B.rep_dim
    out = []
    for b, d in enumerate(A.block_dims):
        C = np.zeros((d * n, d * n), dtype=complex)
        for i in range(d):
            for j in range(d):
                img = phi(A.basis_element(A.basis_index(b, i, j))).to_operator()
                C[i * n : (i + 1) * n, j * n : (j + 1) * n] = img
        out.append(C)
    return out


def certify_cp(phi: LinearMap, tol: float = DEFAULT_TOL) -> CertReport:
    """Choi criterion: min eigenvalue per block; contractivity data."""
    rep = CertReport("completely_positive", tol=tol)
    min_eig = 0.0
    for C in choi_matrices(phi):
        H = (C + C.conj().T) / 2
        herm_res = float(np.max(np.abs(C - C.conj().T)))
        min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(H))) - herm_res)
    rep.residuals["choi_negativity"] = max(0.0, -min_eig)
    rep.extras["min_choi_eigenvalue"] = min_eig
    norm_at_unit = op_norm(phi(phi.domain.unit()))
    rep.extras["norm_at_unit"] = norm_at_unit
    # for cp maps the cb norm equals ||phi(1)||
    rep.extras["contractive"] = bool(
        min_eig >= -tol and norm_at_unit <= 1.0 + tol
    )
    return rep


def certify_order_zero(
    phi: LinearMap, tol: float = DEFAULT_TOL, cp_report: CertReport | None = None
) -> CertReport:
    """Order zero certification: requires cp, then checks the identity
    phi(a)phi(bc) = phi(ab)phi(c) on all basis triples and orthogonality
    preservation on positive parts of hermitian basis combinations."""
    cp = cp_report if cp_report is not None else certify_cp(phi, tol)
    if not cp.passed:
        raise CertificationError("order zero requires a certified cp map", cp)
    rep = CertReport("order_zero", tol=tol)
    rep.residuals["choi_negativity"] = cp.residuals["choi_negativity"]
    A, B = phi.domain, phi.codomain
    t = A.total_dim
    # images of all basis products phi(b_p b_q): delta-pattern of matrix units
    prod_cols = np.zeros((B.total_dim, t * t), dtype=complex)
    pair_col = -np.ones((t, t), dtype=np.intp)
    for b, d in enumerate(A.block_dims):
        o = A.block_offsets[b]
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    pair_col[o + i * d + j, o + j * d + k] = o + i * d + k
    rows, cols = np.nonzero(pair_col >= 0)
    prod_cols[:, rows * t + cols] = phi.matrix[:, pair_col[rows, cols]]
    img_blocks = _image_blocks(phi.matrix, B)
    prod_blocks = _image_blocks(prod_cols, B)
    # Frobenius residuals per triple (an upper bound on op norm, so sound for
    # the <= tol verdict); the worst triple is re-measured in exact op norm.
    fro_max = 0.0
    worst = None
    fro_acc = None
    for blk, pblk in zip(img_blocks, prod_blocks):
        d = blk.shape[1]
        pb = pblk.reshape(t, t, d, d)
        for i in range(t):
            lhs = np.einsum("jk,abkl->abjl", blk[i], pb, optimize=True)
            rhs = np.einsum("ajk,bkl->abjl", pb[i], blk, optimize=True)
            f2 = (np.abs(lhs - rhs) ** 2).reshape(t, t, -1).sum(axis=2)
            if fro_acc is None:
                fro_acc = np.zeros((t, t, t))
            fro_acc[i] += f2
    fro = np.sqrt(fro_acc) if fro_acc is not None else np.zeros((t, t, t))
    fro_max = float(fro.max())
    exact = 0.0
    if fro_max > 0:
        i, j, k = np.unravel_index(int(np.argmax(fro)), fro.shape)
        bi = AlgebraElement(B, phi.matrix[:, i])
        bk = AlgebraElement(B, phi.matrix[:, k])
        pjk = AlgebraElement(B, prod_cols[:, j * t + k])
        pij = AlgebraElement(B, prod_cols[:, i * t + j])
        exact = op_norm(bi * pjk - pij * bk)
    rep.residuals["order_zero_identity"] = fro_max
    rep.extras["worst_triple_op_norm"] = exact
    orth = 0.0
    for p in range(t):
        h = A.basis_element(p) + A.basis_element(p).star()
        pos, neg = _positive_parts(h)
        if op_norm(pos) > tol and op_norm(neg) > tol:
            orth = max(orth, op_norm(phi(pos) * phi(neg)))
    rep.residuals["orthogonality"] = orth
    return rep


def _positive_parts(h: AlgebraElement):
    pos_blocks, neg_blocks = [], []
    for blk in h.blocks():
        H = (blk + blk.conj().T) / 2
        w, v = np.linalg.eigh(H)
        pos_blocks.append((v * np.clip(w, 0, None)) @ v.conj().T)
        neg_blocks.append((v * np.clip(-w, 0, None)) @ v.conj().T)
    return h.parent.from_blocks(pos_blocks), h.parent.from_blocks(neg_blocks)


def unitization(A: FiniteCStar) -> tuple[FiniteCStar, LinearMap]:
    """The algebra A (+) C with (a,l)(b,m) = (ab+lb+ma, lm), realized as the
    unital subalgebra {a + l 1} of A (+) C; returns the embedding of A."""
    ext = FiniteCStar(A.block_dims + (1,), label=(A.label + "~") if A.label else "~")
    M = np.zeros((ext.total_dim, A.total_dim), dtype=complex)
    M[: A.total_dim, :] = np.eye(A.total_dim)
    return ext, LinearMap(A, ext, M)
