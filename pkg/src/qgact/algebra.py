"""Finite-dimensional C*-algebras as direct sums of matrix blocks.

An algebra is a list of full matrix blocks.  The canonical basis is the
family of matrix units enumerated block-major, row-major, so a coefficient
vector is just the concatenation of the row-major vectorizations of the
blocks.  Tensor products use the Kronecker convention with the left factor
on the slow index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_TOL = 1e-9
RANK_RTOL = 1e-7


class AlgebraError(ValueError):
    pass


@lru_cache(maxsize=None)
def _block_offsets(dims: tuple[int, ...]) -> tuple[int, ...]:
    offs, o = [], 0
    for d in dims:
        offs.append(o)
        o += d * d
    return tuple(offs)


@lru_cache(maxsize=None)
def _rep_offsets(dims: tuple[int, ...]) -> tuple[int, ...]:
    offs, o = [], 0
    for d in dims:
        offs.append(o)
        o += d
    return tuple(offs)


@lru_cache(maxsize=None)
def _star_permutation(dims: tuple[int, ...]) -> np.ndarray:
    total = sum(d * d for d in dims)
    perm = np.empty(total, dtype=np.intp)
    offs = _block_offsets(dims)
    for b, d in enumerate(dims):
        o = offs[b]
        idx = np.arange(d * d).reshape(d, d)
        perm[o : o + d * d] = o + idx.T.ravel()
    return perm


@dataclass(frozen=True)
class FiniteCStar:
    """Direct sum of full matrix algebras, with a fixed matrix-unit basis."""

    block_dims: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if not self.block_dims:
            raise AlgebraError("block_dims must be nonempty")
        if any(d < 1 for d in self.block_dims):
            raise AlgebraError("block dimensions must be positive")
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))

    @property
    def total_dim(self) -> int:
        return sum(d * d for d in self.block_dims)

    @property
    def rep_dim(self) -> int:
        """Dimension of the canonical block representation Hilbert space."""
        return sum(self.block_dims)

    @property
    def num_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def block_offsets(self) -> tuple[int, ...]:
        return _block_offsets(self.block_dims)

    @property
    def rep_offsets(self) -> tuple[int, ...]:
        return _rep_offsets(self.block_dims)

    def basis_index(self, block: int, i: int, j: int) -> int:
        return self.block_offsets[block] + i * self.block_dims[block] + j

    def unit(self) -> "AlgebraElement":
        c = np.zeros(self.total_dim, dtype=complex)
        for b, d in enumerate(self.block_dims):
            o = self.block_offsets[b]
            c[o : o + d * d] = np.eye(d, dtype=complex).ravel()
        return AlgebraElement(self, c)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros(self.total_dim, dtype=complex))

    def basis_element(self, p: int) -> "AlgebraElement":
        c = np.zeros(self.total_dim, dtype=complex)
        c[p] = 1.0
        return AlgebraElement(self, c)

    def basis(self):
        return [self.basis_element(p) for p in range(self.total_dim)]

    def element(self, coeffs) -> "AlgebraElement":
        return AlgebraElement(self, np.asarray(coeffs, dtype=complex))

    def from_blocks(self, blocks) -> "AlgebraElement":
        if len(blocks) != self.num_blocks:
            raise AlgebraError("wrong number of blocks")
        parts = []
        for b, d in zip(blocks, self.block_dims):
            b = np.asarray(b, dtype=complex)
            if b.shape != (d, d):
                raise AlgebraError(f"block shape {b.shape} != ({d},{d})")
            parts.append(b.ravel())
        return AlgebraElement(self, np.concatenate(parts))

    def star_permutation(self) -> np.ndarray:
        """Index permutation p such that coeffs(x*) = conj(coeffs(x))[p]."""
        return _star_permutation(self.block_dims)

    def same_structure(self, other: "FiniteCStar") -> bool:
        return self.block_dims == other.block_dims

    def __repr__(self):
        lbl = f" {self.label!r}" if self.label else ""
        return f"FiniteCStar({list(self.block_dims)}{lbl})"


@dataclass
class AlgebraElement:
    parent: FiniteCStar
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.parent.total_dim,):
            raise AlgebraError(
                f"coefficient vector length {self.coeffs.shape} != {self.parent.total_dim}"
            )
        if not np.all(np.isfinite(self.coeffs.view(float))):
            raise AlgebraError("non-finite coefficients")

    def blocks(self) -> list[np.ndarray]:
        out = []
        for b, d in enumerate(self.parent.block_dims):
            o = self.parent.block_offsets[b]
            out.append(self.coeffs[o : o + d * d].reshape(d, d))
        return out

    def to_operator(self) -> np.ndarray:
        """Block-diagonal matrix of the canonical representation."""
        n = self.parent.rep_dim
        M = np.zeros((n, n), dtype=complex)
        for blk, o, d in zip(
            self.blocks(), self.parent.rep_offsets, self.parent.block_dims
        ):
            M[o : o + d, o : o + d] = blk
        return M

    def _check(self, other):
        if self.parent.block_dims != other.parent.block_dims:
            raise AlgebraError("mismatched carriers")

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, self.coeffs - other.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.parent, self.coeffs * other)
        self._check(other)
        out = [x @ y for x, y in zip(self.blocks(), other.blocks())]
        return self.parent.from_blocks(out)

    def __rmul__(self, scalar):
        return AlgebraElement(self.parent, self.coeffs * scalar)

    def __neg__(self):
        return AlgebraElement(self.parent, -self.coeffs)

    def star(self) -> "AlgebraElement":
        return AlgebraElement(
            self.parent, np.conj(self.coeffs)[self.parent.star_permutation()]
        )

    def norm(self) -> float:
        return op_norm(self)

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        return float(np.max(np.abs((self.star() - self).coeffs))) <= tol

    def __repr__(self):
        return f"AlgebraElement({self.parent!r}, {np.round(self.coeffs, 6)!r})"


@dataclass
class Functional:
    """Linear functional on a FiniteCStar, stored as a covector."""

    parent: FiniteCStar
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.parent.total_dim,):
            raise AlgebraError("covector length mismatch")

    def __call__(self, x: AlgebraElement) -> complex:
        return complex(self.coeffs @ x.coeffs)

    def density_matrices(self) -> list[np.ndarray]:
        """Per-block H with phi(x) = sum_b Tr(H_b x_b)."""
        out = []
        for b, d in enumerate(self.parent.block_dims):
            o = self.parent.block_offsets[b]
            out.append(self.coeffs[o : o + d * d].reshape(d, d).T)
        return out

    def is_positive(self, tol: float = DEFAULT_TOL) -> bool:
        return all(
            np.min(np.linalg.eigvalsh((H + H.conj().T) / 2)) >= -tol
            and np.max(np.abs(H - H.conj().T)) <= tol
            for H in self.density_matrices()
        )


def op_norm(x: AlgebraElement) -> float:
    """Largest singular value over the blocks (the C*-norm)."""
    return max(
        (float(np.linalg.norm(b, 2)) for b in x.blocks()),
        default=0.0,
    )


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _tensor_cached(dims_a: tuple[int, ...], dims_b: tuple[int, ...]):
    """Block dims and kron->coeff index permutation for A (x) B."""
    blocks = []
    for da in dims_a:
        for db in dims_b:
            blocks.append(da * db)
    tot_a = sum(d * d for d in dims_a)
    tot_b = sum(d * d for d in dims_b)
    tot = sum(d * d for d in blocks)
    perm = np.empty(tot, dtype=np.intp)
    offs_a, o = [], 0
    for d in dims_a:
        offs_a.append(o)
        o += d * d
    offs_b, o = [], 0
    for d in dims_b:
        offs_b.append(o)
        o += d * d
    pos = 0
    for a, da in enumerate(dims_a):
        for b, db in enumerate(dims_b):
            d = da * db
            i = np.arange(da)[:, None, None, None]
            k = np.arange(db)[None, :, None, None]
            j = np.arange(da)[None, None, :, None]
            l = np.arange(db)[None, None, None, :]
            kron_idx = (offs_a[a] + i * da + j) * tot_b + (offs_b[b] + k * db + l)
            # product block entry ((i,k),(j,l)), row-major
            prod_local = (i * db + k) * d + (j * db + l)
            perm[pos + prod_local.ravel()] = kron_idx.ravel()
            pos += d * d
    return tuple(blocks), perm


def tensor_algebra(A: FiniteCStar, B: FiniteCStar) -> FiniteCStar:
    blocks, _ = _tensor_cached(A.block_dims, B.block_dims)
    label = f"{A.label}(x){B.label}" if (A.label or B.label) else ""
    return FiniteCStar(blocks, label)


def tensor_permutation(A: FiniteCStar, B: FiniteCStar) -> np.ndarray:
    """perm with coeffs(x (x) y) = kron(coeffs x, coeffs y)[perm]."""
    _, perm = _tensor_cached(A.block_dims, B.block_dims)
    return perm


def tensor_elements(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    AB = tensor_algebra(x.parent, y.parent)
    kron = np.kron(x.coeffs, y.coeffs)
    return AlgebraElement(AB, kron[tensor_permutation(x.parent, y.parent)])


def to_kron_coords(x: AlgebraElement, A: FiniteCStar, B: FiniteCStar) -> np.ndarray:
    """Coefficients of x in A(x)B rewritten on the kron index grid (tA*tB,)."""
    perm = tensor_permutation(A, B)
    out = np.empty(x.parent.total_dim, dtype=complex)
    out[perm] = x.coeffs
    return out


def from_kron_coords(v: np.ndarray, A: FiniteCStar, B: FiniteCStar) -> AlgebraElement:
    AB = tensor_algebra(A, B)
    return AlgebraElement(AB, np.asarray(v, dtype=complex)[tensor_permutation(A, B)])


def tensor_chain(carriers: list[FiniteCStar]) -> FiniteCStar:
    alg = carriers[0]
    for c in carriers[1:]:
        alg = tensor_algebra(alg, c)
    return alg


@lru_cache(maxsize=None)
def _chain_perm(dims_list: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """kron(c_1,...,c_n) -> coeff permutation for the iterated product."""
    if len(dims_list) == 1:
        return np.arange(sum(d * d for d in dims_list[0]), dtype=np.intp)
    head = _chain_perm(dims_list[:-1])
    A_dims = _fold_dims(dims_list[:-1])
    _, pair = _tensor_cached(A_dims, dims_list[-1])
    tn = sum(d * d for d in dims_list[-1])
    # lift head to act on the first factor of kron(K_{n-1}, C^{tn})
    lifted = (head[:, None] * tn + np.arange(tn)[None, :]).ravel()
    return lifted[pair]


@lru_cache(maxsize=None)
def _fold_dims(dims_list: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    dims = dims_list[0]
    for nxt in dims_list[1:]:
        dims = tuple(da * db for da in dims for db in nxt)
    return dims


def chain_permutation(carriers: list[FiniteCStar]) -> np.ndarray:
    return _chain_perm(tuple(c.block_dims for c in carriers))


def embed_legs(
    x: AlgebraElement,
    legs: tuple[int, ...],
    carriers: list[FiniteCStar],
) -> AlgebraElement:
    """Place x (an element of the product of carriers[legs]) on the named legs
    of the full product, identity elsewhere.  Legs are 1-based and distinct."""
    n = len(carriers)
    legs0 = tuple(p - 1 for p in legs)
    if len(set(legs0)) != len(legs0) or any(p < 0 or p >= n for p in legs0):
        raise AlgebraError(f"leg indices {legs} out of range 1..{n}")
    x_carriers = [carriers[p] for p in legs0]
    if x.parent.block_dims != tensor_chain(x_carriers).block_dims:
        raise AlgebraError("element carrier does not match the named legs")
    dims = [c.total_dim for c in carriers]
    # x in the kron grid of its own legs
    xk = x.coeffs[np.argsort(chain_permutation(x_carriers))] if len(x_carriers) > 1 \
        else x.coeffs
    xk = xk.reshape([dims[p] for p in legs0])
    rest = [p for p in range(n) if p not in legs0]
    full = xk
    for p in rest:
        full = np.multiply.outer(full, carriers[p].unit().coeffs)
    # axes currently ordered legs0 + rest; move to 0..n-1
    order = list(legs0) + rest
    full = np.transpose(full, np.argsort(order)).ravel()
    prod = tensor_chain(carriers)
    return AlgebraElement(prod, full[chain_permutation(carriers)])


def leg_embed(x: AlgebraElement, legs: tuple[int, int], n: int, A: FiniteCStar) -> AlgebraElement:
    """Spec operation: x in A(x)A placed on two legs of A^(x)n."""
    return embed_legs(x, legs, [A] * n)


def flip_element(A: FiniteCStar) -> AlgebraElement:
    """The tensor flip as an element of A(x)A (A must be a single full block)."""
    if A.num_blocks != 1:
        raise AlgebraError("flip element exists only for full matrix algebras")
    d = A.block_dims[0]
    AA = tensor_algebra(A, A)
    out = AA.zero().coeffs
    perm = tensor_permutation(A, A)
    for i in range(d):
        for j in range(d):
            eij = np.zeros(d * d, dtype=complex)
            eij[i * d + j] = 1
            eji = np.zeros(d * d, dtype=complex)
            eji[j * d + i] = 1
            out = out + np.kron(eij, eji)[perm]
    return AlgebraElement(AA, out)


def factor_permutation(
    x: AlgebraElement, carriers: list[FiniteCStar], order: list[int]
) -> AlgebraElement:
    """Permute the tensor factors of x: leg i of the result is leg order[i]
    (1-based) of the input."""
    n = len(carriers)
    order0 = [p - 1 for p in order]
    dims = [c.total_dim for c in carriers]
    xk = x.coeffs[np.argsort(chain_permutation(carriers))].reshape(dims)
    out_carriers = [carriers[p] for p in order0]
    outk = np.transpose(xk, order0).ravel()
    return AlgebraElement(
        tensor_chain(out_carriers), outk[chain_permutation(out_carriers)]
    )


# ---------------------------------------------------------------------------
# span / rank utilities
# ---------------------------------------------------------------------------

def singular_values(vectors: list[np.ndarray]) -> np.ndarray:
    M = np.stack([np.asarray(v, dtype=complex).ravel() for v in vectors])
    return np.linalg.svd(M, compute_uv=False)


def rank_of_span(vectors, rtol: float = RANK_RTOL, atol: float = 1e-12) -> int:
    s = singular_values(list(vectors))
    if s.size == 0:
        return 0
    return int(np.sum(s > max(rtol * s[0], atol)))


def orthonormal_span(vectors, rtol: float = RANK_RTOL, atol: float = 1e-12) -> np.ndarray:
    """Rows form an orthonormal basis of the span."""
    M = np.stack([np.asarray(v, dtype=complex).ravel() for v in vectors])
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    if s.size == 0:
        return np.zeros((0, M.shape[1]), dtype=complex)
    r = int(np.sum(s > max(rtol * s[0], atol)))
    return vh[:r]


def subspace_distance(B1: np.ndarray, B2: np.ndarray) -> float:
    """Gap between the subspaces spanned by the rows of B1 and B2 (orthonormal
    rows), computed via projection defects to avoid cancellation near 0."""
    if B1.shape[0] != B2.shape[0]:
        return 1.0
    if B1.shape[0] == 0:
        return 0.0
    d12 = max(
        float(np.linalg.norm(B1[i] - project_onto_span(B1[i], B2)))
        for i in range(B1.shape[0])
    )
    d21 = max(
        float(np.linalg.norm(B2[i] - project_onto_span(B2[i], B1)))
        for i in range(B2.shape[0])
    )
    return max(d12, d21)


def project_onto_span(v: np.ndarray, basis_rows: np.ndarray) -> np.ndarray:
    """Orthogonal projection of v onto the C-linear span of the rows
    (rows assumed orthonormal)."""
    if basis_rows.shape[0] == 0:
        return np.zeros_like(v)
    return basis_rows.T @ (basis_rows.conj() @ v)


def generating_elements(A: FiniteCStar) -> list[AlgebraElement]:
    """A small set generating A as a *-algebra: per block, the sub/super
    diagonal matrix units plus the block unit."""
    out = []
    for b, d in enumerate(A.block_dims):
        o = A.block_offsets[b]
        e = np.zeros(A.total_dim, dtype=complex)
        for i in range(d):
            e[o + i * d + i] = 1.0
        out.append(AlgebraElement(A, e))
        for i in range(d - 1):
            v = np.zeros(A.total_dim, dtype=complex)
            v[o + i * d + (i + 1)] = 1.0
            out.append(AlgebraElement(A, v))
            w = np.zeros(A.total_dim, dtype=complex)
            w[o + (i + 1) * d + i] = 1.0
            out.append(AlgebraElement(A, w))
    return out
