"""The shipped example catalog: groups Z/2, Z/3, Z/4, S3, their duals, and a
family of actions (translation, trivial, tensor, coset restriction, corner
restriction) covering free and non-free cases."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .algebra import FiniteCStar
from .actions import (
    Action,
    restriction_to_invariant_subalgebra,
    tensor_action,
    translation_action,
    trivial_action,
)
from .qgroup import QuantumGroup, dual, from_finite_group


def cyclic_table(n: int):
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def s3_table():
    perms = sorted(itertools.permutations(range(3)))

    def compose(p, q):
        return tuple(p[q[x]] for x in range(3))

    return [[perms.index(compose(p, q)) for q in perms] for p in perms]


GROUP_TABLES = {
    "z2": cyclic_table(2),
    "z3": cyclic_table(3),
    "z4": cyclic_table(4),
    "s3": s3_table(),
}


@lru_cache(maxsize=None)
def group(name: str) -> QuantumGroup:
    if name in GROUP_TABLES:
        return from_finite_group(GROUP_TABLES[name], label=f"C({name.upper()})")
    if name.startswith("dual_"):
        base = group(name[len("dual_"):])
        return dual(base).as_quantum_group()
    raise KeyError(f"unknown catalog group {name!r}")


def group_names() -> list[str]:
    return ["z2", "z3", "z4", "s3", "dual_s3"]


def _coset_subalgebra_rows(qg: QuantumGroup, table, subgroup: list[int]) -> np.ndarray:
    """Indicator functions of left cosets gH inside C(G)."""
    n = len(table)
    seen = set()
    rows = []
    for g in range(n):
        key = frozenset(table[g][h] for h in subgroup)
        if key in seen:
            continue
        seen.add(key)
        v = np.zeros(n, dtype=complex)
        for x in key:
            v[x] = 1.0
        rows.append(v)
    return np.array(rows)


def catalog_actions() -> dict[str, Action]:
    """Label -> certified action.  Labels are stable identifiers used by the
    CLI and the acceptance suite."""
    z2, z3, z4, s3 = group("z2"), group("z3"), group("z4"), group("s3")
    dual_s3 = group("dual_s3")
    M2 = FiniteCStar((2,), "M2")
    C1 = FiniteCStar((1,), "C")
    C2 = FiniteCStar((1, 1), "C2")
    out = {}
    out["trans_z2"] = translation_action(z2)
    out["trans_z3"] = translation_action(z3)
    out["trans_z4"] = translation_action(z4)
    out["trans_s3"] = translation_action(s3)
    out["trans_dual_s3"] = translation_action(dual_s3)
    out["triv_z2_c"] = trivial_action(z2, C1)
    out["triv_z2_m2"] = trivial_action(z2, M2)
    out["triv_s3_c"] = trivial_action(s3, C1)
    out["tensor_z2_m2"] = tensor_action(out["trans_z2"], M2)
    out["tensor_z3_m2"] = tensor_action(out["trans_z3"], M2)
    out["tensor_s3_c2"] = tensor_action(out["trans_s3"], C2)
    # coset restrictions of the S3 translation action (not free)
    T = GROUP_TABLES["s3"]
    perms = sorted(itertools.permutations(range(3)))
    transposition = [perms.index((0, 1, 2)), perms.index((1, 0, 2))]
    a3 = [perms.index(p) for p in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]]
    rows = _coset_subalgebra_rows(s3, T, transposition)
    out["coset_s3_3pts"], _, _ = restriction_to_invariant_subalgebra(
        out["trans_s3"], rows
    )
    rows2 = _coset_subalgebra_rows(s3, T, a3)
    out["coset_s3_2pts"], _, _ = restriction_to_invariant_subalgebra(
        out["trans_s3"], rows2
    )
    # corner restriction of the Z2 tensor action: p = 1 (x) e00
    tens = out["tensor_z2_m2"]
    corner_rows = []
    A = tens.carrier
    for p in range(z2.algebra.total_dim):
        v = np.zeros(A.total_dim, dtype=complex)
        # carrier C(Z2) (x) M2 has blocks (2, 2); e00 corner of each block
        for b, d in enumerate(A.block_dims):
            o = A.block_offsets[b]
        from .algebra import tensor_elements

        x = np.zeros(z2.algebra.total_dim, dtype=complex)
        x[p] = 1.0
        e00 = np.zeros(4, dtype=complex)
        e00[0] = 1.0
        from .algebra import AlgebraElement

        corner_rows.append(
            tensor_elements(
                AlgebraElement(z2.algebra, x), AlgebraElement(M2, e00)
            ).coeffs
        )
    out["corner_z2"], _, _ = restriction_to_invariant_subalgebra(
        tens, np.array(corner_rows)
    )
    return out


def free_expectation() -> dict[str, bool]:
    return {
        "trans_z2": True,
        "trans_z3": True,
        "trans_z4": True,
        "trans_s3": True,
        "trans_dual_s3": True,
        "triv_z2_c": False,
        "triv_z2_m2": False,
        "triv_s3_c": False,
        "tensor_z2_m2": True,
        "tensor_z3_m2": True,
        "tensor_s3_c2": True,
        "coset_s3_3pts": False,
        "coset_s3_2pts": False,
        "corner_z2": True,
    }
