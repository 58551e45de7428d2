"""Axiom suites for certified actions, rendered as logic formulas.

The structural axioms (sort/domain well-formedness) hold by construction of
the binding and are emitted as marked placeholders; the algebraic identity
axioms are quantifier-free with constants from the canonical basis; the
density and freeness conditions are positive existential formulas whose
witnesses live in declared ball domains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraElement,
    op_norm,
    orthonormal_span,
    tensor_algebra,
    tensor_elements,
)
from .maps import LinearMap, left_multiplication, slice_left
from .actions import Action, check_freeness
from .logic import (
    EvalBudget,
    FMax,
    FNorm,
    FQuant,
    LogicError,
    StructureBinding,
    TApply,
    TSum,
    TVar,
    evaluate,
    parse_formula,
    print_formula,
    quantifier_class,
)


@dataclass
class AxiomEntry:
    axiom_id: str
    clazz: str  # qf | exists | forall-exists | structural
    formula: object | None
    threshold: float

    def render(self) -> str | None:
        return None if self.formula is None else print_formula(self.formula)


@dataclass
class AxiomResult:
    axiom_id: str
    clazz: str
    direction: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self):
        return {
            "axiom": self.axiom_id,
            "class": self.clazz,
            "value_bound": {"dir": self.direction, "value": float(self.value)},
            "threshold": self.threshold,
            "pass": bool(self.passed),
        }


STRUCTURAL_IDS = [f"ax{k:02d}" for k in range(1, 11)]


def make_binding(act: Action) -> StructureBinding:
    """Sorts S (carrier), S0 (C(G)), S1 (C(G)(x)A), S2 (C(G)(x)C(G)(x)A);
    symbols for alpha, iota, the E/P families, the density lemma pieces, and
    basis constants."""
    qg, A = act.group, act.carrier
    CG = qg.algebra
    S1 = tensor_algebra(CG, A)
    S2 = tensor_algebra(CG, S1)
    b = StructureBinding()
    b.sorts = {"S": A, "S0": CG, "S1": S1, "S2": S2}
    b.symbols["alpha"] = act.alpha
    iota = LinearMap(
        A, S1,
        np.stack(
            [tensor_elements(CG.unit(), A.basis_element(p)).coeffs
             for p in range(A.total_dim)], axis=1,
        ),
    )
    b.symbols["iota"] = iota
    ident_A = LinearMap.identity(A)
    b.symbols["Did"] = qg.comult.tensor(ident_A)
    b.symbols["idalpha"] = LinearMap.identity(CG).tensor(act.alpha)
    for lam, co in enumerate(qg.irreps):
        d = co.dim
        Esum = LinearMap.zero(A, A)
        for i in range(d):
            for j in range(d):
                E = act.E_map(lam, i, j)
                b.symbols[f"E_{lam}_{i}_{j}"] = E
                b.symbols[f"Pid_{lam}_{i}_{j}"] = qg.P_map(lam, i, j).tensor(ident_A)
                u_st_star = tensor_elements(
                    co.coefficient(CG, i, j).star(), A.unit()
                )
                b.symbols[f"lmulU_{lam}_{i}_{j}"] = left_multiplication(u_st_star)
            Esum = Esum + act.E_map(lam, i, i)
        b.symbols[f"Esum_{lam}"] = Esum
        b.symbols[f"iotaE_{lam}"] = iota @ Esum
    for p in range(A.total_dim):
        b.symbols[f"c{p}"] = A.basis_element(p)
    b.domains["S"] = ("S", None, 1.0)
    b.domains["S0"] = ("S0", None, 1.0)
    b.domains["S1"] = ("S1", None, 1.0)
    return b


def _norm_atom(expr: str) -> object:
    return parse_formula(f"|| {expr} ||")


def axiom_suite(act: Action, flavor: str = "compact") -> tuple[list[AxiomEntry], StructureBinding]:
    """The finite instantiation of the action axioms for a certified action.

    flavor 'compact' emits the global density existentials; flavor 'discrete'
    emits them per block of the (discrete-side) group algebra."""
    if flavor not in ("compact", "discrete"):
        raise LogicError(f"unknown axiom flavor {flavor!r}")
    qg, A = act.group, act.carrier
    CG = qg.algebra
    binding = make_binding(act)
    entries = [
        AxiomEntry(ax, "structural", None, 0.0) for ax in STRUCTURAL_IDS
    ]
    consts = [f"c{p}" for p in range(A.total_dim)]
    # (11) E-family composition relations
    for a in qg.irreps:
        for bco in qg.irreps:
            atoms = []
            for s in range(a.dim):
                for m in range(a.dim):
                    for l in range(bco.dim):
                        for n in range(bco.dim):
                            for c in consts:
                                inner = f"E_{bco.index}_{l}_{n}(E_{a.index}_{s}_{m}({c}()))"
                                if a.index == bco.index and m == l:
                                    expr = f"{inner} - E_{a.index}_{s}_{n}({c}())"
                                else:
                                    expr = inner
                                atoms.append(_norm_atom(expr))
            entries.append(
                AxiomEntry(
                    f"ax11[{a.index},{bco.index}]", "qf", FMax(tuple(atoms)), 1e-9
                )
            )
    # (12) completeness: sum of the spectral projections is the identity
    atoms = []
    for c in consts:
        expr = " + ".join(f"Esum_{a.index}({c}())" for a in qg.irreps)
        atoms.append(_norm_atom(f"({expr}) - {c}()"))
    entries.append(AxiomEntry("ax12", "qf", FMax(tuple(atoms)), 1e-9))
    # (13) intertwining (P (x) id) alpha = alpha E
    for a in qg.irreps:
        atoms = []
        for i in range(a.dim):
            for j in range(a.dim):
                for c in consts:
                    atoms.append(
                        _norm_atom(
                            f"Pid_{a.index}_{i}_{j}(alpha({c}())) - "
                            f"alpha(E_{a.index}_{i}_{j}({c}()))"
                        )
                    )
        entries.append(
            AxiomEntry(f"ax13[{a.index}]", "qf", FMax(tuple(atoms)), 1e-9)
        )
    # (14) the density identity
    for a in qg.irreps:
        atoms = []
        for c in consts:
            terms = []
            for s in range(a.dim):
                for t_ in range(a.dim):
                    # (u_st)^* pairs with E_{ts}
                    terms.append(
                        f"lmulU_{a.index}_{s}_{t_}(alpha(E_{a.index}_{t_}_{s}({c}())))"
                    )
            expr = " + ".join(terms)
            atoms.append(_norm_atom(f"iotaE_{a.index}({c}()) - ({expr})"))
        entries.append(
            AxiomEntry(f"ax14[{a.index}]", "qf", FMax(tuple(atoms)), 1e-9)
        )
    # the action compatibility condition
    atoms = [
        _norm_atom(f"Did(alpha({c}())) - idalpha(alpha({c}()))") for c in consts
    ]
    entries.append(AxiomEntry("action-condition", "qf", FMax(tuple(atoms)), 1e-9))
    # density condition: positive existential with witnesses in the ball
    entries.extend(_density_entries(act, binding, flavor))
    return entries, binding


def _density_entries(act: Action, binding: StructureBinding, flavor: str):
    qg, A = act.group, act.carrier
    CG = qg.algebra
    S1 = binding.sorts["S1"]
    out = []
    if flavor == "compact":
        rows = orthonormal_span(
            [
                (tensor_elements(CG.basis_element(p), A.unit())
                 * act.alpha(A.basis_element(q))).coeffs
                for p in range(CG.total_dim)
                for q in range(A.total_dim)
            ]
        )
        binding.domains["DensSpan"] = ("S1", rows, 2.0)
        atoms = []
        for k in range(S1.total_dim):
            z = S1.basis_element(k)
            binding.symbols[f"z{k}"] = z
            atoms.append(
                FQuant(
                    "inf", "w", "DensSpan", 2.0,
                    _norm_atom(f"w - z{k}()"),
                )
            )
        out.append(AxiomEntry("density", "exists", FMax(tuple(atoms)), 1e-6))
    else:
        # per block of c_0(G-check): [(c_0_lam (x) 1) alpha_lam(A)] = c_0_lam (x) A
        for blk, dblk in enumerate(CG.block_dims):
            o = CG.block_offsets[blk]
            span_vecs = []
            for x in range(dblk * dblk):
                xt = np.zeros(CG.total_dim, dtype=complex)
                xt[o + x] = 1.0
                xel = tensor_elements(AlgebraElement(CG, xt), A.unit())
                for q in range(A.total_dim):
                    full = act.alpha(A.basis_element(q))
                    comp = _block_compress(full, CG, A, blk)
                    span_vecs.append((xel * comp).coeffs)
            rows = orthonormal_span(span_vecs)
            binding.domains[f"DensSpan{blk}"] = ("S1", rows, 2.0)
            atoms = []
            for x in range(dblk * dblk):
                xt = np.zeros(CG.total_dim, dtype=complex)
                xt[o + x] = 1.0
                for q in range(A.total_dim):
                    z = tensor_elements(AlgebraElement(CG, xt), A.basis_element(q))
                    name = f"zb{blk}_{x}_{q}"
                    binding.symbols[name] = z
                    atoms.append(
                        FQuant(
                            "inf", "w", f"DensSpan{blk}", 2.0,
                            _norm_atom(f"w - {name}()"),
                        )
                    )
            out.append(
                AxiomEntry(f"density[{blk}]", "exists", FMax(tuple(atoms)), 1e-6)
            )
    return out


def _block_compress(x: AlgebraElement, CG, A, blk: int) -> AlgebraElement:
    """Compress the first tensor leg of x in CG (x) A to the named block."""
    from .algebra import to_kron_coords, from_kron_coords

    K = to_kron_coords(x, CG, A).reshape(CG.total_dim, A.total_dim)
    o, d = CG.block_offsets[blk], CG.block_dims[blk]
    out = np.zeros_like(K)
    out[o : o + d * d] = K[o : o + d * d]
    return from_kron_coords(out.ravel(), CG, A)


def evaluate_suite(
    entries: list[AxiomEntry],
    binding: StructureBinding,
    budget: EvalBudget | None = None,
) -> list[AxiomResult]:
    budget = budget or EvalBudget()
    out = []
    for e in entries:
        if e.clazz == "structural":
            out.append(AxiomResult(e.axiom_id, e.clazz, "exact", 0.0, e.threshold, True))
            continue
        rep = evaluate(e.formula, binding, {}, budget)
        passed = rep.value <= e.threshold and rep.direction in ("exact", "upper")
        out.append(
            AxiomResult(e.axiom_id, e.clazz, rep.direction, rep.value, e.threshold, passed)
        )
    return out


# ---------------------------------------------------------------------------
# freeness formulas
# ---------------------------------------------------------------------------

@dataclass
class FreenessFormulaReport:
    per_irrep_values: dict
    formula_free: bool
    rank_free: bool
    entries: list

    @property
    def consistent(self) -> bool:
        return self.formula_free == self.rank_free

    def to_dict(self):
        return {
            "per_irrep_values": {str(k): float(v) for k, v in self.per_irrep_values.items()},
            "formula_free": self.formula_free,
            "rank_free": self.rank_free,
            "consistent": self.consistent,
        }


def freeness_formulas(
    act: Action, budget: EvalBudget | None = None, tol: float = 1e-6
) -> FreenessFormulaReport:
    """Per-irrep positive existential formulas measuring the distance from
    C(G)_lambda (x) A to the span [(1 (x) A) alpha(A_lambda)], cross-checked
    against the exact rank verdict."""
    qg, A = act.group, act.carrier
    CG = qg.algebra
    binding = make_binding(act)
    budget = budget or EvalBudget()
    values = {}
    entries = []
    for a in qg.irreps:
        lam = a.index
        basis_lam = act.spectral_basis(lam)
        span_vecs = []
        for q in range(A.total_dim):
            e1b = tensor_elements(CG.unit(), A.basis_element(q))
            for i in range(basis_lam.shape[0]):
                span_vecs.append(
                    (e1b * act.alpha(AlgebraElement(A, basis_lam[i]))).coeffs
                )
        rows = (
            orthonormal_span(span_vecs)
            if span_vecs
            else np.zeros((0, binding.sorts["S1"].total_dim), dtype=complex)
        )
        binding.domains[f"FreeSpan_{lam}"] = ("S1", rows, 2.0)
        worst = 0.0
        atoms = []
        for i in range(a.dim):
            for j in range(a.dim):
                u_elem = a.coefficient(CG, i, j)
                for q in range(A.total_dim):
                    z = tensor_elements(u_elem, A.basis_element(q))
                    n = op_norm(z)
                    if n < 1e-12:
                        continue
                    z = (1.0 / n) * z
                    name = f"zf{lam}_{i}_{j}_{q}"
                    binding.symbols[name] = z
                    phi = FQuant(
                        "inf", "w", f"FreeSpan_{lam}", 2.0,
                        _norm_atom(f"w - {name}()"),
                    )
                    atoms.append(phi)
                    rep = evaluate(phi, binding, {}, budget)
                    worst = max(worst, rep.value)
        entries.append((lam, atoms))
        values[lam] = worst
    formula_free = all(v < tol for v in values.values())
    rank_free = check_freeness(act).free
    rep = FreenessFormulaReport(values, formula_free, rank_free, entries)
    if not rep.consistent:
        raise LogicError(
            f"freeness formula verdict {formula_free} disagrees with the exact "
            f"rank verdict {rank_free}: tolerance misconfiguration"
        )
    return rep
