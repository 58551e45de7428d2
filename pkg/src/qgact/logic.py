"""A small continuous-logic formula language over finite-dimensional
structures.

Formulas are ASTs over norm atoms and pseudometric atoms, with the monotone
connective basis {max, min, nonnegative-affine, truncated subtraction} and
sup/inf quantifiers over declared ball domains.  Quantifier-free parts are
evaluated exactly; sup yields a certified lower bound and inf a certified
upper bound, both achieved at a returned witness point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgebraElement,
    FiniteCStar,
    op_norm,
    orthonormal_span,
    project_onto_span,
)
from .maps import LinearMap


class LogicError(ValueError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class TApply:
    symbol: str
    args: tuple

    def __str__(self):
        return f"{self.symbol}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class TConst:
    symbol: str

    def __str__(self):
        return self.symbol


@dataclass(frozen=True)
class TSum:
    left: object
    right: object
    sign: float = 1.0

    def __str__(self):
        op = "+" if self.sign > 0 else "-"
        return f"({self.left} {op} {self.right})"


@dataclass(frozen=True)
class TScale:
    coeff: complex
    term: object

    def __str__(self):
        c = format_complex(self.coeff)
        return f"{c}*{self.term}"


@dataclass(frozen=True)
class FNorm:
    term: object

    def __str__(self):
        return f"|| {self.term} ||"


@dataclass(frozen=True)
class FDist:
    anchors: tuple  # constant symbol names
    left: object
    right: object

    def __str__(self):
        return f"dF{{{', '.join(self.anchors)}}}({self.left}, {self.right})"


@dataclass(frozen=True)
class FMax:
    parts: tuple

    def __str__(self):
        return f"max({', '.join(str(p) for p in self.parts)})"


@dataclass(frozen=True)
class FMin:
    parts: tuple

    def __str__(self):
        return f"min({', '.join(str(p) for p in self.parts)})"


@dataclass(frozen=True)
class FAffine:
    weight: float
    body: object
    shift: float

    def __str__(self):
        return f"{format_real(self.weight)}*{self.body} + {format_real(self.shift)}"


@dataclass(frozen=True)
class FTruncSub:
    body: object
    shift: float

    def __str__(self):
        return f"({self.body} -. {format_real(self.shift)})"


@dataclass(frozen=True)
class FQuant:
    kind: str  # "sup" | "inf"
    var: str
    domain: str
    radius: float
    body: object

    def __str__(self):
        return (
            f"{self.kind} {self.var}:Ball({self.domain}, {format_real(self.radius)})"
            f". {self.body}"
        )


def format_real(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(float(x))


def format_complex(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return format_real(z.real)
    return f"({z.real}{z.imag:+}j)"


def quantifier_class(phi) -> str:
    """qf | exists | forall-exists | general."""
    prefix = []
    node = phi
    while isinstance(node, FQuant):
        prefix.append(node.kind)
        node = node.body
    if _has_quantifier(node):
        return "general"
    if not prefix:
        return "qf"
    if all(k == "inf" for k in prefix):
        return "exists"
    # sup-block then inf-block
    i = 0
    while i < len(prefix) and prefix[i] == "sup":
        i += 1
    if all(k == "inf" for k in prefix[i:]):
        return "forall-exists"
    return "general"


def _has_quantifier(node) -> bool:
    if isinstance(node, FQuant):
        return True
    for child in _children(node):
        if _has_quantifier(child):
            return True
    return False


def _children(node):
    if isinstance(node, (FMax, FMin)):
        return node.parts
    if isinstance(node, FAffine):
        return (node.body,)
    if isinstance(node, FTruncSub):
        return (node.body,)
    if isinstance(node, FQuant):
        return (node.body,)
    return ()


def is_positive(phi) -> bool:
    """All connectives in our basis are monotone, so every well-formed
    formula is positive; kept explicit as the syntactic tracking hook."""
    return True


def free_variables(phi) -> set:
    out = set()

    def term_vars(t):
        if isinstance(t, TVar):
            out.add(t.name)
        elif isinstance(t, TApply):
            for a in t.args:
                term_vars(a)
        elif isinstance(t, TSum):
            term_vars(t.left)
            term_vars(t.right)
        elif isinstance(t, TScale):
            term_vars(t.term)

    def walk(node, bound):
        if isinstance(node, FNorm):
            tmp = set()
            sub = free_variables_term(node.term)
            out.update(sub - bound)
        elif isinstance(node, FDist):
            out.update(
                (free_variables_term(node.left) | free_variables_term(node.right))
                - bound
            )
        elif isinstance(node, FQuant):
            walk(node.body, bound | {node.var})
        else:
            for c in _children(node):
                walk(c, bound)

    walk(phi, set())
    return out


def free_variables_term(t) -> set:
    if isinstance(t, TVar):
        return {t.name}
    if isinstance(t, TApply):
        s = set()
        for a in t.args:
            s |= free_variables_term(a)
        return s
    if isinstance(t, TSum):
        return free_variables_term(t.left) | free_variables_term(t.right)
    if isinstance(t, TScale):
        return free_variables_term(t.term)
    return set()


def lipschitz_modulus(phi, binding: "StructureBinding") -> float:
    """Conservative uniform continuity modulus in each free variable."""
    if isinstance(phi, FNorm):
        return _term_lipschitz(phi.term, binding)
    if isinstance(phi, FDist):
        anchor_norm = max(
            (op_norm(binding.symbols[a]) for a in phi.anchors), default=1.0
        )
        return anchor_norm * max(
            _term_lipschitz(phi.left, binding), _term_lipschitz(phi.right, binding)
        )
    if isinstance(phi, (FMax, FMin)):
        return max(lipschitz_modulus(p, binding) for p in phi.parts)
    if isinstance(phi, FAffine):
        return abs(phi.weight) * lipschitz_modulus(phi.body, binding)
    if isinstance(phi, FTruncSub):
        return lipschitz_modulus(phi.body, binding)
    if isinstance(phi, FQuant):
        return lipschitz_modulus(phi.body, binding)
    raise LogicError(f"unknown node {phi!r}")


def _term_lipschitz(t, binding) -> float:
    if isinstance(t, TVar):
        return 1.0
    if isinstance(t, TConst):
        return 0.0
    if isinstance(t, TApply):
        sym = binding.symbols.get(t.symbol)
        if isinstance(sym, LinearMap):
            nrm = float(np.linalg.norm(sym.matrix, 2))
            return nrm * max(_term_lipschitz(a, binding) for a in t.args)
        return 0.0
    if isinstance(t, TSum):
        return _term_lipschitz(t.left, binding) + _term_lipschitz(t.right, binding)
    if isinstance(t, TScale):
        return abs(t.coeff) * _term_lipschitz(t.term, binding)
    raise LogicError(f"unknown term {t!r}")


# ---------------------------------------------------------------------------
# structure binding
# ---------------------------------------------------------------------------

@dataclass
class StructureBinding:
    """Associates sorts to carriers, symbols to maps/elements, and domain
    names to (sort, subspace basis rows, radius)."""

    sorts: dict = field(default_factory=dict)  # name -> FiniteCStar
    symbols: dict = field(default_factory=dict)  # name -> LinearMap | AlgebraElement
    domains: dict = field(default_factory=dict)  # name -> (sort, rows | None, radius)

    def domain_data(self, name: str):
        if name not in self.domains:
            raise LogicError(f"unresolved domain {name!r}")
        sort, rows, radius = self.domains[name]
        carrier = self.sorts[sort]
        if rows is None:
            rows = np.eye(carrier.total_dim, dtype=complex)
        return carrier, rows, radius


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<norm>\|\|)|(?P<trunc>-\.)|(?P<num>-?\d+(?:\.\d+)?(?:e-?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[().,:{}*+-]))"
)

KEYWORDS = {"sup", "inf", "max", "min", "Ball", "dF"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                raise LogicError(f"syntax error at position {pos}: {text[pos:pos+12]!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), pos))
            pos = m.end()
        self.i = 0

    def peek(self, k=0):
        if self.i + k < len(self.tokens):
            return self.tokens[self.i + k]
        return ("eof", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value:
            raise LogicError(f"expected {value!r} at position {pos}, found {val!r}")
        return val

    # formula := quant | additive
    def formula(self):
        kind, val, pos = self.peek()
        if val in ("sup", "inf"):
            self.next()
            _, var, _ = self.next()
            self.expect(":")
            self.expect("Ball")
            self.expect("(")
            _, dom, _ = self.next()
            self.expect(",")
            _, rad, rpos = self.next()
            self.expect(")")
            self.expect(".")
            body = self.formula()
            return FQuant(val, var, dom, float(rad), body)
        return self.additive()

    # additive := [num '*'] core [('+' num) | ('-.' num)]
    def additive(self):
        kind, val, pos = self.peek()
        weight = None
        if kind == "num" and self.peek(1)[1] == "*":
            weight = float(val)
            self.next()
            self.next()
        core = self.core()
        kind, val, pos = self.peek()
        if val == "+":
            self.next()
            kind2, num, npos = self.next()
            if kind2 != "num":
                raise LogicError(f"expected number at position {npos}")
            return FAffine(weight if weight is not None else 1.0, core, float(num))
        if kind == "trunc":
            self.next()
            kind2, num, npos = self.next()
            if kind2 != "num":
                raise LogicError(f"expected number at position {npos}")
            body = core if weight is None else FAffine(weight, core, 0.0)
            return FTruncSub(body, float(num))
        if weight is not None:
            return FAffine(weight, core, 0.0)
        return core

    def core(self):
        kind, val, pos = self.peek()
        if val in ("max", "min"):
            self.next()
            self.expect("(")
            parts = [self.formula()]
            while self.peek()[1] == ",":
                self.next()
                parts.append(self.formula())
            self.expect(")")
            return FMax(tuple(parts)) if val == "max" else FMin(tuple(parts))
        if kind == "norm":
            self.next()
            t = self.term()
            k2, v2, p2 = self.next()
            if k2 != "norm":
                raise LogicError(f"expected '||' at position {p2}")
            return FNorm(t)
        if val == "dF":
            self.next()
            self.expect("{")
            anchors = []
            _, a, _ = self.next()
            anchors.append(a)
            while self.peek()[1] == ",":
                self.next()
                _, a, _ = self.next()
                anchors.append(a)
            self.expect("}")
            self.expect("(")
            left = self.term()
            self.expect(",")
            right = self.term()
            self.expect(")")
            return FDist(tuple(anchors), left, right)
        if val == "(":
            self.next()
            phi = self.formula()
            self.expect(")")
            return phi
        raise LogicError(f"unexpected token {val!r} at position {pos}")

    # term := factor (('+'|'-') factor)*
    def term(self):
        t = self.factor()
        while True:
            kind, val, pos = self.peek()
            if val == "+":
                self.next()
                t = TSum(t, self.factor(), 1.0)
            elif val == "-":
                self.next()
                t = TSum(t, self.factor(), -1.0)
            else:
                return t

    def factor(self):
        kind, val, pos = self.peek()
        if kind == "num" and self.peek(1)[1] == "*":
            self.next()
            self.next()
            return TScale(float(val), self.factor())
        if val == "(":
            self.next()
            t = self.term()
            self.expect(")")
            return t
        if kind == "name":
            self.next()
            if self.peek()[1] == "(":
                self.next()
                if self.peek()[1] == ")":
                    self.next()
                    return TApply(val, ())
                args = [self.term()]
                while self.peek()[1] == ",":
                    self.next()
                    args.append(self.term())
                self.expect(")")
                return TApply(val, tuple(args))
            return TVar(val)
        raise LogicError(f"unexpected token {val!r} in term at position {pos}")


def parse_formula(text: str):
    p = _Parser(text)
    phi = p.formula()
    if p.peek()[0] != "eof":
        kind, val, pos = p.peek()
        raise LogicError(f"trailing input at position {pos}: {val!r}")
    return phi


def print_formula(phi) -> str:
    return str(phi)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalBudget:
    starts: int = 6
    iters: int = 80
    seed: int = 7

    def to_dict(self):
        return {"starts": self.starts, "iters": self.iters, "seed": self.seed}


@dataclass
class EvalReport:
    value: float
    direction: str  # exact | lower | upper | heuristic
    witnesses: dict  # var -> coefficient vector

    def to_dict(self):
        return {
            "value": float(self.value),
            "direction": self.direction,
            "witnesses": {
                k: [[z.real, z.imag] for z in v] for k, v in self.witnesses.items()
            },
        }


def eval_term(t, binding: StructureBinding, assignment: dict) -> AlgebraElement:
    if isinstance(t, TVar):
        if t.name not in assignment:
            raise LogicError(f"unassigned variable {t.name!r}")
        return assignment[t.name]
    if isinstance(t, TConst):
        sym = binding.symbols.get(t.symbol)
        if not isinstance(sym, AlgebraElement):
            raise LogicError(f"constant symbol {t.symbol!r} unresolved")
        return sym
    if isinstance(t, TApply):
        sym = binding.symbols.get(t.symbol)
        if sym is None:
            raise LogicError(f"unresolved symbol {t.symbol!r}")
        if isinstance(sym, AlgebraElement):
            if t.args:
                raise LogicError(f"constant {t.symbol!r} applied to arguments")
            return sym
        if isinstance(sym, LinearMap):
            if len(t.args) != 1:
                raise LogicError(f"map symbol {t.symbol!r} expects one argument")
            return sym(eval_term(t.args[0], binding, assignment))
        raise LogicError(f"symbol {t.symbol!r} has unsupported binding type")
    if isinstance(t, TSum):
        a = eval_term(t.left, binding, assignment)
        b = eval_term(t.right, binding, assignment)
        return a + b if t.sign > 0 else a - b
    if isinstance(t, TScale):
        return t.coeff * eval_term(t.term, binding, assignment)
    raise LogicError(f"unknown term {t!r}")


_DIR_COMPOSE = {
    ("sup", "exact"): "lower",
    ("sup", "lower"): "lower",
    ("sup", "upper"): "heuristic",
    ("sup", "heuristic"): "heuristic",
    ("inf", "exact"): "upper",
    ("inf", "upper"): "upper",
    ("inf", "lower"): "heuristic",
    ("inf", "heuristic"): "heuristic",
}


def evaluate(
    phi,
    binding: StructureBinding,
    assignment: dict | None = None,
    budget: EvalBudget | None = None,
) -> EvalReport:
    assignment = dict(assignment or {})
    budget = budget or EvalBudget()
    rng = np.random.default_rng(budget.seed)
    return _eval(phi, binding, assignment, budget, rng)


def _eval(phi, binding, assignment, budget, rng) -> EvalReport:
    if isinstance(phi, FNorm):
        return EvalReport(
            op_norm(eval_term(phi.term, binding, assignment)), "exact", {}
        )
    if isinstance(phi, FDist):
        a = eval_term(phi.left, binding, assignment)
        b = eval_term(phi.right, binding, assignment)
        diff = a - b
        val = 0.0
        for name in phi.anchors:
            anchor = binding.symbols.get(name)
            if not isinstance(anchor, AlgebraElement):
                raise LogicError(f"pseudometric anchor {name!r} unresolved")
            val = max(val, op_norm(anchor * diff), op_norm(diff * anchor))
        return EvalReport(val, "exact", {})
    if isinstance(phi, (FMax, FMin)):
        parts = [_eval(p, binding, assignment, budget, rng) for p in phi.parts]
        agg = max if isinstance(phi, FMax) else min
        val = agg(p.value for p in parts)
        dirs = {p.direction for p in parts}
        direction = "exact" if dirs == {"exact"} else (
            dirs.pop() if len(dirs) == 1 else "heuristic"
        )
        wit = {}
        for p in parts:
            wit.update(p.witnesses)
        return EvalReport(val, direction, wit)
    if isinstance(phi, FAffine):
        if phi.weight < 0 or phi.shift < 0:
            raise LogicError("affine connectives require nonnegative weights")
        inner = _eval(phi.body, binding, assignment, budget, rng)
        return EvalReport(
            phi.weight * inner.value + phi.shift, inner.direction, inner.witnesses
        )
    if isinstance(phi, FTruncSub):
        inner = _eval(phi.body, binding, assignment, budget, rng)
        return EvalReport(
            max(inner.value - phi.shift, 0.0), inner.direction, inner.witnesses
        )
    if isinstance(phi, FQuant):
        return _eval_quant(phi, binding, assignment, budget, rng)
    raise LogicError(f"unknown formula node {phi!r}")


def _retract_to_ball(carrier, rows, radius, coords):
    """Point of the domain from real optimization coordinates."""
    k = rows.shape[0]
    vec = rows.T @ (coords[:k] + 1j * coords[k:])
    x = AlgebraElement(carrier, vec)
    n = op_norm(x)
    if n > radius:
        x = (radius / n) * x
    return x


def _eval_quant(phi: FQuant, binding, assignment, budget, rng) -> EvalReport:
    carrier, rows, radius = binding.domain_data(phi.domain)
    k = rows.shape[0]
    sign = 1.0 if phi.kind == "sup" else -1.0

    def objective(coords):
        x = _retract_to_ball(carrier, rows, radius, coords)
        assignment[phi.var] = x
        rep = _eval(phi.body, binding, assignment, budget, rng)
        return rep, x

    starts = []
    # structured start: for distance-style bodies, the projection of the
    # anchor constant onto the domain is usually the optimum
    proj = _projection_seed(phi, binding, assignment, carrier, rows, radius)
    if proj is not None:
        starts.append(proj)
    starts.append(np.zeros(2 * k))
    for _ in range(budget.starts - len(starts)):
        starts.append(0.5 * rng.standard_normal(2 * k))
    best = None
    for s0 in starts:
        rep0, x0 = objective(s0)
        if best is None or sign * rep0.value > sign * best[0].value:
            best = (rep0, x0, s0)
        if phi.kind == "inf" and best[0].value < 1e-12:
            break
        res = _nelder_mead(
            lambda c: sign * -objective(c)[0].value, s0, budget.iters
        )
        rep, x = objective(res)
        if best is None or sign * rep.value > sign * best[0].value:
            best = (rep, x, res)
        if k == 0 or (phi.kind == "inf" and best[0].value < 1e-12):
            break
    rep, x, coords = best
    direction = _DIR_COMPOSE[(phi.kind, rep.direction)]
    witnesses = dict(rep.witnesses)
    witnesses[phi.var] = x.coeffs
    assignment.pop(phi.var, None)
    return EvalReport(rep.value, direction, witnesses)


def _projection_seed(phi, binding, assignment, carrier, rows, radius):
    """If the body is || var - t || or || t - var || with t evaluable, seed
    with the orthogonal projection of t onto the domain subspace."""
    body = phi.body
    if not isinstance(body, FNorm) or not isinstance(body.term, TSum):
        return None
    left, right = body.term.left, body.term.right
    target = None
    if isinstance(left, TVar) and left.name == phi.var:
        target = right
    elif isinstance(right, TVar) and right.name == phi.var:
        target = left
    if target is None:
        return None
    try:
        t_el = eval_term(target, binding, assignment)
    except LogicError:
        return None
    if t_el.parent.block_dims != carrier.block_dims:
        return None
    proj = project_onto_span(t_el.coeffs, rows)
    x = AlgebraElement(carrier, proj)
    n = op_norm(x)
    if n > radius:
        proj = proj * (radius / n)
    coords = rows.conj() @ proj
    return np.concatenate([coords.real, coords.imag])


def _nelder_mead(f, x0, iters):
    from scipy.optimize import minimize

    if x0.size == 0:
        return x0
    res = minimize(
        f, x0, method="Nelder-Mead",
        options={"maxiter": iters, "xatol": 1e-10, "fatol": 1e-12},
    )
    return res.x


def _as_complex_vector(v) -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    return arr.astype(complex)


def reevaluate_at_witness(phi, binding, assignment, witnesses) -> float:
    """Exact value of the quantifier-free core at the recorded witnesses;
    the soundness check for reported bounds."""
    assignment = dict(assignment or {})
    node = phi
    while isinstance(node, FQuant):
        carrier, rows, radius = binding.domain_data(node.domain)
        assignment[node.var] = AlgebraElement(
            carrier, _as_complex_vector(witnesses[node.var])
        )
        node = node.body
    rep = _eval(node, binding, assignment, EvalBudget(), np.random.default_rng(0))
    return rep.value
