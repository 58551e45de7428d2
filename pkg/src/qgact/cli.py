"""Command-line orchestration: build/verify quantum groups and actions from
JSON, run axiom suites, crossed products, Rokhlin searches, and emit
machine-readable reports.

Exit codes: 0 verified/pass, 1 usage error, 2 certification failure,
3 not-found-at-budget, 4 obstruction found.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from . import __version__
from .algebra import FiniteCStar
from .maps import CertificationError, LinearMap
from .qgroup import dual, from_finite_group, from_hopf_data
from .actions import make_action, translation_action
from .crossed import (
    crossed_product,
    dual_action,
    k0_map,
    k0_rokhlin_range,
    takai_check,
)
from .rokhlin import (
    Budget,
    NotFound,
    WitnessCertificate,
    find_rokhlin_witness,
    representation_dimension_witness,
    rokhlin_dimension_upper,
    trace_obstruction,
    verify_rokhlin_witness,
)
from .logic import EvalBudget
from .suites import axiom_suite, evaluate_suite, freeness_formulas
from . import catalog as cat
from . import jsonio

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERT_FAIL = 2
EXIT_NOT_FOUND = 3
EXIT_OBSTRUCTION = 4


class Ctx:
    def __init__(self, tol, seed, budget, out):
        self.tol = tol
        self.seed = seed
        restarts, iters = (int(x) for x in budget.split(":"))
        self.budget = Budget(restarts=restarts, iters=iters, seed=seed)
        self.eval_budget = EvalBudget(seed=seed)
        self.out = out

    def emit(self, payload: dict, input_hash: str, exit_code: int):
        envelope = jsonio.report_envelope(
            payload.get("kind", "report"), input_hash, self.tol, self.seed,
            self.budget.to_dict(),
        )
        envelope["report"] = payload
        text = jsonio.dumps(envelope)
        if self.out:
            with open(self.out, "w") as fh:
                fh.write(text)
                fh.write("\n")
        click.echo(text)
        sys.exit(exit_code)


@click.group()
@click.option("--tol", default=1e-9, show_default=True, help="certification tolerance")
@click.option("--seed", default=7, show_default=True, help="random seed")
@click.option("--budget", default="4:120", show_default=True,
              help="search budget restarts:iterations")
@click.option("--out", default=None, help="write the report JSON to this path")
@click.version_option(__version__)
@click.pass_context
def main(ctx, tol, seed, budget, out):
    """Finite compact quantum groups and their actions, with certificates."""
    try:
        ctx.obj = Ctx(tol, seed, budget, out)
    except ValueError:
        raise click.UsageError("budget must be 'restarts:iterations'")


def _load_group(ctx: Ctx, path: str):
    if path.startswith("catalog:"):
        qg = cat.group(path.split(":", 1)[1])
        return qg, jsonio.data_hash(jsonio.group_to_json(qg))
    obj = jsonio.load_file(path)
    h = jsonio.file_hash(path)
    if "table" in obj:
        return from_finite_group(
            obj["table"], label=obj.get("label", ""), tol=ctx.tol, seed=ctx.seed
        ), h
    algebra = jsonio.algebra_from_json(obj["algebra"])
    from .algebra import tensor_algebra

    comult = LinearMap(
        algebra, tensor_algebra(algebra, algebra),
        jsonio.matrix_from_json(obj["comult"]),
    )
    return from_hopf_data(algebra, comult, tol=ctx.tol, seed=ctx.seed), h


def _load_action(ctx: Ctx, path: str):
    if path.startswith("catalog:"):
        act = cat.catalog_actions()[path.split(":", 1)[1]]
        return act, jsonio.data_hash(jsonio.action_to_json(act))
    obj = jsonio.load_file(path)
    h = jsonio.file_hash(path)
    gobj = obj["group"]
    if isinstance(gobj, str):
        qg, _ = _load_group(ctx, gobj)
    elif "table" in gobj:
        qg = from_finite_group(
            gobj["table"], label=gobj.get("label", ""), tol=ctx.tol, seed=ctx.seed
        )
    else:
        algebra = jsonio.algebra_from_json(gobj["algebra"])
        from .algebra import tensor_algebra

        qg = from_hopf_data(
            algebra,
            LinearMap(
                algebra, tensor_algebra(algebra, algebra),
                jsonio.matrix_from_json(gobj["comult"]),
            ),
            tol=ctx.tol, seed=ctx.seed,
        )
    carrier = jsonio.algebra_from_json(obj["carrier"])
    from .algebra import tensor_algebra

    alpha = LinearMap(
        carrier, tensor_algebra(qg.algebra, carrier),
        jsonio.matrix_from_json(obj["alpha"]),
    )
    return make_action(qg, carrier, alpha, tol=ctx.tol,
                       label=obj.get("label", "")), h


def _target_algebra(spec: str) -> FiniteCStar:
    if spec.startswith("M") and spec[1:].isdigit():
        return FiniteCStar((int(spec[1:]),), spec)
    blocks = tuple(int(x) for x in spec.split(","))
    return FiniteCStar(blocks, spec)


# -- group ------------------------------------------------------------------

@main.group()
def group():
    """Build or verify quantum groups."""


@group.command("build")
@click.option("--from-group", "table_path", required=True,
              help="group table JSON or catalog:NAME")
@click.option("--dual", "want_dual", is_flag=True, help="emit the dual group report")
@click.pass_obj
def group_build(ctx: Ctx, table_path, want_dual):
    try:
        qg, h = _load_group(ctx, table_path)
        payload = _group_report(qg)
        if want_dual:
            d = dual(qg, ctx.tol)
            dq = d.as_quantum_group(tol=ctx.tol, seed=ctx.seed)
            payload["dual"] = _group_report(dq)
            payload["dual"]["blocks"] = list(d.algebra.block_dims)
        payload["kind"] = "group"
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "group", "error": str(e)}, "", EXIT_CERT_FAIL)


def _group_report(qg) -> dict:
    return {
        "label": qg.algebra.label,
        "blocks": list(qg.algebra.block_dims),
        "irrep_dims": [c.dim for c in qg.irreps],
        "qdims": [float(c.qdim) for c in qg.irreps],
        "residuals": {k: float(v) for k, v in sorted(qg.report.residuals.items())},
        "passed": qg.report.passed,
    }


@group.command("verify")
@click.option("--hopf", "hopf_path", required=True, help="Hopf data JSON")
@click.pass_obj
def group_verify(ctx: Ctx, hopf_path):
    try:
        qg, h = _load_group(ctx, hopf_path)
        payload = _group_report(qg)
        payload["kind"] = "group"
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        payload = {"kind": "group", "error": str(e)}
        if getattr(e, "report", None) is not None:
            payload["residuals"] = {
                k: float(v) for k, v in sorted(e.report.residuals.items())
            }
        ctx.emit(payload, jsonio.file_hash(hopf_path)
                 if not hopf_path.startswith("catalog:") else "", EXIT_CERT_FAIL)


# -- action -----------------------------------------------------------------

@main.group()
def action():
    """Certify actions, spectral data, freeness and axiom suites."""


@action.command("check")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def action_check(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        payload = {
            "kind": "action",
            "label": act.label,
            "carrier": jsonio.algebra_to_json(act.carrier),
            "residuals": {k: float(v) for k, v in sorted(act.report.residuals.items())},
            "density_rank": act.report.extras.get("density_rank"),
            "spectral_dims": act.report.extras.get("spectral_dims"),
            "passed": act.report.passed,
        }
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "action", "error": str(e)}, "", EXIT_CERT_FAIL)


@action.command("spectral")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def action_spectral(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        dims = {}
        for co in act.group.irreps:
            dims[str(co.index)] = int(act.spectral_basis(co.index).shape[0])
        payload = {"kind": "spectral", "subspace_dims": dims,
                   "spectral_residuals": {
                       k: float(v) for k, v in sorted(act.report.residuals.items())
                       if k.startswith(("E_", "spectral"))
                   }}
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "spectral", "error": str(e)}, "", EXIT_CERT_FAIL)


@action.command("freeness")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def action_freeness(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        from .actions import check_freeness

        fr = check_freeness(act)
        formulas = freeness_formulas(act, ctx.eval_budget)
        payload = {"kind": "freeness", "rank": fr.to_dict(),
                   "formulas": formulas.to_dict()}
        ctx.emit(payload, h, EXIT_OK if fr.free else EXIT_CERT_FAIL)
    except CertificationError as e:
        ctx.emit({"kind": "freeness", "error": str(e)}, "", EXIT_CERT_FAIL)


@action.command("axioms")
@click.option("--action", "action_path", required=True)
@click.option("--flavor", default="compact", type=click.Choice(["compact", "discrete"]))
@click.option("--perturb", default=0.0, help="inject a defect of this size into alpha")
@click.pass_obj
def action_axioms(ctx: Ctx, action_path, flavor, perturb):
    try:
        act, h = _load_action(ctx, action_path)
        if perturb > 0:
            from .actions import Action
            from .maps import CertReport

            rng = np.random.default_rng(ctx.seed)
            N = rng.normal(size=act.alpha.matrix.shape) + 1j * rng.normal(
                size=act.alpha.matrix.shape
            )
            N /= np.linalg.norm(N, 2)
            act = Action(
                act.group, act.carrier,
                LinearMap(act.alpha.domain, act.alpha.codomain,
                          act.alpha.matrix + perturb * N),
                CertReport("uncertified"), label=act.label + "+perturbation",
            )
        entries, binding = axiom_suite(act, flavor)
        results = evaluate_suite(entries, binding, ctx.eval_budget)
        payload = {
            "kind": "axioms",
            "flavor": flavor,
            "perturb": perturb,
            "results": [r.to_dict() for r in results],
            "all_pass": all(r.passed for r in results),
        }
        code = EXIT_OK if payload["all_pass"] else EXIT_CERT_FAIL
        ctx.emit(payload, h, code)
    except CertificationError as e:
        ctx.emit({"kind": "axioms", "error": str(e)}, "", EXIT_CERT_FAIL)


# -- crossed ----------------------------------------------------------------

@main.group()
def crossed():
    """Crossed products, dual actions, duality and K-theory."""


@crossed.command("build")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def crossed_build(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        cp = crossed_product(act, tol=ctx.tol)
        payload = {
            "kind": "crossed",
            "blocks": list(cp.carrier.block_dims),
            "span_dim": cp.span_dim,
            "center_dim": cp.report.extras.get("center_dim"),
            "residuals": {k: float(v) for k, v in sorted(cp.report.residuals.items())},
        }
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "crossed", "error": str(e)}, "", EXIT_CERT_FAIL)


@crossed.command("dual")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def crossed_dual(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        da = dual_action(crossed_product(act, tol=ctx.tol), tol=ctx.tol)
        payload = {
            "kind": "dual_action",
            "axiom_1prime_residual": float(da.per_block_action_residual),
            "axiom_2prime_ranks": [[int(a), int(b)] for a, b in da.per_block_density_ranks],
            "residuals": {k: float(v) for k, v in sorted(da.report.residuals.items())},
        }
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "dual_action", "error": str(e)}, "", EXIT_CERT_FAIL)


@crossed.command("takai")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def crossed_takai(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        tk = takai_check(act, tol=ctx.tol)
        payload = {"kind": "takai", **tk.to_dict()}
        ctx.emit(payload, h, EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "takai", "error": str(e)}, "", EXIT_CERT_FAIL)


@crossed.command("k0")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def crossed_k0(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        rr = k0_rokhlin_range(act, tol=ctx.tol)
        payload = {"kind": "k0", **rr.to_dict()}
        ctx.emit(payload, h, EXIT_OK if rr.matches else EXIT_CERT_FAIL)
    except CertificationError as e:
        ctx.emit({"kind": "k0", "error": str(e)}, "", EXIT_CERT_FAIL)


# -- rokhlin ----------------------------------------------------------------

@main.group()
def rokhlin():
    """Rokhlin witnesses, dimension bounds, obstructions, duality."""


@rokhlin.command("verify")
@click.option("--action", "action_path", required=True)
@click.option("--witness", "witness_path", required=True, help="certificate JSON")
@click.pass_obj
def rokhlin_verify(ctx: Ctx, action_path, witness_path):
    try:
        act, h = _load_action(ctx, action_path)
        obj = jsonio.load_file(witness_path)
        cert = _reverify(act, obj, ctx.tol)
        payload = {"kind": "rokhlin_verify", **cert.to_dict()}
        ctx.emit(payload, h, EXIT_OK if cert.verified else EXIT_CERT_FAIL)
    except CertificationError as e:
        ctx.emit({"kind": "rokhlin_verify", "error": str(e)}, "", EXIT_CERT_FAIL)


def _reverify(act, obj, tol) -> WitnessCertificate:
    from .algebra import tensor_algebra

    if "report" in obj and "maps" not in obj:
        obj = obj["report"]
    GA = tensor_algebra(act.group.algebra, act.carrier)
    maps = [
        LinearMap(GA, act.carrier, jsonio.matrix_from_json(m)) for m in obj["maps"]
    ]
    if obj.get("kind", "").startswith("rokhlin_zero") or obj.get("d", 0) == 0 and len(maps) == 1:
        return verify_rokhlin_witness(act, maps[0], tol)
    from .rokhlin import verify_oz_certificate
    from .actions import tensor_action, translation_action

    big = tensor_action(translation_action(act.group, tol=tol), act.carrier, tol=tol)
    return verify_oz_certificate(act.alpha, act, big, maps, tol)


@rokhlin.command("find")
@click.option("--action", "action_path", required=True)
@click.pass_obj
def rokhlin_find(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        res = find_rokhlin_witness(act, ctx.budget, ctx.tol)
        if isinstance(res, WitnessCertificate) and res.verified:
            ctx.emit({"kind": "rokhlin_find", **res.to_dict()}, h, EXIT_OK)
        ctx.emit({"kind": "rokhlin_find", **res.to_dict()}, h, EXIT_NOT_FOUND)
    except CertificationError as e:
        ctx.emit({"kind": "rokhlin_find", "error": str(e)}, "", EXIT_CERT_FAIL)


@rokhlin.command("dim")
@click.option("--action", "action_path", required=True)
@click.option("--dmax", default=1, show_default=True)
@click.pass_obj
def rokhlin_dim(ctx: Ctx, action_path, dmax):
    try:
        act, h = _load_action(ctx, action_path)
        res = rokhlin_dimension_upper(act, dmax, ctx.budget, ctx.tol)
        if isinstance(res, WitnessCertificate) and res.verified:
            ctx.emit({"kind": "rokhlin_dim", **res.to_dict()}, h, EXIT_OK)
        ctx.emit({"kind": "rokhlin_dim", **res.to_dict()}, h, EXIT_NOT_FOUND)
    except CertificationError as e:
        ctx.emit({"kind": "rokhlin_dim", "error": str(e)}, "", EXIT_CERT_FAIL)


@rokhlin.command("obstruction")
@click.option("--group", "group_path", required=True)
@click.option("--target", required=True, help="target algebra, e.g. M3 or 1,2")
@click.pass_obj
def rokhlin_obstruction(ctx: Ctx, group_path, target):
    try:
        qg, h = _load_group(ctx, group_path)
        rep = trace_obstruction(qg, _target_algebra(target))
        payload = {"kind": "obstruction", **rep.to_dict()}
        ctx.emit(payload, h, EXIT_OBSTRUCTION if rep.obstructed else EXIT_OK)
    except CertificationError as e:
        ctx.emit({"kind": "obstruction", "error": str(e)}, "", EXIT_CERT_FAIL)


@rokhlin.command("repdim")
@click.option("--action", "action_path", required=True,
              help="compact action whose dual side is measured")
@click.pass_obj
def rokhlin_repdim(ctx: Ctx, action_path):
    try:
        act, h = _load_action(ctx, action_path)
        da = dual_action(crossed_product(act, tol=ctx.tol), tol=ctx.tol)
        cert, _ = representation_dimension_witness(
            da, act.group, budget=ctx.budget, tol=ctx.tol
        )
        if isinstance(cert, WitnessCertificate) and cert.verified:
            ctx.emit({"kind": "repdim", **cert.to_dict()}, h, EXIT_OK)
        ctx.emit({"kind": "repdim", **cert.to_dict()}, h, EXIT_NOT_FOUND)
    except CertificationError as e:
        ctx.emit({"kind": "repdim", "error": str(e)}, "", EXIT_CERT_FAIL)


@main.command("verify-cert")
@click.option("--cert", "cert_path", required=True)
@click.option("--action", "action_path", required=True)
@click.pass_obj
def verify_cert(ctx: Ctx, cert_path, action_path):
    """Re-verify a serialized certificate; recorded residuals must reproduce
    within 1e-12."""
    try:
        act, h = _load_action(ctx, action_path)
        obj = jsonio.load_file(cert_path)
        if "report" in obj and "maps" not in obj:
            obj = obj["report"]
        cert = _reverify(act, obj, ctx.tol)
        drift = max(
            abs(cert.residuals.get(k, 0.0) - v)
            for k, v in obj.get("residuals", {}).items()
        ) if obj.get("residuals") else 0.0
        payload = {
            "kind": "verify_cert",
            "verdict": cert.verdict,
            "residual_drift": float(drift),
            "reproducible": bool(drift <= 1e-12),
            **cert.to_dict(),
        }
        ok = cert.verified and drift <= 1e-12
        ctx.emit(payload, h, EXIT_OK if ok else EXIT_CERT_FAIL)
    except CertificationError as e:
        ctx.emit({"kind": "verify_cert", "error": str(e)}, "", EXIT_CERT_FAIL)


# -- catalog ----------------------------------------------------------------

@main.group("catalog")
def catalog_cmd():
    """The shipped example catalog."""


@catalog_cmd.command("list")
@click.pass_obj
def catalog_list(ctx: Ctx):
    from .catalog import catalog_actions, free_expectation, group_names

    payload = {
        "kind": "catalog",
        "groups": group_names(),
        "actions": sorted(free_expectation().keys()),
    }
    ctx.emit(payload, "", EXIT_OK)


@catalog_cmd.command("export")
@click.option("--dir", "out_dir", required=True)
@click.pass_obj
def catalog_export(ctx: Ctx, out_dir):
    import os

    from .catalog import GROUP_TABLES, catalog_actions

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, table in GROUP_TABLES.items():
        path = os.path.join(out_dir, f"{name}.json")
        jsonio.dump_file(jsonio.group_table_to_json(table, name), path)
        written.append(path)
    for name, act in catalog_actions().items():
        path = os.path.join(out_dir, f"{name}.json")
        jsonio.dump_file(jsonio.action_to_json(act), path)
        written.append(path)
    ctx.emit({"kind": "catalog_export", "written": sorted(written)}, "", EXIT_OK)


if __name__ == "__main__":
    main()
