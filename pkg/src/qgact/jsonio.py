"""JSON schemas and deterministic report serialization.

Complex numbers are [re, im] pairs, matrices row-major; FiniteCStar is
{"label": str, "blocks": [int]}.  Round-trips are bit-exact (shortest
round-trippable float repr).  Reports embed the input hash and tool version
and never contain timestamps, so identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import __version__
from .algebra import FiniteCStar
from .maps import LinearMap


def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(v) -> complex:
    return complex(v[0], v[1])


def matrix_to_json(M: np.ndarray) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(M, dtype=complex)]


def matrix_from_json(rows) -> np.ndarray:
    return np.array(
        [[complex_from_json(v) for v in row] for row in rows], dtype=complex
    )


def algebra_to_json(A: FiniteCStar) -> dict:
    return {"label": A.label, "blocks": list(A.block_dims)}


def algebra_from_json(obj) -> FiniteCStar:
    return FiniteCStar(tuple(int(b) for b in obj["blocks"]), obj.get("label", ""))


def map_to_json(m: LinearMap) -> dict:
    return {
        "domain": algebra_to_json(m.domain),
        "codomain": algebra_to_json(m.codomain),
        "matrix": matrix_to_json(m.matrix),
    }


def map_from_json(obj) -> LinearMap:
    return LinearMap(
        algebra_from_json(obj["domain"]),
        algebra_from_json(obj["codomain"]),
        matrix_from_json(obj["matrix"]),
    )


def group_to_json(qg) -> dict:
    return {
        "algebra": algebra_to_json(qg.algebra),
        "comult": matrix_to_json(qg.comult.matrix),
    }


def group_table_to_json(table, label: str = "") -> dict:
    return {"label": label, "table": [list(map(int, row)) for row in table]}


def action_to_json(act) -> dict:
    return {
        "group": group_to_json(act.group),
        "carrier": algebra_to_json(act.carrier),
        "alpha": matrix_to_json(act.alpha.matrix),
        "label": act.label,
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def dump_file(obj, path) -> str:
    data = dumps(obj)
    with open(path, "w") as fh:
        fh.write(data)
        fh.write("\n")
    return data


def load_file(path):
    with open(path) as fh:
        return json.load(fh)


def file_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def data_hash(obj) -> str:
    return hashlib.sha256(dumps(obj).encode()).hexdigest()


def report_envelope(kind: str, input_hash: str, tol: float, seed, budget) -> dict:
    return {
        "kind": kind,
        "tool": "qgact",
        "version": __version__,
        "input_hash": input_hash,
        "tol": tol,
        "seed": seed,
        "budget": budget,
    }
