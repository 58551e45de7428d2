"""qgact: computational toolkit for finite compact quantum groups and their
actions on finite-dimensional C*-algebras."""

__version__ = "0.1.0"

from .algebra import AlgebraElement, FiniteCStar, Functional, op_norm, tensor_algebra
from .maps import CertificationError, CertReport, LinearMap
from .qgroup import QuantumGroup, dual, from_finite_group, from_hopf_data
from .actions import (
    Action,
    check_freeness,
    fixed_point_algebra,
    make_action,
    tensor_action,
    translation_action,
    trivial_action,
)

__all__ = [
    "AlgebraElement",
    "FiniteCStar",
    "Functional",
    "op_norm",
    "tensor_algebra",
    "CertificationError",
    "CertReport",
    "LinearMap",
    "QuantumGroup",
    "dual",
    "from_finite_group",
    "from_hopf_data",
    "Action",
    "check_freeness",
    "fixed_point_algebra",
    "make_action",
    "tensor_action",
    "translation_action",
    "trivial_action",
    "__version__",
]
