"""Closed-loop stability certificate."""

from ..controller.constraints import build_cdb
from .global_model import GlobalModel, area_injectors, build_global_K, load_sensitivities, save_sensitivities
from .certificate import (
    AreaBlock,
    AreaDiagnostics,
    CertificateInputs,
    CertificateReport,
    build_certificate,
    closed_loop_constant,
    closed_loop_operator,
    constraint_values,
    dual_map,
    equilibrium_residual,
    iterate_closed_loop,
    primal_response,
)

__all__ = [
    "build_cdb",
    "GlobalModel",
    "area_injectors",
    "build_global_K",
    "load_sensitivities",
    "save_sensitivities",
    "AreaBlock",
    "AreaDiagnostics",
    "CertificateInputs",
    "CertificateReport",
    "build_certificate",
    "closed_loop_constant",
    "closed_loop_operator",
    "constraint_values",
    "dual_map",
    "equilibrium_residual",
    "iterate_closed_loop",
    "primal_response",
]
