"""Closed-loop stability certificate and equilibrium diagnostics."""

import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field

from ..controller.local_controller import LocalController, primal_update
from ..exceptions import CertificateError
from ..hierarchy.tree import ControlAreaTree
from .global_model import GlobalModel, VderModel

logger = logging.getLogger(__name__)

CertificateForm = Literal["printed", "derived"]


def _norm2(matrix: np.ndarray) -> float:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


@dataclass(frozen=True, eq=False)
class AreaBlock:
    """
    Per-area data of the closed loop.

    D maps the parent's stacked decision vector into this area's constraint
    rows; b already contains the reference terms (absolute set-point at the
    root, baseline import for child areas).
    """
    area_id: str
    parent: Optional[str]
    C: np.ndarray
    D: np.ndarray
    b: np.ndarray
    K_local: np.ndarray
    alpha: np.ndarray
    r_dual: np.ndarray
    r_primal: float
    m: float
    c2: np.ndarray
    c1: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha_base: float = 0.0

    @property
    def n_duals(self) -> int:
        return self.C.shape[0]

    @property
    def n_x(self) -> int:
        return self.K_local.shape[1]

    def primal(self, duals: np.ndarray) -> np.ndarray:
        """∇F* realized by the controller's primal step."""
        if self.n_x == 0:
            return np.zeros(0)
        linear = (self.C @ self.K_local).T @ duals
        return primal_update(linear, self.c2, self.c1, self.lower, self.upper, self.r_primal)


@dataclass(frozen=True, eq=False)
class CertificateInputs:
    blocks: Tuple[AreaBlock, ...]
    K: Dict[Tuple[str, str], np.ndarray]
    k: Dict[str, np.ndarray]
    adjacency: np.ndarray
    vder_model: VderModel = "transfer"

    @property
    def order(self) -> List[str]:
        return [block.area_id for block in self.blocks]

    @property
    def dual_slices(self) -> Dict[str, slice]:
        slices, start = {}, 0
        for block in self.blocks:
            slices[block.area_id] = slice(start, start + block.n_duals)
            start += block.n_duals
        return slices

    @property
    def n_duals(self) -> int:
        return sum(block.n_duals for block in self.blocks)

    @property
    def alpha(self) -> np.ndarray:
        return np.concatenate([block.alpha for block in self.blocks])

    def split(self, d: np.ndarray) -> Dict[str, np.ndarray]:
        return {area_id: d[s] for area_id, s in self.dual_slices.items()}

    @classmethod
    def from_controllers(
        cls,
        controllers: Dict[str, LocalController],
        tree: ControlAreaTree,
        global_model: GlobalModel,
        references: Dict[str, Tuple[float, float]],
        vder_model: Optional[VderModel] = None,
        offsets: Optional[Dict[str, np.ndarray]] = None,
    ) -> "CertificateInputs":
        """
        Collect the closed-loop data of a compiled controller hierarchy.

        Args:
            references: Absolute (p, q) set-point of the root and baseline import of every child
            offsets: Measurement offsets k_i; defaults to the linearization point
        """
        vder_model = vder_model or global_model.vder_model
        blocks = []
        for area_id in tree.order:
            lc = controllers[area_id]
            parent = tree.parent(area_id)
            b = lc.b + lc.D @ np.asarray(references[area_id], dtype=float)
            if parent is None:
                D = np.zeros((lc.layout.size, 0))
            else:
                D = lc.D @ np.vstack(tree.selection_maps(parent, area_id))
            blocks.append(
                AreaBlock(
                    area_id=area_id,
                    parent=parent,
                    C=lc.C,
                    D=D,
                    b=b,
                    K_local=lc.sensitivity.K,
                    alpha=lc.alpha,
                    r_dual=lc.r_dual,
                    r_primal=lc.r_primal,
                    m=lc.strong_convexity(),
                    c2=lc.c2,
                    c1=lc.c1,
                    lower=lc.lower,
                    upper=lc.upper,
                    alpha_base=lc.config.alpha,
                )
            )
        K = {(i, j): global_model.block(i, j, vder_model) for i in tree.order for j in tree.order}
        k = dict(offsets) if offsets is not None else dict(global_model.offsets)
        return cls(tuple(blocks), K, k, tree.adjacency, vder_model)


def primal_response(inputs: CertificateInputs, d: np.ndarray) -> Dict[str, np.ndarray]:
    duals = inputs.split(d)
    return {block.area_id: block.primal(duals[block.area_id]) for block in inputs.blocks}


def constraint_values(inputs: CertificateInputs, x: Dict[str, np.ndarray]) -> np.ndarray:
    """C_i (k_i + Σ_j K_ij x_j) + D_i x_P(i) + b_i, stacked."""
    values = []
    for block in inputs.blocks:
        y = inputs.k[block.area_id].copy()
        for j in inputs.order:
            if x[j].size:
                y = y + inputs.K[(block.area_id, j)] @ x[j]
        g = block.C @ y + block.b
        if block.parent is not None and x[block.parent].size:
            g = g + block.D @ x[block.parent]
        values.append(g)
    return np.concatenate(values)


def closed_loop_operator(inputs: CertificateInputs, d: np.ndarray) -> np.ndarray:
    """
    G(d) = R d − (C K + D𝒜ᵀ) ∇F*(d), without the constant C k + b.
    """
    x = primal_response(inputs, d)
    affine = []
    for block in inputs.blocks:
        y = np.zeros(block.C.shape[1])
        for j in inputs.order:
            if x[j].size:
                y = y + inputs.K[(block.area_id, j)] @ x[j]
        g = block.C @ y
        if block.parent is not None and x[block.parent].size:
            g = g + block.D @ x[block.parent]
        affine.append(g)
    r = np.concatenate([block.r_dual for block in inputs.blocks])
    return r * d - np.concatenate(affine)


def closed_loop_constant(inputs: CertificateInputs) -> np.ndarray:
    """C k + b, stacked."""
    return np.concatenate([block.C @ inputs.k[block.area_id] + block.b for block in inputs.blocks])


def dual_map(inputs: CertificateInputs, d: np.ndarray, alpha: Optional[np.ndarray] = None) -> np.ndarray:
    """One compact closed-loop step P≥0(d − α G(d) + α (C k + b))."""
    alpha = inputs.alpha if alpha is None else np.broadcast_to(np.asarray(alpha, dtype=float), d.shape)
    return np.maximum(d - alpha * (closed_loop_operator(inputs, d) - closed_loop_constant(inputs)), 0.0)


def equilibrium_residual(
    d: np.ndarray,
    inputs: CertificateInputs,
    alpha: Optional[np.ndarray] = None,
    scaled: bool = True,
) -> float:
    """
    ‖d − P≥0(d − α G(d) + α (C k + b))‖₂, divided by max(1, ‖d‖₂) when scaled.
    """
    d = np.asarray(d, dtype=float)
    residual = float(np.linalg.norm(d - dual_map(inputs, d, alpha)))
    if scaled:
        residual /= max(1.0, float(np.linalg.norm(d)))
    return residual


def iterate_closed_loop(
    inputs: CertificateInputs,
    d0: Optional[np.ndarray] = None,
    alpha: Optional[np.ndarray] = None,
    ticks: int = 10000,
    tol: float = 1e-6,
) -> Tuple[np.ndarray, bool, int]:
    """
    Run the compact linear closed loop (instantaneous DERs).

    Returns:
        (final duals, converged, ticks used)
    """
    d = np.zeros(inputs.n_duals) if d0 is None else np.asarray(d0, dtype=float).copy()
    for tick in range(1, ticks + 1):
        d = dual_map(inputs, d, alpha)
        if not np.all(np.isfinite(d)):
            return d, False, tick
        if equilibrium_residual(d, inputs, alpha) < tol:
            return d, True, tick
    return d, False, ticks


class AreaDiagnostics(BaseModel):
    """Model-mismatch and coupling norms of one area."""
    area: str
    strong_convexity: float
    dual_regularization: float
    mismatch_norm: float = Field(..., description="‖K_ii − K_i‖₂ in the certificate's VDER model")
    mismatch_norm_physical: float
    coupling_norms: Dict[str, float] = Field(default_factory=dict, description="‖K_ij‖₂ per other area")
    coupling_norms_physical: Dict[str, float] = Field(default_factory=dict)


class CertificateReport(BaseModel):
    """Outcome of the stability test."""
    form: str
    vder_model: str
    areas: List[str]
    M: List[List[float]]
    L: float
    lambda_min: float
    passed: bool
    alpha_bar: Optional[float] = Field(None, description="Largest admissible uniform gain, λ_min(M+Mᵀ)/L²")
    gain_ratio: float = Field(..., description="λ_max(α)²/λ_min(α) of the configured gains")
    gains_ok: bool
    max_gain_scale: Optional[float] = Field(None, description="Largest factor the configured gains may be scaled by")
    alpha_max: Optional[Dict[str, float]] = Field(None, description="Largest base step size α_i per area at the configured gain shape")
    condition_number: float
    diagnostics: List[AreaDiagnostics]
    notes: List[str] = Field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if not self.passed:
            return 2
        if not self.gains_ok:
            return 3
        return 0

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, allow_nan=True)

    def to_text(self) -> str:
        lines = [
            "STABILITY CERTIFICATE",
            "=" * 50,
            f"Form: {self.form}",
            f"VDER model: {self.vder_model}",
            f"Areas: {', '.join(self.areas)}",
            f"L: {self.L:.6e}",
            f"lambda_min(M + M^T): {self.lambda_min:.6e}",
            f"Certificate: {'PASSED' if self.passed else 'FAILED'}",
            f"Configured gain ratio: {self.gain_ratio:.6e}",
        ]
        if self.alpha_bar is not None:
            lines.append(f"Max uniform gain (alpha_bar): {self.alpha_bar:.6e}")
            lines.append(f"Gains within bound: {'yes' if self.gains_ok else 'no'}")
        if self.max_gain_scale is not None:
            lines.append(f"Max gain scale: {self.max_gain_scale:.6e}")
        if self.alpha_max:
            for area, value in self.alpha_max.items():
                lines.append(f"  alpha_max[{area}]: {value:.6e}")
        lines.append(f"cond(M + M^T): {self.condition_number:.3e}")
        lines.append("")
        lines.append("M:")
        for row in self.M:
            lines.append("  " + "  ".join(f"{value: .4e}" for value in row))
        lines.append("")
        lines.append("Per-area diagnostics:")
        for diag in self.diagnostics:
            lines.append(
                f"  {diag.area}: m={diag.strong_convexity:.4g}, ||R^d||={diag.dual_regularization:.4g}, "
                f"||K_ii-K_i||={diag.mismatch_norm:.4e} (physical {diag.mismatch_norm_physical:.4e})"
            )
            for other, value in diag.coupling_norms.items():
                physical = diag.coupling_norms_physical.get(other, float("nan"))
                lines.append(f"    ||K_{diag.area},{other}||={value:.4e} (physical {physical:.4e})")
        for note in self.notes:
            lines.append(f"Note: {note}")
        return "\n".join(lines) + "\n"


def _assemble(inputs: CertificateInputs) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(C K + D𝒜ᵀ, blkdiag K_i, blkdiag C_i)."""
    order = inputs.order
    parents = {block.area_id: block.parent for block in inputs.blocks}
    rows = []
    for block in inputs.blocks:
        row = []
        for j in order:
            part = block.C @ inputs.K[(block.area_id, j)]
            if parents[block.area_id] == j:
                part = part + block.D
            row.append(part)
        rows.append(np.hstack(row) if row else np.zeros((block.n_duals, 0)))
    coupled = np.vstack(rows)
    K_d = scipy.linalg.block_diag(*[block.K_local for block in inputs.blocks])
    C_d = scipy.linalg.block_diag(*[block.C for block in inputs.blocks])
    return coupled, K_d, C_d


def build_certificate(
    inputs: CertificateInputs,
    form: CertificateForm = "printed",
    physical_K: Optional[Dict[Tuple[str, str], np.ndarray]] = None,
) -> CertificateReport:
    """
    Evaluate L, M and the positivity test.

    "printed" uses L = (‖R‖ + ‖CK + D𝒜ᵀ‖‖K_d‖‖C‖) / min(m + r^p) and the
    matching M entries; "derived" uses the bound obtained directly from
    strong monotonicity of G, which makes ½λ_min(M + Mᵀ) a monotonicity
    modulus of the operator.

    Args:
        physical_K: Blocks with zeroed VDER columns, used for diagnostics only

    Raises:
        CertificateError: eigen-solve failure
    """
    if form not in ("printed", "derived"):
        raise ValueError(f"Unknown certificate form: {form}. Available: ['printed', 'derived']")
    blocks = {block.area_id: block for block in inputs.blocks}
    order = inputs.order
    n = len(order)
    index = {area_id: k for k, area_id in enumerate(order)}

    def weight(area_id: str) -> float:
        block = blocks[area_id]
        if block.n_x == 0 or not np.isfinite(block.m):
            return 0.0
        return 1.0 / (block.m + block.r_primal)

    norm_C = {a: _norm2(blocks[a].C) for a in order}
    norm_D = {a: _norm2(blocks[a].D) for a in order}
    norm_K = {a: _norm2(blocks[a].K_local) for a in order}
    norm_R = {a: float(np.max(blocks[a].r_dual)) if blocks[a].r_dual.size else 0.0 for a in order}
    min_R = {a: float(np.min(blocks[a].r_dual)) if blocks[a].r_dual.size else 0.0 for a in order}

    M = np.zeros((n, n))
    for i in order:
        bi = blocks[i]
        mismatch = _norm2(inputs.K[(i, i)] - bi.K_local)
        if form == "printed":
            M[index[i], index[i]] = norm_R[i] - mismatch * weight(i) * norm_D[i] * norm_C[i] ** 2 * norm_K[i]
        else:
            M[index[i], index[i]] = min_R[i] - norm_C[i] ** 2 * mismatch * norm_K[i] * weight(i)
        for j in order:
            if j == i:
                continue
            coupling = _norm2(inputs.K[(i, j)])
            if form == "printed":
                edge = inputs.adjacency[index[i], index[j]]
                M[index[i], index[j]] = (
                    -coupling * weight(j) * norm_C[i] * norm_C[j] * norm_K[j] - edge * norm_D[i] * norm_C[j] * weight(j)
                )
            else:
                parent_term = norm_D[i] * norm_C[j] * norm_K[j] * weight(j) if bi.parent == j else 0.0
                M[index[i], index[j]] = -norm_C[i] * norm_C[j] * coupling * norm_K[j] * weight(j) - parent_term

    coupled, K_d, C_d = _assemble(inputs)
    r_all = np.concatenate([block.r_dual for block in inputs.blocks])
    norm_R_all = float(np.max(r_all)) if r_all.size else 0.0
    weights = [block.m + block.r_primal for block in inputs.blocks if block.n_x and np.isfinite(block.m)]
    min_weight = min(weights) if weights else float("inf")
    interaction = _norm2(coupled) * _norm2(K_d) * _norm2(C_d)
    if form == "printed":
        L = (norm_R_all + interaction) / min_weight
    else:
        L = norm_R_all + interaction / min_weight

    try:
        eigenvalues = scipy.linalg.eigh(M + M.T, eigvals_only=True)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise CertificateError(f"Eigen-solve of M + M^T failed: {e}") from e
    lambda_min = float(eigenvalues[0])
    lambda_max_abs = float(np.max(np.abs(eigenvalues)))
    min_abs = float(np.min(np.abs(eigenvalues)))
    condition = lambda_max_abs / min_abs if min_abs > 0 else float("inf")
    passed = bool(lambda_min > 0.0)

    alpha = inputs.alpha
    positive = alpha[alpha > 0]
    gain_ratio = float(np.max(alpha) ** 2 / np.min(positive)) if positive.size == alpha.size and alpha.size else float("inf")

    alpha_bar = None
    gains_ok = False
    max_gain_scale = None
    alpha_max = None
    if passed and L > 0:
        alpha_bar = lambda_min / L**2
        gains_ok = gain_ratio < alpha_bar
        if np.isfinite(gain_ratio) and gain_ratio > 0:
            max_gain_scale = alpha_bar / gain_ratio
            alpha_max = {block.area_id: block.alpha_base * max_gain_scale for block in inputs.blocks}

    diagnostics = []
    for i in order:
        bi = blocks[i]
        physical = physical_K or inputs.K
        diagnostics.append(
            AreaDiagnostics(
                area=i,
                strong_convexity=bi.m,
                dual_regularization=norm_R[i],
                mismatch_norm=_norm2(inputs.K[(i, i)] - bi.K_local),
                mismatch_norm_physical=_norm2(physical[(i, i)] - bi.K_local),
                coupling_norms={j: _norm2(inputs.K[(i, j)]) for j in order if j != i},
                coupling_norms_physical={j: _norm2(physical[(i, j)]) for j in order if j != i},
            )
        )

    notes = []
    if inputs.vder_model == "transfer":
        notes.append("VDER channels modeled as ideal power transfer at the child interface bus")
    else:
        notes.append("VDER channels carry no direct plant response (physical DER model)")
    if condition > 1e12:
        notes.append(f"M + M^T is badly conditioned ({condition:.2e}); unit scaling dominates the test")

    report = CertificateReport(
        form=form,
        vder_model=inputs.vder_model,
        areas=order,
        M=M.tolist(),
        L=float(L),
        lambda_min=lambda_min,
        passed=passed,
        alpha_bar=alpha_bar,
        gain_ratio=gain_ratio,
        gains_ok=gains_ok,
        max_gain_scale=max_gain_scale,
        alpha_max=alpha_max,
        condition_number=condition,
        diagnostics=diagnostics,
        notes=notes,
    )
    if passed:
        logger.info(f"Certificate passed: lambda_min={lambda_min:.4e}, L={L:.4e}, gains_ok={gains_ok}")
    else:
        logger.warning(f"Certificate failed: lambda_min={lambda_min:.4e}")
    return report
