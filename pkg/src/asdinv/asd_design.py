"""Design of the closed linear skeleton and its structural verification.

Builds A = A0 + B K^T, redefines the output through eigenvectors of A^T
(so that C^T A = -Lambda C^T), realizes the transfer path
G(s) = (s I + Lambda)^-1 C^T B, and checks every identity the design
relies on, including the additive decomposition y = y_p + y_s along
simulated trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ComplexSpectrum,
    LyapunovFailure,
    MultiInput,
    SelectionNotEigenvalue,
    SingularCB,
    SingularSystem,
    Uncontrollable,
    Unstable,
)
from .numlin import ackermann_gain, controllability_rank, real_eig, solve_lyapunov
from .plants import UncertainPlant

__all__ = [
    "LinearCore",
    "LtiRealization",
    "StructureReport",
    "build_core",
    "build_G",
    "decompose",
    "verify_theorem1",
]


@dataclass(frozen=True)
class LinearCore:
    """The designed linear skeleton shared by controller and analysis.

    Invariants (established by build_core): A = A0 + B K^T is Hurwitz
    with a real spectrum, C has unit-norm columns with C^T A = -Lambda C^T,
    det(C^T B) != 0, and P A + A^T P = -M with P, M > 0.
    """

    n: int
    m: int
    A0: np.ndarray
    B: np.ndarray
    K: np.ndarray
    A: np.ndarray
    C: np.ndarray
    Lam: np.ndarray  # m x m diagonal, positive
    P: np.ndarray
    M: np.ndarray

    @property
    def CtB(self) -> np.ndarray:
        return self.C.T @ self.B

    @property
    def lam_diag(self) -> np.ndarray:
        return np.diag(self.Lam)


@dataclass(frozen=True)
class LtiRealization:
    """State-space realization (F, G_in, H, D) of a proper transfer matrix."""

    F: np.ndarray
    G_in: np.ndarray
    H: np.ndarray
    D: np.ndarray

    @property
    def q(self) -> int:
        return self.F.shape[0]

    def dc_gain(self) -> np.ndarray:
        return self.D - self.H @ np.linalg.solve(self.F, self.G_in)

    def response(self, s: complex) -> np.ndarray:
        return self.D + self.H @ np.linalg.solve(
            s * np.eye(self.q) - self.F, self.G_in
        )


@dataclass(frozen=True)
class StructureReport:
    theorem1_residual: float
    residual_budget: float
    det_ctb: float
    det_tol: float
    c_rank: int
    m: int
    checks: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())


def build_core(
    A0: np.ndarray,
    B: np.ndarray,
    K_or_poles,
    selected_eigs: Sequence[float],
    M_choice: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    det_tol: float = 1e-9,
    select_tol: float = 1e-4,
) -> LinearCore:
    """Run design steps 1-2: feedback gain, output matrix, Lyapunov pair.

    K_or_poles is either an explicit n x m gain or, for single-input
    plants, a sequence of n desired real poles handed to Ackermann.
    selected_eigs are the m eigenvalues of A (negative reals, repeats
    allowed for decoupled blocks) whose A^T eigenvectors become the
    columns of C; Lambda collects their negatives.
    """
    A0 = np.asarray(A0, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n, m = B.shape
    if A0.shape != (n, n):
        raise Uncontrollable(f"A0 shape {A0.shape} inconsistent with B {B.shape}")
    if controllability_rank(A0, B) < n:
        raise Uncontrollable("(A0, B) is not controllable")

    K_arr = np.asarray(K_or_poles, dtype=float)
    if K_arr.ndim == 2 and K_arr.shape == (n, m):
        K = K_arr
    elif K_arr.ndim <= 1 and K_arr.size == n:
        if m != 1:
            raise MultiInput("pole placement only covers single-input plants")
        K = ackermann_gain(A0, B, K_arr.ravel())
    else:
        raise Uncontrollable(
            f"K_or_poles must be an {n}x{m} gain or {n} poles, got shape {K_arr.shape}"
        )

    A = A0 + B @ K.T
    pairs = real_eig(A, tol=tol)  # raises ComplexSpectrum
    if any(p.value >= 0 for p in pairs):
        raise Unstable(f"A = A0 + B K^T is not Hurwitz: spectrum {[p.value for p in pairs]}")

    selected = list(selected_eigs)
    if len(selected) != m:
        raise SelectionNotEigenvalue(f"need {m} selected eigenvalues, got {len(selected)}")
    scale = max(np.max(np.abs([p.value for p in pairs])), 1.0)
    used = [False] * len(pairs)
    cols = []
    lam = []
    for want in selected:
        best, best_err = None, np.inf
        for i, p in enumerate(pairs):
            if used[i]:
                continue
            err = abs(p.value - want)
            if err < best_err:
                best, best_err = i, err
        if best is None or best_err > select_tol * scale:
            raise SelectionNotEigenvalue(
                f"{want} is not an (unused) eigenvalue of A; spectrum "
                f"{[round(p.value, 6) for p in pairs]}"
            )
        used[best] = True
        cols.append(pairs[best].vector)
        lam.append(-pairs[best].value)
    C = np.column_stack(cols)
    Lam = np.diag(lam)
    if np.any(np.diag(Lam) <= 0):
        raise Unstable("selected eigenvalues must be negative")

    det_ctb = float(np.linalg.det(C.T @ B))
    if abs(det_ctb) <= det_tol:
        raise SingularCB(
            f"|det(C^T B)| = {abs(det_ctb):.3e} <= {det_tol:.1e}; "
            "the selected eigenvectors do not give an invertible transfer path"
        )

    resid = np.linalg.norm(C.T @ A + Lam @ C.T)
    if resid > tol * np.linalg.norm(A):
        raise SelectionNotEigenvalue(
            f"C^T A + Lambda C^T residual {resid:.3e} exceeds tolerance"
        )

    M = np.eye(n) if M_choice is None else np.asarray(M_choice, dtype=float)
    try:
        P = solve_lyapunov(A, M)
    except (SingularSystem, Unstable) as exc:
        raise LyapunovFailure(str(exc)) from exc

    return LinearCore(n=n, m=m, A0=A0, B=B, K=K, A=A, C=C, Lam=Lam, P=P, M=M)


def build_G(core: LinearCore) -> LtiRealization:
    """Realize G(s) = (s I_m + Lambda)^-1 C^T B as an m-state system."""
    m = core.m
    return LtiRealization(
        F=-core.Lam.copy(),
        G_in=core.CtB.copy(),
        H=np.eye(m),
        D=np.zeros((m, m)),
    )


def decompose(core: LinearCore, plant: UncertainPlant, trace):
    """Primary/secondary output split (y_p, y_s) on the trace's grid.

    Re-runs the recorded closed loop with the decomposition states
    integrated alongside the plant, so the identity y_p + y_s = C^T x
    holds to integration precision. The trace must carry its scenario
    metadata (controller and integrator settings) as written by
    sim.simulate.
    """
    from .controller_rt import ControllerSpec  # local import to avoid a cycle
    from .errors import UnknownUncertainty
    from .sim import SimConfig, simulate

    if plant.input_delay > 0:
        raise UnknownUncertainty(
            "decomposition needs an input map evaluable at the current input"
        )
    md = trace.metadata
    try:
        spec = ControllerSpec(
            core=core,
            epsilon=md["epsilon"],
            u_min=np.asarray(md["u_min"], dtype=float),
            u_max=np.asarray(md["u_max"], dtype=float),
            realization_kind=md["realization"],
        )
        cfg = SimConfig(
            dt=md["dt"],
            t_final=md["t_final"],
            x0=np.asarray(md["x0"], dtype=float),
            record_stride=md["record_stride"],
        )
    except KeyError as exc:
        raise UnknownUncertainty(f"trace metadata missing field {exc}") from exc
    rerun = simulate(plant, spec, cfg, with_decomposition=True)
    return rerun.y_p, rerun.y_s


def verify_theorem1(core: LinearCore, tol: float = 1e-8, det_tol: float = 1e-6) -> StructureReport:
    """Residual report for the output-redefinition identities."""
    resid = float(np.linalg.norm(core.C.T @ core.A + core.Lam @ core.C.T))
    budget = tol * float(np.linalg.norm(core.A))
    det_ctb = float(np.linalg.det(core.CtB))
    c_rank = int(np.linalg.matrix_rank(core.C, tol=1e-10))
    checks = {
        "output_identity": resid <= budget,
        "ctb_invertible": abs(det_ctb) > det_tol,
        "c_full_column_rank": c_rank == core.m,
    }
    return StructureReport(
        theorem1_residual=resid,
        residual_budget=budget,
        det_ctb=det_ctb,
        det_tol=det_tol,
        c_rank=c_rank,
        m=core.m,
        checks=checks,
    )
