"""Fixed-step closed-loop integrator, trace recording, and metrics.

Classical RK4 on the augmented state (plant + controller + the primary
output y_p, and optionally the secondary output y_s). Saturation is
applied inside the derivative evaluation, so the plant always sees the
clamped input. Deterministic: identical configs give identical traces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .controller_rt import ControllerSpec, make_controller
from .errors import EmptyTrace, NonFiniteState
from .plants import UncertainPlant

__all__ = ["SimConfig", "Trace", "Metrics", "simulate", "energy_index", "metrics", "export_csv"]

_BLOWUP = 1e12


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_final: float
    x0: np.ndarray
    record_stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if not (0 < self.dt <= self.t_final):
            raise ValueError("need 0 < dt <= t_final")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")


@dataclass
class Trace:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    d_hat: np.ndarray
    sat: np.ndarray
    metadata: dict = field(default_factory=dict)
    y_p: Optional[np.ndarray] = None
    y_s: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class Metrics:
    energy: float
    sup_tail: float
    time_to_threshold: Optional[float]
    max_abs_u: np.ndarray
    sat_fraction: float


def simulate(
    plant: UncertainPlant,
    controller: ControllerSpec,
    simcfg: SimConfig,
    with_decomposition: bool = False,
    scenario_name: Optional[str] = None,
) -> Trace:
    """Integrate the closed loop and return the recorded Trace.

    Raises NonFiniteState (carrying the truncated trace and blow-up time)
    if the augmented state leaves the finite range.
    """
    core = controller.core
    n, m = core.n, core.m
    if plant.n != n or plant.m != m:
        raise ValueError("plant and controller dimensions disagree")
    if simcfg.x0.shape != (n,):
        raise ValueError(f"x0 must have length {n}")

    ctrl = make_controller(controller)
    q = ctrl.state_dim
    dt = simcfg.dt
    nsteps = int(round(simcfg.t_final / dt))

    lam_fast = float(np.max(np.abs(np.linalg.eigvals(core.A))))
    if dt * lam_fast >= 2.5:
        warnings.warn(
            f"dt*max|eig(A)| = {dt * lam_fast:.2f} >= 2.5; RK4 may be unstable",
            stacklevel=2,
        )

    A0, B = plant.A0, plant.B
    Ct = core.C.T
    CtB = core.CtB
    Kt = core.K.T
    lam = core.lam_diag
    u_min, u_max = controller.u_min, controller.u_max
    h, sig = plant.h, plant.sigma

    delay_steps = 0
    u_hist: list[np.ndarray] = []
    if plant.input_delay > 0:
        delay_steps = max(int(round(plant.input_delay / dt)), 1)

    # augmented layout: [x (n), controller (q), y_p (m), (y_s (m))]
    dim = n + q + m + (m if with_decomposition else 0)
    s = np.zeros(dim)
    s[:n] = simcfg.x0
    s[n : n + q] = ctrl.initial_state()
    if with_decomposition:
        s[n + q + m :] = Ct @ simcfg.x0  # y_s(0) = C^T x0; y_p(0) = 0

    def delayed_u(t: float, u_now: np.ndarray) -> np.ndarray:
        if delay_steps == 0:
            return u_now
        tq = t - plant.input_delay
        if tq <= 0.0 or not u_hist:
            return np.zeros(m)
        i = tq / dt
        i0 = min(int(i), len(u_hist) - 1)
        i1 = min(i0 + 1, len(u_hist) - 1)
        frac = i - i0
        return u_hist[i0] * (1 - frac) + u_hist[i1] * frac

    def deriv(t: float, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        x = s[:n]
        sc = s[n : n + q]
        yp = s[n + q : n + q + m]
        u_unsat = ctrl.unsat_output(t, sc, x)
        u = np.minimum(np.maximum(u_unsat, u_min), u_max)
        sat = bool(np.any(u != u_unsat))
        u_h = delayed_u(t, u)
        hv = h(t, u_h, x)
        sv = sig(t, x)
        ds = np.empty(dim)
        ds[:n] = A0 @ x + B @ (hv + sv)
        ds[n : n + q] = ctrl.derivative(t, sc, x, u)
        ds[n + q : n + q + m] = -lam * yp + CtB @ u
        if with_decomposition:
            ys = s[n + q + m :]
            ds[n + q + m :] = -lam * ys + CtB @ (-u + hv - Kt @ x + sv)
        return ds, u, sat

    stride = simcfg.record_stride
    rec_t = [0.0]
    rec_s = [s.copy()]
    rec_u = []
    rec_sat = []

    def record_u(t, s):
        u_unsat = ctrl.unsat_output(t, s[n : n + q], s[:n])
        u = np.minimum(np.maximum(u_unsat, u_min), u_max)
        return u, bool(np.any(u != u_unsat))

    u0, sat0 = record_u(0.0, s)
    rec_u.append(u0)
    rec_sat.append(sat0)
    if delay_steps:
        u_hist.append(u0)

    t = 0.0
    blowup_time = None
    for k in range(nsteps):
        k1, _, _ = deriv(t, s)
        k2, _, _ = deriv(t + dt / 2, s + (dt / 2) * k1)
        k3, _, _ = deriv(t + dt / 2, s + (dt / 2) * k2)
        k4, _, _ = deriv(t + dt, s + dt * k3)
        s = s + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (k + 1) * dt
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > _BLOWUP:
            blowup_time = t
            break
        if delay_steps:
            u_k, _ = record_u(t, s)
            u_hist.append(u_k)
        if (k + 1) % stride == 0:
            rec_t.append(t)
            rec_s.append(s.copy())
            u_k, sat_k = record_u(t, s)
            rec_u.append(u_k)
            rec_sat.append(sat_k)

    S = np.array(rec_s)
    X = S[:, :n]
    trace = Trace(
        t=np.array(rec_t),
        x=X,
        u=np.array(rec_u),
        y=X @ core.C,
        d_hat=X @ core.C - S[:, n + q : n + q + m],
        sat=np.array(rec_sat, dtype=bool),
        metadata={
            "scenario": scenario_name or plant.name,
            "plant": plant.name,
            "epsilon": controller.epsilon,
            "realization": controller.realization_kind,
            "u_min": controller.u_min.tolist(),
            "u_max": controller.u_max.tolist(),
            "dt": dt,
            "t_final": simcfg.t_final,
            "x0": simcfg.x0.tolist(),
            "record_stride": stride,
        },
        y_p=S[:, n + q : n + q + m],
        y_s=S[:, n + q + m :] if with_decomposition else None,
    )
    if blowup_time is not None:
        raise NonFiniteState(
            f"closed loop diverged at t = {blowup_time:.4f} s",
            blowup_time=blowup_time,
            trace=trace,
        )
    return trace


def energy_index(trace: Trace) -> np.ndarray:
    """Cumulative total variation of u: E(t_k) = sum ||u_{j+1} - u_j||_1."""
    if len(trace) < 2:
        raise EmptyTrace("energy index needs at least two samples")
    du = np.sum(np.abs(np.diff(trace.u, axis=0)), axis=1)
    return np.concatenate([[0.0], np.cumsum(du)])


def metrics(trace: Trace, theta: float = 1e-2) -> Metrics:
    if len(trace) == 0:
        raise EmptyTrace("empty trace")
    norms = np.linalg.norm(trace.x, axis=1)
    tail_start = int(np.floor(0.8 * len(norms)))
    sup_tail = float(np.max(norms[tail_start:]))

    below = norms <= theta
    ttt = None
    if below[-1]:
        # first index after which the norm never exceeds theta again
        idx = len(below) - 1
        while idx > 0 and below[idx - 1]:
            idx -= 1
        ttt = float(trace.t[idx])

    return Metrics(
        energy=float(energy_index(trace)[-1]) if len(trace) >= 2 else 0.0,
        sup_tail=sup_tail,
        time_to_threshold=ttt,
        max_abs_u=np.max(np.abs(trace.u), axis=0),
        sat_fraction=float(np.mean(trace.sat)),
    )


def export_csv(trace: Trace, path) -> None:
    """Write the trace as CSV: t,x1..xn,u1..um,y1..ym,dhat1..dhatm,sat."""
    n = trace.x.shape[1]
    m = trace.u.shape[1]
    header = (
        ["t"]
        + [f"x{i+1}" for i in range(n)]
        + [f"u{i+1}" for i in range(m)]
        + [f"y{i+1}" for i in range(m)]
        + [f"dhat{i+1}" for i in range(m)]
        + ["sat"]
    )
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(trace)):
            row = (
                [trace.t[k]]
                + list(trace.x[k])
                + list(trace.u[k])
                + list(trace.y[k])
                + list(trace.d_hat[k])
            )
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write(f",{int(trace.sat[k])}\n")
