"""Stability-margin machinery: gamma constants, the admissible filter
range, the decay rate eta, ultimate bounds, and a Lyapunov certificate
evaluated along simulated traces.

All matrix norms are spectral; vector norms Euclidean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .asd_design import LinearCore
from .errors import EtaNonpositive, UnknownUncertainty
from .plants import AssumptionConstants, UncertainPlant
from .sim import Trace

__all__ = [
    "BoundReport",
    "CertificateSeries",
    "gammas",
    "epsilon_bound",
    "eta",
    "ultimate_bound",
    "bound_report",
    "lyapunov_certificate",
    "sample_constants",
]


def gammas(core: LinearCore, consts: AssumptionConstants) -> tuple[float, float, float]:
    """The three closed-loop constants entering the filter bound."""
    norm = lambda M: float(np.linalg.norm(M, 2))
    g0 = float(np.min(np.linalg.eigvalsh(core.M)))
    g1 = 2.0 * (norm(core.K) + consts.l_sigma_x) * norm(core.B) + 2.0 * consts.l_ht / consts.l_hu_low
    g2 = (
        norm(core.P) * norm(core.B)
        + norm(core.A) * (norm(core.K) + consts.l_sigma_x)
        + norm(core.K)
        + consts.k_sigma
    )
    return g0, g1, g2


def epsilon_bound(g0: float, g1: float, g2: float, consts: AssumptionConstants) -> float:
    """Largest admissible filter time constant; inf when the denominator vanishes."""
    denom = g1 + (2.0 / g0) * (g2 + consts.l_sigma_t) ** 2
    if denom == 0.0:
        return math.inf
    return consts.l_hu_low / denom


def eta(
    epsilon: float,
    g0: float,
    g1: float,
    g2: float,
    consts: AssumptionConstants,
    P: np.ndarray,
) -> float:
    """Exponential decay rate of the Lyapunov function; positive iff
    epsilon is inside the admissible range."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    first = g0 / (2.0 * float(np.max(np.linalg.eigvalsh(P))))
    second = consts.l_hu_low / epsilon - g1 - (2.0 / g0) * (g2 + consts.l_sigma_t) ** 2
    return min(first, second)


def ultimate_bound(
    epsilon: float,
    eta_value: float,
    consts: AssumptionConstants,
    P: np.ndarray,
) -> tuple[float, float]:
    """(appendix form, statement form) of the ultimate bound on ||x||.

    The two published variants differ by a lambda_min(P) factor; the
    appendix derivation is complete, so its form is the primary one.
    """
    if eta_value <= 0:
        raise EtaNonpositive(f"eta = {eta_value:.3e} is not positive")
    drive = (consts.l_ht / consts.l_hu_low) * consts.delta_sigma + consts.d_sigma
    p_min = float(np.min(np.linalg.eigvalsh(P)))
    appendix = math.sqrt(epsilon / (p_min * eta_value * consts.l_hu_low)) * drive
    statement = math.sqrt(epsilon / (eta_value * consts.l_hu_low)) * drive
    return appendix, statement


@dataclass(frozen=True)
class BoundReport:
    gamma0: float
    gamma1: float
    gamma2: float
    eps_max: float
    eps_grid: np.ndarray
    eta_grid: np.ndarray
    ultimate_appendix: Optional[float]
    ultimate_statement: Optional[float]
    epsilon: Optional[float]
    p_min: float
    p_max: float

    def to_dict(self) -> dict:
        enc = lambda v: ("inf" if v is not None and math.isinf(v) else v)
        return {
            "gamma0": self.gamma0,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "eps_max": enc(self.eps_max),
            "eps_grid": list(self.eps_grid),
            "eta_grid": list(self.eta_grid),
            "ultimate_bound_appendix": self.ultimate_appendix,
            "ultimate_bound_statement": self.ultimate_statement,
            "epsilon": self.epsilon,
            "lambda_min_P": self.p_min,
            "lambda_max_P": self.p_max,
        }


def bound_report(
    core: LinearCore,
    consts: AssumptionConstants,
    epsilon: Optional[float] = None,
    grid_points: int = 25,
) -> BoundReport:
    """Evaluate every Theorem-2 quantity, with eta sampled on a log grid."""
    g0, g1, g2 = gammas(core, consts)
    eps_max = epsilon_bound(g0, g1, g2, consts)
    hi = eps_max if math.isfinite(eps_max) else 1.0
    grid = np.logspace(np.log10(hi * 1e-3), np.log10(hi), grid_points)
    eta_grid = np.array([eta(e, g0, g1, g2, consts, core.P) for e in grid])

    ua = us = None
    if epsilon is not None:
        ev = eta(epsilon, g0, g1, g2, consts, core.P)
        if ev > 0:
            ua, us = ultimate_bound(epsilon, ev, consts, core.P)
    pw = np.linalg.eigvalsh(core.P)
    return BoundReport(
        gamma0=g0,
        gamma1=g1,
        gamma2=g2,
        eps_max=eps_max,
        eps_grid=grid,
        eta_grid=eta_grid,
        ultimate_appendix=ua,
        ultimate_statement=us,
        epsilon=epsilon,
        p_min=float(pw[0]),
        p_max=float(pw[-1]),
    )


@dataclass(frozen=True)
class CertificateSeries:
    t: np.ndarray
    V: np.ndarray
    v: np.ndarray  # the lumped mismatch h - K^T x + sigma along the trace
    ball_radius: Optional[float]
    entered_ball_at: Optional[float]
    stays_in_ball: Optional[bool]


def lyapunov_certificate(
    trace: Trace,
    core: LinearCore,
    plant: UncertainPlant,
    epsilon: Optional[float] = None,
) -> CertificateSeries:
    """V = x^T P x + v^T v along the trace, with the predicted terminal ball.

    The ball radius needs the plant's assumption constants and the filter
    constant; without them only the series is returned.
    """
    if plant.input_delay > 0:
        raise UnknownUncertainty("certificate needs an undelayed input map")
    P = core.P
    Kt = core.K.T
    V = np.empty(len(trace))
    vs = np.empty((len(trace), core.m))
    for k in range(len(trace)):
        x = trace.x[k]
        u = trace.u[k]
        t = trace.t[k]
        v = plant.h(t, u, x) - Kt @ x + plant.sigma(t, x)
        vs[k] = v
        V[k] = x @ P @ x + v @ v

    radius = entered = stays = None
    eps = epsilon if epsilon is not None else trace.metadata.get("epsilon")
    if plant.constants is not None and eps is not None:
        c = plant.constants
        g0, g1, g2 = gammas(core, c)
        ev = eta(eps, g0, g1, g2, c, P)
        if ev > 0:
            drive = (c.l_ht / c.l_hu_low) * c.delta_sigma + c.d_sigma
            radius = (1.0 / ev) * (eps / c.l_hu_low) * drive**2
            inside = V <= radius + 1e-12
            if inside[-1]:
                idx = len(inside) - 1
                while idx > 0 and inside[idx - 1]:
                    idx -= 1
                entered = float(trace.t[idx])
                stays = True
            else:
                stays = False
    return CertificateSeries(
        t=trace.t.copy(), V=V, v=vs, ball_radius=radius,
        entered_ball_at=entered, stays_in_ball=stays,
    )


def sample_constants(
    plant: UncertainPlant,
    t_samples=np.linspace(0.0, 10.0, 11),
    u_scale: float = 1.0,
    x_scale: float = 1.0,
    grid: int = 5,
    fd_step: float = 1e-6,
) -> dict:
    """Rough finite-difference estimates of the assumption constants.

    Diagnostic only: sampled on a coarse grid, so these are lower bounds
    on the true suprema and must never back an assertion.
    """
    if plant.input_delay > 0:
        raise UnknownUncertainty("sampler needs an undelayed input map")
    m, n = plant.m, plant.n
    rng = np.random.default_rng(0)
    us = rng.uniform(-u_scale, u_scale, size=(grid, m))
    xs = rng.uniform(-x_scale, x_scale, size=(grid, n))

    l_ht = 0.0
    dhdu_min = math.inf
    dhdu_max = 0.0
    sig_t = 0.0
    sig0 = 0.0
    for t in t_samples:
        for u in us:
            for x in xs:
                h0 = plant.h(t, u, x)
                ht = plant.h(t + fd_step, u, x)
                du_norm = max(np.linalg.norm(u), 1e-9)
                l_ht = max(l_ht, np.linalg.norm(ht - h0) / fd_step / du_norm)
                J = np.empty((m, m))
                for j in range(m):
                    up = u.copy()
                    up[j] += fd_step
                    J[:, j] = (plant.h(t, up, x) - h0) / fd_step
                sym = np.linalg.eigvalsh((J + J.T) / 2)
                dhdu_min = min(dhdu_min, float(sym[0]))
                dhdu_max = max(dhdu_max, float(np.linalg.norm(J, 2)))
                s0 = plant.sigma(t, x)
                st = plant.sigma(t + fd_step, x)
                sig_t = max(sig_t, np.linalg.norm(st - s0) / fd_step)
        sig0 = max(sig0, float(np.linalg.norm(plant.sigma(t, np.zeros(n)))))
    return {
        "l_ht_est": float(l_ht),
        "l_hu_low_est": float(dhdu_min),
        "l_hu_high_est": float(dhdu_max),
        "sigma_t_est": float(sig_t),
        "sigma_at_zero_est": float(sig0),
    }
