"""Uncertain-plant interface and the built-in benchmark plants.

Every plant is the linear-in-state form

    x' = A0 x + B (h(t, u, x) + sigma(t, x))

with an unknown input map h and an unknown state/time disturbance sigma.
The input map takes the full state as a third argument because the F-16
benchmark's input nonlinearities also depend on the state; plants with a
purely input-dependent h simply ignore it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import SingularInertia, Uncontrollable
from .numlin import controllability_rank

__all__ = [
    "AssumptionConstants",
    "UncertainPlant",
    "QuadrotorConfig",
    "hsu_siso",
    "f16_rollyaw",
    "quadrotor_attitude",
    "synthetic_lti",
    "dead_zone",
    "delayed_input_lti",
]


@dataclass(frozen=True)
class AssumptionConstants:
    """Known bounds on the uncertainty evaluators.

    l_ht, l_hu_low, l_hu_high bound the input map's time derivative and
    input Jacobian; k_sigma, delta_sigma, l_sigma_x, l_sigma_t, d_sigma
    bound the disturbance and its derivatives.
    """

    l_ht: float = 0.0
    l_hu_low: float = 1.0
    l_hu_high: float = 1.0
    k_sigma: float = 0.0
    delta_sigma: float = 0.0
    l_sigma_x: float = 0.0
    l_sigma_t: float = 0.0
    d_sigma: float = 0.0

    def __post_init__(self):
        if self.l_hu_low <= 0:
            raise ValueError("l_hu_low must be positive")
        if self.l_hu_low > self.l_hu_high:
            raise ValueError("l_hu_low must not exceed l_hu_high")
        for name in ("l_ht", "k_sigma", "delta_sigma", "l_sigma_x", "l_sigma_t", "d_sigma"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite nonnegative real")


@dataclass(frozen=True)
class UncertainPlant:
    name: str
    n: int
    m: int
    A0: np.ndarray
    B: np.ndarray
    h: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    sigma: Callable[[float, np.ndarray], np.ndarray]
    constants: Optional[AssumptionConstants] = None
    input_delay: float = 0.0  # h receives u(t - input_delay) when > 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A0 = np.asarray(self.A0, dtype=float)
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "B", B)
        if A0.shape != (self.n, self.n) or B.shape != (self.n, self.m):
            raise ValueError("A0/B shapes inconsistent with (n, m)")
        if controllability_rank(A0, B) < self.n:
            raise Uncontrollable(f"plant '{self.name}': (A0, B) is not controllable")

    def mismatch(self, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """h(t, u, x) + sigma(t, x), the bracket multiplying B."""
        return self.h(t, u, x) + self.sigma(t, x)


def hsu_siso() -> UncertainPlant:
    """Third-order SISO benchmark with a nonlinear input gain.

    h(t, u) = (0.5 + 0.3 sin u + exp(0.2 |cos u|)) u
    sigma(t, x) = (0.3 + 0.2 cos x1) ||x|| - 0.5 sin x2
    """
    A0 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -3.0, -1.0]])
    B = np.array([[0.0], [0.0], [1.0]])

    def h(t, u, x):
        ui = u[0]
        return np.array([(0.5 + 0.3 * np.sin(ui) + np.exp(0.2 * abs(np.cos(ui)))) * ui])

    def sigma(t, x):
        r = np.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        return np.array([(0.3 + 0.2 * np.cos(x[0])) * r - 0.5 * np.sin(x[1])])

    return UncertainPlant("hsu_siso", 3, 1, A0, B, h, sigma)


# F-16 roll/yaw input-nonlinearity constants
_F16 = dict(
    A1=0.33, A2=0.195, A3=0.45, A4=1.85,
    D1=0.295, D2=-0.0865, D3=0.055, D4=-0.007,
    w1=1.6, w2=0.0, w3=-1.9, w4=0.0,
    C1=0.3, C2=0.3, h1=7.0, h2=2.7,
    width1=0.25, width2=0.25, beta0=0.0,
)


def f16_rollyaw(f2_typo_fix: bool = False) -> UncertainPlant:
    """Lateral/directional F-16 model with aileron/rudder nonlinearities.

    State [beta, phi, p_s, r_s], inputs [delta_a, delta_r]. The published
    f2 expression contains tanh(delta_a - h2) where delta_r would be
    expected; the printed form is the default, f2_typo_fix=True swaps in
    delta_r.
    """
    A0 = np.array([
        [-0.3220, 0.064, 0.0364, -0.9917],
        [0.0, 0.0, 1.0, 0.0393],
        [-30.6490, 0.0, -3.6784, 0.6646],
        [8.5395, 0.0, -0.0254, -0.4764],
    ])
    B = np.array([[0.0, 0.0], [0.0, 0.0], [-0.7331, 0.1315], [-0.0319, -0.0620]])
    c = _F16

    def h(t, u, x):
        beta, ps, rs = x[0], x[2], x[3]
        da, dr = u[0], u[1]
        gauss1 = (1 - c["C1"]) * np.exp(-((beta - c["beta0"]) ** 2) / (2 * c["width1"] ** 2)) + c["C1"]
        gauss2 = (1 - c["C2"]) * np.exp(-((beta - c["beta0"]) ** 2) / (2 * c["width2"] ** 2)) + c["C2"]
        f1 = (
            gauss1 * (np.tanh(da + c["h1"]) + np.tanh(da - c["h1"]) + 0.001 * da)
            + c["D1"] * np.cos(c["A1"] * ps - c["w1"]) * np.sin(c["A2"] * rs - c["w2"])
            + c["D2"]
        )
        second = dr if f2_typo_fix else da
        f2 = (
            gauss2 * (np.tanh(dr + c["h2"]) + np.tanh(second - c["h2"]) + 0.001 * dr)
            + c["D3"] * np.cos(c["A3"] * ps - c["w3"]) * np.sin(c["A4"] * rs - c["w4"])
            + c["D4"]
        )
        return np.array([da + f1, dr + f2])

    def sigma(t, x):
        return np.zeros(2)

    return UncertainPlant(
        "f16_rollyaw", 4, 2, A0, B, h, sigma, meta={"f2_typo_fix": f2_typo_fix}
    )


def _quad_channel_gain() -> np.ndarray:
    # exact placement of {-15, -3, -1} on the omega = 15 channel;
    # rounds to the published [-3.0, -4.2, -0.27]
    return np.array([[-3.0], [-4.2], [-4.0 / 15.0]])


@dataclass(frozen=True)
class QuadrotorConfig:
    omega: float = 15.0
    J0: np.ndarray = field(default_factory=lambda: np.diag([0.03, 0.03, 0.04]))
    J_true: Optional[np.ndarray] = None  # defaults to J0 (no uncertainty)
    K0: Optional[np.ndarray] = None  # per-channel 3x1 gain; default places {-15,-3,-1}

    def __post_init__(self):
        J0 = np.asarray(self.J0, dtype=float)
        object.__setattr__(self, "J0", J0)
        Jt = self.J_true
        Jt = J0.copy() if Jt is None else np.asarray(Jt, dtype=float)
        object.__setattr__(self, "J_true", Jt)
        if self.omega <= 0:
            raise ValueError("actuator bandwidth must be positive")
        for name, J in (("J0", J0), ("J_true", Jt)):
            if J.shape != (3, 3) or not np.allclose(J, J.T):
                raise SingularInertia(f"{name} must be 3x3 symmetric")
            if np.min(np.linalg.eigvalsh(J)) <= 0:
                raise SingularInertia(f"{name} must be positive definite")
        K0 = self.K0
        K0 = _quad_channel_gain() if K0 is None else np.asarray(K0, dtype=float).reshape(3, 1)
        object.__setattr__(self, "K0", K0)


def quadrotor_attitude(cfg: QuadrotorConfig | None = None) -> UncertainPlant:
    """Nine-state attitude model: three decoupled [angle, rate, torque] channels.

    The plant matrix already includes the stabilizing inner gain Kbar, so
    the outer design uses K = 0. Inertia mismatch enters as
    h(t, u) = J^-1 J0 u and sigma(t, x) = (J^-1 J0 - I) Kbar^T x.
    """
    cfg = cfg or QuadrotorConfig()
    om = cfg.omega
    A0c = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -om]])
    B0c = np.array([[0.0], [0.0], [om]])
    Abar = np.kron(np.eye(3), A0c)
    B = np.kron(np.eye(3), B0c)
    Kbar = np.kron(np.eye(3), cfg.K0)
    A0 = Abar + B @ Kbar.T

    G = np.linalg.solve(cfg.J_true, cfg.J0)  # J^-1 J0
    Gm1_K = (G - np.eye(3)) @ Kbar.T

    def h(t, u, x):
        return G @ u

    def sigma(t, x):
        return Gm1_K @ x

    return UncertainPlant(
        "quadrotor_attitude", 9, 3, A0, B, h, sigma,
        meta={"omega": om, "Kbar": Kbar, "J0": cfg.J0, "J_true": cfg.J_true},
    )


def synthetic_lti(
    g: float = 1.0,
    S: np.ndarray | None = None,
    d_amp: float = 0.0,
    d_freq: float = 1.0,
    A0: np.ndarray | None = None,
    B: np.ndarray | None = None,
) -> UncertainPlant:
    """Linear test plant with every assumption constant known in closed form.

    h(t, u) = g u and sigma(t, x) = S x + d_amp sin(d_freq t) 1. Defaults
    to a double integrator with a single input.
    """
    if g <= 0:
        raise ValueError("input gain g must be positive")
    if A0 is None:
        A0 = np.array([[0.0, 1.0], [0.0, 0.0]])
    else:
        A0 = np.asarray(A0, dtype=float)
    n = A0.shape[0]
    if B is None:
        B = np.zeros((n, 1))
        B[-1, 0] = 1.0
    else:
        B = np.asarray(B, dtype=float)
    m = B.shape[1]
    S = np.zeros((m, n)) if S is None else np.asarray(S, dtype=float).reshape(m, n)

    s_norm = float(np.linalg.norm(S, 2))
    ones = np.ones(m)
    consts = AssumptionConstants(
        l_ht=0.0,
        l_hu_low=g,
        l_hu_high=g,
        k_sigma=s_norm,
        delta_sigma=abs(d_amp) * np.sqrt(m),
        l_sigma_x=s_norm,
        l_sigma_t=0.0,
        d_sigma=abs(d_amp) * d_freq * np.sqrt(m),
    )

    def h(t, u, x):
        return g * u

    def sigma(t, x):
        return S @ x + d_amp * np.sin(d_freq * t) * ones

    return UncertainPlant(
        "synthetic_lti", n, m, A0, B, h, sigma, constants=consts,
        meta={"g": g, "S": S, "d_amp": d_amp, "d_freq": d_freq},
    )


def dead_zone(mu: float):
    """Decorator wrapping a plant's input map with a componentwise dead zone.

    Inputs with |u_i| < mu are zeroed before reaching the original h;
    equivalently h(t, u) = h0(t, u + delta(t)) with ||delta|| <= mu sqrt(m).
    """
    if mu <= 0:
        raise ValueError("dead-zone width must be positive")

    def wrap(plant: UncertainPlant) -> UncertainPlant:
        inner = plant.h

        def h(t, u, x):
            uz = np.where(np.abs(u) >= mu, u, 0.0)
            return inner(t, uz, x)

        return replace(
            plant, name=plant.name + "+deadzone", h=h,
            meta={**plant.meta, "dead_zone_mu": mu},
        )

    return wrap


def delayed_input_lti(tau: float, **synthetic_kwargs) -> UncertainPlant:
    """Synthetic plant whose input map sees u(t - tau).

    Used to demonstrate that an aggressive filter constant destabilizes a
    delayed loop while a conservative one stays bounded.
    """
    if tau <= 0:
        raise ValueError("delay must be positive")
    base = synthetic_lti(**synthetic_kwargs)
    return replace(base, name="delayed_lti", input_delay=tau, constants=None)
