"""Controller realizations: gain formulas, stepping, saturation, and the
time/frequency equivalence of the closed PI form and the observer form."""

import numpy as np
import pytest

from asdinv import (
    ControllerSpec,
    NonFiniteInput,
    ObserverController,
    PiController,
    SimConfig,
    build_core,
    make_controller,
    pi_gains,
    simulate,
    x_to_u_response,
)

from conftest import spec_for


class TestGains:
    def test_siso_closed_form(self, siso_core):
        # C^T B and Lambda are scalars here, so Kp = C^T/(eps C^T B),
        # Ki = lam * Kp
        eps = 0.1
        Kp, Ki = pi_gains(siso_core, eps)
        ctb = float(siso_core.CtB[0, 0])
        np.testing.assert_allclose(Kp, siso_core.C.T / (eps * ctb), atol=1e-12)
        np.testing.assert_allclose(Ki, siso_core.lam_diag[0] * Kp, atol=1e-12)

    def test_identity_core(self):
        # A0 = -I, B = I, K = 0 gives C = I, Lam = I, so Kp = Ki = I/eps
        core = build_core(-np.eye(2), np.eye(2), np.zeros((2, 2)), [-1.0, -1.0])
        Kp, Ki = pi_gains(core, 0.5)
        sgn = np.sign(np.diag(core.C))
        np.testing.assert_allclose(Kp, np.diag(sgn) @ (2.0 * np.eye(2)) @ np.diag(sgn), atol=1e-10)
        np.testing.assert_allclose(Ki, Kp, atol=1e-10)

    def test_epsilon_must_be_positive(self, siso_core):
        with pytest.raises(ValueError):
            pi_gains(siso_core, 0.0)


class TestSpec:
    def test_bounds_broadcast(self, siso_core):
        spec = ControllerSpec(siso_core, 0.1, -5.0, 5.0)
        assert spec.u_min.shape == (1,) and spec.u_max.shape == (1,)

    def test_bad_bounds_rejected(self, siso_core):
        with pytest.raises(ValueError):
            ControllerSpec(siso_core, 0.1, 5.0, -5.0)

    def test_unknown_realization_rejected(self, siso_core):
        with pytest.raises(ValueError):
            ControllerSpec(siso_core, 0.1, -5.0, 5.0, realization_kind="smith")

    def test_factory(self, siso_core):
        assert isinstance(make_controller(spec_for(siso_core, 0.1, -5, 5)), PiController)
        assert isinstance(
            make_controller(spec_for(siso_core, 0.1, -5, 5, kind="observer")),
            ObserverController,
        )


class TestStepping:
    def test_pi_zero_state_zero_input(self, siso_core):
        ctrl = PiController(spec_for(siso_core, 0.1, -5, 5))
        u = ctrl.step_pi(np.zeros(3), 1e-3)
        np.testing.assert_allclose(u, 0.0, atol=1e-15)
        np.testing.assert_allclose(ctrl.state, 0.0, atol=1e-15)

    def test_pi_integrator_drift(self, siso_core):
        # constant x held for T seconds: integrator ends at T * Ki x
        ctrl = PiController(spec_for(siso_core, 0.1, -1e9, 1e9))
        x = np.array([1.0, -0.5, 0.25])
        dt, steps = 1e-3, 200
        for _ in range(steps):
            ctrl.step_pi(x, dt)
        want = steps * dt * (ctrl.Ki @ x)
        np.testing.assert_allclose(ctrl.state, want, rtol=1e-10)

    def test_saturation_clamps(self, siso_core):
        ctrl = PiController(spec_for(siso_core, 0.1, -5, 5))
        u = ctrl.step_pi(np.array([100.0, 100.0, 100.0]), 1e-3)
        assert np.all(np.abs(u) <= 5.0)

    def test_observer_zero_measurement(self, siso_core):
        ctrl = ObserverController(spec_for(siso_core, 0.1, -5, 5, kind="observer"))
        u = ctrl.step_observer(np.zeros(1), 1e-3)
        np.testing.assert_allclose(u, 0.0, atol=1e-15)

    def test_non_finite_input_raises(self, siso_core):
        pi = PiController(spec_for(siso_core, 0.1, -5, 5))
        with pytest.raises(NonFiniteInput):
            pi.step_pi(np.array([np.nan, 0.0, 0.0]), 1e-3)
        ob = ObserverController(spec_for(siso_core, 0.1, -5, 5, kind="observer"))
        with pytest.raises(NonFiniteInput):
            ob.step_observer(np.array([np.inf]), 1e-3)

    def test_reset(self, siso_core):
        ctrl = PiController(spec_for(siso_core, 0.1, -5, 5))
        ctrl.step_pi(np.ones(3), 1e-3)
        assert np.any(ctrl.state != 0)
        ctrl.reset()
        np.testing.assert_allclose(ctrl.state, 0.0)


class TestEquivalence:
    def test_frequency_domain(self, siso_core, f16_core):
        omegas = np.logspace(-2, 2, 20)
        for core in (siso_core, f16_core):
            lo = -1e9 * np.ones(core.m)
            hi = 1e9 * np.ones(core.m)
            r_pi = x_to_u_response(
                ControllerSpec(core, 0.2, lo, hi, "pi_closed"), omegas
            )
            r_ob = x_to_u_response(
                ControllerSpec(core, 0.2, lo, hi, "observer"), omegas
            )
            scale = max(np.max(np.abs(r_pi)), 1.0)
            assert np.max(np.abs(r_pi - r_ob)) < 1e-10 * scale

    def test_time_domain(self, siso_plant, siso_core):
        # unsaturated closed loop: both realizations produce the same u(t)
        cfg = SimConfig(dt=1e-3, t_final=3.0, x0=np.array([0.2, 0.1, 0.0]), record_stride=10)
        tr_pi = simulate(siso_plant, spec_for(siso_core, 0.1, -1e9, 1e9), cfg)
        tr_ob = simulate(
            siso_plant, spec_for(siso_core, 0.1, -1e9, 1e9, kind="observer"), cfg
        )
        scale = max(np.max(np.abs(tr_pi.u)), 1e-12)
        assert np.max(np.abs(tr_pi.u - tr_ob.u)) < 1e-6 * scale
