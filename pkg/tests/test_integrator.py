import math

import numpy as np
import pytest

from admhd.diagnostics import model_energy
from admhd.errors import BlowUpError, ConfigurationError
from admhd.filters import DeconvParams, FilterParams, apply_helmholtz_power
from admhd.initial import abc_field, random_solenoidal
from admhd.integrator import IFRK4, IntegratorConfig, run, step, suggest_dt
from admhd.model import ModelCase, MhdState, PhysicalParams
from admhd.spectral import GridSpec, SpectralVectorField, divergence_residual, mean_residual, sobolev_norm

from conftest import CASES, DP, FP, random_state

EULER = CASES["DeconvEuler"]


class TestConfig:
    def test_defaults(self):
        cfg = IntegratorConfig()
        assert (cfg.dt, cfg.cfl_safety, cfg.scheme) == (1e-3, 0.5, "IFRK4")

    @pytest.mark.parametrize("kwargs", [
        {"dt": 0.0}, {"dt": -1e-3}, {"dt": 2.0, "t_end": 1.0}, {"t_end": -1.0},
        {"cfl_safety": 0.0}, {"cfl_safety": 1.5}, {"scheme": "RK3"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            IntegratorConfig(**kwargs)

    def test_step_sizes_land_on_t_end(self):
        assert IntegratorConfig(dt=0.1, t_end=1.0).step_sizes() == [0.1] * 10
        sizes = IntegratorConfig(dt=0.3, t_end=1.0).step_sizes()
        assert len(sizes) == 4 and math.fsum(sizes) == pytest.approx(1.0, abs=1e-15)
        assert IntegratorConfig(dt=0.1, t_end=0.0).step_sizes() == []


class TestStep:
    def test_zero_state(self, grid8):
        z = SpectralVectorField.zeros(grid8)
        for pp in CASES.values():
            out = step(MhdState(z, z), FP, DP, pp, IntegratorConfig(dt=0.1, t_end=1.0))
            assert not np.any(out.w.coeffs) and not np.any(out.b.coeffs)
            assert out.t == pytest.approx(0.1)

    def test_heat_kernel_on_beltrami_shell(self, grid16):
        # the nonlinear terms vanish for single-shell Beltrami data; only diffusion acts
        pp = PhysicalParams(0.05, 0.02, ModelCase.DOUBLE_VISCOUS)
        w0 = abc_field(grid16, 1.0, 0.5, -0.8)
        state = MhdState(w0, 0.4 * w0)
        cfg = IntegratorConfig(dt=0.01, t_end=1.0)
        for _ in range(100):
            state = step(state, FP, DP, pp, cfg)
        t = state.t
        assert t == pytest.approx(1.0, abs=1e-12)
        assert sobolev_norm(state.w, 0) == pytest.approx(math.exp(-pp.nu * t) * sobolev_norm(w0, 0), rel=1e-10)
        assert sobolev_norm(state.b, 0) == pytest.approx(0.4 * math.exp(-pp.mu * t) * sobolev_norm(w0, 0), rel=1e-10)

    def test_exact_diffusion_without_nonlinearity(self, grid16, monkeypatch):
        pp = PhysicalParams(0.3, 0.1, ModelCase.DOUBLE_VISCOUS)
        stepper = IFRK4(grid16, FP, DP, pp)
        monkeypatch.setattr(stepper, "_rhs", lambda w, b: (np.zeros_like(w), np.zeros_like(b)))
        state = random_state(grid16, 0)
        h = 0.05
        w, b, _, _ = stepper.advance(state.w.coeffs, state.b.coeffs, h)
        ew = np.exp(-pp.nu * grid16.k_sq * h) * state.w.coeffs
        eb = np.exp(-pp.mu * grid16.k_sq * h) * state.b.coeffs
        assert np.max(np.abs(w - ew) / np.maximum(np.abs(ew), 1e-300)) <= 1e-12
        assert np.max(np.abs(b - eb) / np.maximum(np.abs(eb), 1e-300)) <= 1e-12

    def test_convergence_order_of_energy_drift(self):
        # inviscid deconvolution Euler: model energy is conserved by the ODE, so the
        # drift is pure time-stepping error and RK4 should cut it ~16x when dt halves
        grid = GridSpec(16)
        fp, dp = FilterParams(0.5, 1.0), DeconvParams(5)
        w0 = apply_helmholtz_power(random_solenoidal(grid, 3, amplitude=0.5), fp, -1)
        s0 = MhdState(w0, SpectralVectorField.zeros(grid))
        e0 = model_energy(s0, fp, dp, EULER)
        drift = []
        for dt in (0.01, 0.005):
            final = run(s0, fp, dp, EULER, IntegratorConfig(dt=dt, t_end=1.0))
            drift.append(abs(model_energy(final, fp, dp, EULER) - e0) / e0)
        assert 1 / 20 < drift[1] / drift[0] < 1 / 12

    def test_non_finite_raises(self, grid8):
        state = random_state(grid8, 1)
        bad = state.replace(w=state.w.with_coeffs(state.w.coeffs * np.nan))
        with pytest.raises(BlowUpError) as info:
            step(bad, FP, DP, CASES["InviscidMomentum"], IntegratorConfig(dt=0.1, t_end=1.0))
        assert info.value.last_valid_time == 0.0


class TestSuggestDt:
    def test_zero_state(self, grid8):
        z = SpectralVectorField.zeros(grid8)
        cfg = IntegratorConfig(dt=0.01, t_end=1.0)
        assert suggest_dt(MhdState(z, z), FP, DP, EULER, cfg) == 0.01

    def test_inverse_amplitude_scaling(self, grid16):
        cfg = IntegratorConfig(dt=1.0, t_end=1.0, cfl_safety=0.5)
        state = random_state(grid16, 2, magnetic=False)
        one = suggest_dt(state, FP, DP, EULER, cfg)
        two = suggest_dt(state.replace(w=2.0 * state.w), FP, DP, EULER, cfg)
        assert two == pytest.approx(one / 2, rel=1e-14)

    def test_abc_pointwise(self):
        grid = GridSpec(32)
        cfg = IntegratorConfig(dt=1.0, t_end=1.0, cfl_safety=0.5)
        state = MhdState(abc_field(grid), SpectralVectorField.zeros(grid))
        x, y, z = grid.physical_coordinates()
        speed = np.sqrt((np.sin(z) + np.cos(y)) ** 2 + (np.sin(x) + np.cos(z)) ** 2
                        + (np.sin(y) + np.cos(x)) ** 2)
        expected = 0.5 * grid.dx / speed.max()
        assert suggest_dt(state, FP, DeconvParams(0), EULER, cfg) == pytest.approx(expected, rel=1e-12)


class TestRun:
    def test_zero_horizon(self, grid8):
        state = random_state(grid8, 0)
        records = []
        out = run(state, FP, DP, CASES["InviscidMomentum"], IntegratorConfig(dt=0.1, t_end=0.0),
                  sink=records.append)
        assert out is state or np.array_equal(out.w.coeffs, state.w.coeffs)
        assert len(records) == 1 and records[0].t == 0.0

    def test_record_interval(self, grid8):
        records = []
        run(random_state(grid8, 0), FP, DP, CASES["DoubleViscous"],
            IntegratorConfig(dt=0.1, t_end=1.0), sink=records.append, record_interval=3)
        assert [r.t for r in records] == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])

    def test_deterministic(self, grid8):
        def stream():
            records = []
            run(random_state(grid8, 7), FP, DP, CASES["DoubleViscous"],
                IntegratorConfig(dt=0.05, t_end=0.5), sink=lambda r: records.append(r.to_json()))
            return records
        assert stream() == stream()

    @pytest.mark.parametrize("case", list(CASES))
    def test_invariants_each_step(self, grid16, case):
        pp = CASES[case]
        worst = []

        def check(state, i):
            for fld in (state.w, state.b):
                scale = max(sobolev_norm(fld, 0), 1e-300)
                worst.append(max(divergence_residual(fld), mean_residual(fld)) / scale)

        run(random_state(grid16, 3, magnetic=pp.has_magnetic), FP, DP, pp,
            IntegratorConfig(dt=0.01, t_end=0.1), on_step=check)
        assert len(worst) == 20 and max(worst) <= 1e-12

    def test_euler_carries_no_field(self, grid8):
        final = run(random_state(grid8, 0), FP, DP, EULER, IntegratorConfig(dt=0.1, t_end=0.2))
        assert not np.any(final.b.coeffs)

    def test_blow_up_keeps_partial_records(self, grid16):
        # absurdly large step on large data: the explicit stages diverge
        fp, dp = FilterParams(0.05, 1.0), DeconvParams(8)
        w0 = random_solenoidal(grid16, 0, band=(1, 7), amplitude=200.0)
        records = []
        with pytest.raises(BlowUpError) as info:
            run(MhdState(w0, SpectralVectorField.zeros(grid16)), fp, dp, EULER,
                IntegratorConfig(dt=0.5, t_end=50.0), sink=records.append)
        assert records and info.value.records == records
        assert info.value.last_valid_time >= 0.0
