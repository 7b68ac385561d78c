import dataclasses
import math

import numpy as np
import pytest

from admhd.config import parse_config, make_initial_state
from admhd.diagnostics import (
    DiagnosticsRecord,
    blowup_monitor,
    energy_balance_residual,
    energy_inequality_check,
    is_finite_record,
    make_record,
    model_energy,
)
from admhd.filters import DeconvParams, FilterParams, apply_helmholtz_power
from admhd.initial import abc_field, random_solenoidal
from admhd.integrator import IntegratorConfig, run
from admhd.model import ModelCase, MhdState, PhysicalParams
from admhd.spectral import GridSpec, SpectralVectorField, sobolev_norm
from admhd.studies import alpha_sweep, limit_study, stability_probe

from conftest import CASES, DP, FP, pair_field, random_state

UNIT = FilterParams(1.0, 1.0)
EULER = CASES["DeconvEuler"]


class TestModelEnergy:
    def test_zero(self, grid8):
        z = SpectralVectorField.zeros(grid8)
        assert model_energy(MhdState(z, z), FP, DP) == 0.0

    def test_pair_oracle(self, grid8):
        w = pair_field(grid8, (1, 0, 0), [0, 1, 0])
        state = MhdState(w, SpectralVectorField.zeros(grid8))
        assert model_energy(state, UNIT, DeconvParams(0)) == pytest.approx(2.0, rel=1e-15)

    def test_field_only(self, grid16):
        b = random_solenoidal(grid16, 1)
        state = MhdState(SpectralVectorField.zeros(grid16), b)
        assert model_energy(state, FP, DP) == pytest.approx(0.5 * sobolev_norm(b, 0) ** 2, rel=1e-15)

    def test_limit_uses_helmholtz_weight(self, grid8):
        w = pair_field(grid8, (1, 0, 0), [0, 1, 0])
        state = MhdState(w, SpectralVectorField.zeros(grid8))
        # A_hat * A_hat = 4 on the unit shell
        assert model_energy(state, UNIT, DP, CASES["LimitModel"]) == pytest.approx(4.0, rel=1e-15)


class TestBlowupMonitor:
    def test_zero(self, grid8):
        assert blowup_monitor(SpectralVectorField.zeros(grid8), FP) == 0.0

    def test_pair_oracle(self, grid8):
        w = pair_field(grid8, (0, 2, 0), [1, 0, 0])
        assert blowup_monitor(w, FilterParams(0.5, 1.0)) == pytest.approx(2.0, rel=1e-15)

    def test_alpha_scaling(self, grid16):
        w = random_solenoidal(grid16, 2)
        a, b = blowup_monitor(w, FilterParams(0.4, 0.75)), blowup_monitor(w, FilterParams(0.8, 0.75))
        assert b / a == pytest.approx(2 ** 1.5, rel=1e-14)


class TestBalance:
    def test_needs_two_records(self, grid8):
        with pytest.raises(ValueError):
            energy_balance_residual([make_record(random_state(grid8, 0), FP, DP, CASES["DoubleViscous"])])

    def test_zero_initial_energy_is_not_applicable(self, grid8):
        z = SpectralVectorField.zeros(grid8)
        records = []
        run(MhdState(z, z), FP, DP, CASES["DoubleViscous"], IntegratorConfig(dt=0.1, t_end=0.2),
            sink=records.append)
        assert energy_balance_residual(records) is None
        assert records[-1].balance_residual is None

    def test_inviscid_residual_is_drift(self, grid16):
        records = []
        state = random_state(grid16, 1, magnetic=False)
        run(state, FP, DP, EULER, IntegratorConfig(dt=0.02, t_end=0.2), sink=records.append)
        e0 = records[0].model_energy
        drift = max(abs(r.model_energy - e0) / e0 for r in records)
        assert energy_balance_residual(records) == drift
        assert all(r.visc_dissip_cum == 0.0 and r.mag_dissip_cum == 0.0 for r in records)

    def test_pure_diffusion_beltrami(self, grid16):
        pp = PhysicalParams(0.1, 0.05, ModelCase.DOUBLE_VISCOUS)
        w0 = abc_field(grid16)
        records = []
        run(MhdState(w0, 0.5 * w0), FP, DP, pp, IntegratorConfig(dt=0.01, t_end=1.0),
            sink=records.append)
        assert energy_balance_residual(records) <= 1e-10

    def test_viscous_mhd_short_run(self, grid16):
        pp = CASES["DoubleViscous"]
        records = []
        run(random_state(grid16, 6), FilterParams(0.5, 0.5), DeconvParams(3), pp,
            IntegratorConfig(dt=1e-2, t_end=0.2), sink=records.append)
        assert energy_balance_residual(records) <= 1e-6
        visc = [r.visc_dissip_cum for r in records]
        mag = [r.mag_dissip_cum for r in records]
        assert visc == sorted(visc) and mag == sorted(mag) and visc[-1] > 0


class TestInequality:
    def test_initial_state(self, grid16):
        for theta in (0.0, 0.5, 1.0):
            fp = FilterParams(0.5, theta)
            v0 = random_solenoidal(grid16, 3)
            state = MhdState(apply_helmholtz_power(v0, fp, -1), SpectralVectorField.zeros(grid16))
            assert energy_inequality_check(state, fp, DP, sobolev_norm(v0, 0))

    def test_along_conservative_run(self, grid16):
        fp = FilterParams(0.5, 1.0)
        v0 = random_solenoidal(grid16, 4)
        state = MhdState(apply_helmholtz_power(v0, fp, -1), SpectralVectorField.zeros(grid16))
        ok = []
        run(state, fp, DeconvParams(4), EULER, IntegratorConfig(dt=0.02, t_end=0.4),
            on_step=lambda s, i: ok.append(energy_inequality_check(s, fp, DP, sobolev_norm(v0, 0))))
        assert all(ok)

    def test_inflated_state_flagged(self, grid16):
        v0 = random_solenoidal(grid16, 3)
        state = MhdState(apply_helmholtz_power(v0, FP, -1) * 3.0, SpectralVectorField.zeros(grid16))
        assert not energy_inequality_check(state, FP, DP, sobolev_norm(v0, 0))


class TestRecord:
    def test_json_round_trip(self, grid8):
        rec = make_record(random_state(grid8, 0), FP, DP, CASES["DoubleViscous"], 0.25, 0.5, 2.0)
        assert DiagnosticsRecord.from_json(rec.to_json()) == rec
        assert is_finite_record(rec)

    def test_rejects_nan(self, grid8):
        rec = make_record(random_state(grid8, 0), FP, DP, CASES["DoubleViscous"])
        bad = dataclasses.replace(rec, model_energy=math.nan)
        assert not is_finite_record(bad)
        with pytest.raises(ValueError):
            bad.to_json()

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            DiagnosticsRecord.from_json('{"t": 0, "bogus": 1}')


LIMIT_DOC = """
[grid]
n_per_axis = 8
[filter]
alpha = 0.5
theta = 0.75
[deconv]
order_n = 0
[physics]
case = DoubleViscous
nu = 0.02
mu = 0.02
[integrator]
dt = 0.02
t_end = 0.2
[initial]
kind = RandomSolenoidal
seed = 3
"""


class TestLimitStudy:
    def test_monotone_and_identical_model(self):
        cfg = parse_config(LIMIT_DOC)
        rows = limit_study(cfg, [0, 1, 2, 4, None])
        assert [r.order_n for r in rows] == [0, 1, 2, 4, None]
        errs = [r.err_w for r in rows[:-1]]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert rows[-1].err_w == 0.0 and rows[-1].err_b == 0.0

    def test_parallel_matches_serial(self):
        cfg = parse_config(LIMIT_DOC)
        assert limit_study(cfg, [0, 2], workers=2) == limit_study(cfg, [0, 2])

    def test_theta_range(self):
        cfg = parse_config(LIMIT_DOC.replace("theta = 0.75", "theta = 0.25"))
        with pytest.raises(ValueError):
            limit_study(cfg, [0])


class TestStabilityProbe:
    def setup_method(self):
        self.grid = GridSpec(8)
        self.fp = FilterParams(0.5, 0.75)
        self.pp = CASES["InviscidMomentum"]
        self.cfg = IntegratorConfig(dt=0.02, t_end=0.2)
        w0 = apply_helmholtz_power(abc_field(self.grid), self.fp, -1)
        self.initial = MhdState(w0, 0.5 * random_solenoidal(self.grid, 1))

    def test_zero_perturbation(self):
        report = stability_probe(self.initial, 0.0, self.fp, DP, self.pp, self.cfg)
        assert report["ratio"] == 1.0

    def test_growth_bounded(self):
        report = stability_probe(self.initial, 1e-6, self.fp, DP, self.pp, self.cfg, seed=2)
        assert report["ratio"] >= 1.0
        assert report["ratio"] <= math.exp(report["rate"] * self.cfg.t_end) * (1 + 1e-12)
        assert math.isfinite(report["rate"])

    def test_linear_response(self):
        big = stability_probe(self.initial, 2e-6, self.fp, DP, self.pp, self.cfg, seed=2)
        small = stability_probe(self.initial, 1e-6, self.fp, DP, self.pp, self.cfg, seed=2)
        # the measure is quadratic in the perturbation
        ratio = np.array(big["values"][:4]) / np.array(small["values"][:4])
        np.testing.assert_allclose(ratio, 4.0, rtol=1e-3)


def test_alpha_sweep_table():
    grid = GridSpec(8)
    v0 = random_solenoidal(grid, 0)
    rows = alpha_sweep(v0, [0.2, 0.4], 1.0, 2, IntegratorConfig(dt=0.05, t_end=0.2))
    assert [r["alpha"] for r in rows] == [0.2, 0.4]
    assert all(r["sup_monitor"] > 0 for r in rows)
