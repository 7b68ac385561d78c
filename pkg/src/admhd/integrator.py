"""Integrating-factor RK4 time stepping.

Diffusion is integrated exactly through the factors ``exp(-nu |k|^2 t)`` and
``exp(-mu |k|^2 t)``; the projected nonlinear terms go through classical RK4
in the transformed variables (Lawson's scheme).  The dissipated energy is
accumulated with the same stage states and weights, so the discrete energy
balance is consistent with the stepper.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from admhd.diagnostics import dissipation_rates, make_record, model_energy
from admhd.errors import BlowUpError, ConfigurationError
from admhd.model import MhdState, model_symbols, nonlinear_terms
from admhd.spectral import SpectralVectorField

__all__ = ["IntegratorConfig", "IFRK4", "step", "suggest_dt", "run", "ENERGY_JUMP_FACTOR"]

log = logging.getLogger(__name__)

ENERGY_JUMP_FACTOR = 10.0
SCHEMES = ("IFRK4",)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    cfl_safety: float = 0.5
    scheme: str = "IFRK4"

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise ConfigurationError("; ".join(errors), errors)

    def violations(self):
        out = []
        if not (self.dt > 0 and math.isfinite(self.dt)):
            out.append(f"dt must be > 0, got {self.dt}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            out.append(f"t_end must be >= 0, got {self.t_end}")
        elif self.t_end > 0 and self.dt > self.t_end:
            out.append(f"dt={self.dt} must not exceed t_end={self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            out.append(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.scheme not in SCHEMES:
            out.append(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        return out

    def step_sizes(self):
        """Step sizes that land exactly on ``t_end``."""
        if self.t_end == 0:
            return []
        n = max(1, round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) <= 1e-9 * self.t_end:
            return [self.dt] * n
        n = math.ceil(self.t_end / self.dt)
        return [self.dt] * (n - 1) + [self.t_end - (n - 1) * self.dt]


class IFRK4:
    """One-step integrator bound to fixed model parameters."""

    def __init__(self, grid, fp, dp, pp):
        self.grid, self.fp, self.dp, self.pp = grid, fp, dp, pp
        self._factors = {}
        a_hat, _, d_hat = model_symbols(grid, fp, dp, pp)
        self._w_weight = grid.weights * a_hat * d_hat * grid.k_sq
        self._b_weight = grid.weights * grid.k_sq

    def _exp(self, h):
        if h not in self._factors:
            k_sq = self.grid.k_sq
            nu, mu = self.pp.nu, self.pp.magnetic_diffusivity
            self._factors[h] = (
                np.exp(-nu * k_sq * (h / 2)), np.exp(-nu * k_sq * h),
                np.exp(-mu * k_sq * (h / 2)), np.exp(-mu * k_sq * h),
            )
        return self._factors[h]

    def _rhs(self, w, b):
        nw, nb = nonlinear_terms(w, b, self.grid, self.fp, self.dp, self.pp)
        return nw, (nb if nb is not None else 0.0)

    def _dissipation(self, w, b):
        visc = self.pp.nu * float(np.sum(self._w_weight * np.sum(np.abs(w) ** 2, axis=0)))
        mu = self.pp.magnetic_diffusivity
        mag = mu * float(np.sum(self._b_weight * np.sum(np.abs(b) ** 2, axis=0))) if mu else 0.0
        return visc, mag

    def advance(self, w, b, h):
        """Advance raw coefficient stacks by ``h``.

        Returns ``(w, b, visc_increment, mag_increment)``.
        """
        ew2, ew, eb2, eb = self._exp(h)
        if not self.pp.has_magnetic:
            b = np.zeros_like(w)

        k1w, k1b = self._rhs(w, b)
        w2 = ew2 * (w + 0.5 * h * k1w)
        b2 = eb2 * (b + 0.5 * h * k1b)
        k2w, k2b = self._rhs(w2, b2)
        w3 = ew2 * w + 0.5 * h * k2w
        b3 = eb2 * b + 0.5 * h * k2b
        k3w, k3b = self._rhs(w3, b3)
        w4 = ew * w + h * ew2 * k3w
        b4 = eb * b + h * eb2 * k3b
        k4w, k4b = self._rhs(w4, b4)

        w_new = ew * w + (h / 6) * (ew * k1w + 2 * ew2 * (k2w + k3w) + k4w)
        b_new = eb * b + (h / 6) * (eb * k1b + 2 * eb2 * (k2b + k3b) + k4b)

        d = [self._dissipation(*s) for s in ((w, b), (w2, b2), (w3, b3), (w4, b4))]
        visc = (h / 6) * (d[0][0] + 2 * d[1][0] + 2 * d[2][0] + d[3][0])
        mag = (h / 6) * (d[0][1] + 2 * d[1][1] + 2 * d[2][1] + d[3][1])
        return w_new, b_new, visc, mag


def _check_finite(w, b, t_last):
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise BlowUpError(f"non-finite coefficients after t={t_last}", t_last)


def step(state, fp, dp, pp, cfg):
    """Advance ``state`` by ``cfg.dt``.

    Raises
    ------
    BlowUpError
        On NaN/Inf coefficients or a one-step model-energy jump above
        ``ENERGY_JUMP_FACTOR``; carries the last valid time.
    """
    stepper = IFRK4(state.grid, fp, dp, pp)
    w, b, _, _ = stepper.advance(state.w.coeffs, state.b.coeffs, cfg.dt)
    _check_finite(w, b, state.t)
    new = MhdState(state.w.with_coeffs(w), state.b.with_coeffs(b), state.t + cfg.dt)
    e_old = model_energy(state, fp, dp, pp)
    if e_old > 0 and model_energy(new, fp, dp, pp) > ENERGY_JUMP_FACTOR * e_old:
        raise BlowUpError(f"model energy jumped by >{ENERGY_JUMP_FACTOR}x", state.t)
    return new


def suggest_dt(state, fp, dp, pp, cfg):
    """Advective CFL step ``cfl_safety * dx / max|D_N w|``, capped at ``cfg.dt``."""
    grid = state.grid
    _, _, d_hat = model_symbols(grid, fp, dp, pp)
    u = grid.to_physical(d_hat * state.w.coeffs)
    umax = float(np.sqrt(np.max(np.sum(u * u, axis=0))))
    limit = cfg.cfl_safety * grid.dx / max(umax, np.finfo(float).tiny)
    return min(cfg.dt, limit)


def run(initial, fp, dp, pp, cfg, sink=None, record_interval=1, on_step=None):
    """Integrate from ``initial.t`` over ``cfg.t_end``, emitting diagnostics.

    ``sink`` receives a ``DiagnosticsRecord`` at the start, every
    ``record_interval`` steps and at the end.  ``on_step(state, index)`` is
    called after every step.  Output is deterministic for identical inputs.
    """
    if record_interval < 1:
        raise ConfigurationError("record_interval must be >= 1")
    sink = sink or (lambda record: None)
    grid = initial.grid
    stepper = IFRK4(grid, fp, dp, pp)
    w, b = initial.w.coeffs, initial.b.coeffs
    if not pp.has_magnetic:
        b = np.zeros_like(w)
    state = MhdState(initial.w, initial.b.with_coeffs(b), initial.t)
    e0 = model_energy(state, fp, dp, pp)
    visc = mag = 0.0
    emitted = []

    def emit(st):
        rec = make_record(st, fp, dp, pp, visc, mag, e0)
        emitted.append(rec)
        sink(rec)

    emit(state)
    sizes = cfg.step_sizes()
    t0 = initial.t
    e_prev = e0
    for i, h in enumerate(sizes, start=1):
        w, b, dv, dm = stepper.advance(w, b, h)
        t_new = t0 + cfg.t_end if i == len(sizes) else t0 + i * cfg.dt
        try:
            _check_finite(w, b, state.t)
        except BlowUpError as exc:
            exc.records = list(emitted)
            raise
        visc += dv
        mag += dm
        state = MhdState(initial.w.with_coeffs(w), initial.b.with_coeffs(b), t_new)
        energy = model_energy(state, fp, dp, pp)
        if e_prev > 0 and energy > ENERGY_JUMP_FACTOR * e_prev:
            raise BlowUpError(f"model energy jumped by >{ENERGY_JUMP_FACTOR}x at t={t_new}",
                              t0 + (i - 1) * cfg.dt, emitted)
        e_prev = energy
        if on_step is not None:
            on_step(state, i)
        if i % record_interval == 0 or i == len(sizes):
            emit(state)
    log.debug("run finished at t=%g after %d steps", state.t, len(sizes))
    return state
