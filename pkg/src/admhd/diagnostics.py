"""Energy functionals, balance residuals and the blow-up monitor."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from admhd.model import model_symbols
from admhd.spectral import divergence_residual, sobolev_norm

__all__ = [
    "DiagnosticsRecord",
    "model_energy",
    "dissipation_rates",
    "energy_balance_residual",
    "energy_inequality_check",
    "blowup_monitor",
    "make_record",
    "INEQUALITY_SLACK",
]

INEQUALITY_SLACK = 1e-8


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    model_energy: float
    kinetic_l2: float
    magnetic_l2: float
    w_h_theta: float
    visc_dissip_cum: float
    mag_dissip_cum: float
    balance_residual: float | None
    blowup_monitor: float
    div_residual_w: float
    div_residual_b: float

    def to_json(self):
        return json.dumps(asdict(self), allow_nan=False)

    @classmethod
    def from_json(cls, line):
        data = json.loads(line)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown record keys: {sorted(unknown)}")
        return cls(**data)


def _weighted_sq(coeffs, grid, weight):
    return float(np.sum(grid.weights * weight * np.sum(np.abs(coeffs) ** 2, axis=0)))


def model_energy(state, fp, dp, pp=None):
    """``(||A^1/2 D^1/2 w||^2 + ||B||^2) / 2``.

    For the limit model ``D`` is replaced by ``A``.
    """
    grid = state.grid
    a_hat, _, d_hat = model_symbols(grid, fp, dp, pp)
    ew = _weighted_sq(state.w.coeffs, grid, a_hat * d_hat)
    eb = _weighted_sq(state.b.coeffs, grid, 1.0)
    return 0.5 * (ew + eb)


def dissipation_rates(state, fp, dp, pp):
    """``(nu ||A^1/2 D^1/2 w||_1^2, mu ||B||_1^2)``."""
    grid = state.grid
    a_hat, _, d_hat = model_symbols(grid, fp, dp, pp)
    visc = pp.nu * _weighted_sq(state.w.coeffs, grid, a_hat * d_hat * grid.k_sq)
    mag = pp.magnetic_diffusivity * _weighted_sq(state.b.coeffs, grid, grid.k_sq)
    return visc, mag


def blowup_monitor(state_or_field, fp):
    """``alpha^(2 theta) ||w||_theta^2``."""
    w = getattr(state_or_field, "w", state_or_field)
    return fp.alpha ** (2 * fp.theta) * sobolev_norm(w, fp.theta) ** 2


def _balance(energy, visc, mag, e0):
    if e0 == 0.0:
        return None
    return abs(energy + visc + mag - e0) / e0


def energy_balance_residual(records):
    """Worst relative balance ``|E(t) + dissipated(t) - E(0)| / E(0)`` over records.

    Returns None (not applicable) when ``E(0) = 0``.
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("energy balance needs at least two records")
    e0 = records[0].model_energy
    if e0 == 0.0:
        return None
    return max(_balance(r.model_energy, r.visc_dissip_cum, r.mag_dissip_cum, e0)
               for r in records)


def energy_inequality_check(state, fp, dp, initial_l2):
    """True iff ``||w||^2 + alpha^(2 theta) ||w||_theta^2 <= ||v0||^2``.

    ``initial_l2`` is the L2 norm of the unfiltered initial velocity
    ``v0 = A w0``.  A relative slack of ``INEQUALITY_SLACK`` is allowed.
    """
    lhs = sobolev_norm(state.w, 0.0) ** 2 + blowup_monitor(state, fp)
    rhs = initial_l2**2
    return lhs <= rhs + INEQUALITY_SLACK * max(rhs, lhs)


def make_record(state, fp, dp, pp, visc_cum=0.0, mag_cum=0.0, e0=None):
    energy = model_energy(state, fp, dp, pp)
    if e0 is None:
        e0 = energy
    return DiagnosticsRecord(
        t=float(state.t),
        model_energy=energy,
        kinetic_l2=sobolev_norm(state.w, 0.0),
        magnetic_l2=sobolev_norm(state.b, 0.0),
        w_h_theta=sobolev_norm(state.w, fp.theta),
        visc_dissip_cum=float(visc_cum),
        mag_dissip_cum=float(mag_cum),
        balance_residual=_balance(energy, visc_cum, mag_cum, e0),
        blowup_monitor=blowup_monitor(state, fp),
        div_residual_w=divergence_residual(state.w),
        div_residual_b=divergence_residual(state.b),
    )


def is_finite_record(record):
    return all(v is None or math.isfinite(v) for v in asdict(record).values())
