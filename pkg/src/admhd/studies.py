"""Multi-run studies: the N -> infinity limit, perturbation growth, alpha sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from admhd.config import make_initial_state
from admhd.diagnostics import blowup_monitor
from admhd.errors import BlowUpError, ConfigurationError
from admhd.filters import DeconvParams, FilterParams, apply_helmholtz_power
from admhd.initial import random_solenoidal
from admhd.integrator import IntegratorConfig, run
from admhd.model import ModelCase, MhdState, PhysicalParams
from admhd.spectral import SpectralVectorField, divergence_residual, mean_residual, sobolev_norm

__all__ = ["LimitRow", "Trajectory", "invariant_residual", "limit_study", "stability_probe", "alpha_sweep", "trajectory_error"]


@dataclass(frozen=True)
class LimitRow:
    order_n: int | None  # None marks the limit model itself
    err_w: float
    err_b: float
    blew_up: bool = False


@dataclass
class Trajectory:
    """Sampled member run of a limit study.

    ``max_invariant_residual`` is the worst per-step divergence or mean
    residual of either field relative to that field's L2 norm.
    """

    times: np.ndarray
    w: np.ndarray
    b: np.ndarray
    blew_up: bool
    max_invariant_residual: float


def invariant_residual(state):
    """Worst relative divergence/mean residual of ``w`` and ``B``; 0 for zero fields."""
    worst = 0.0
    for fld in (state.w, state.b):
        norm = sobolev_norm(fld, 0.0)
        res = max(divergence_residual(fld), mean_residual(fld))
        if norm > 0:
            worst = max(worst, res / norm)
        elif res > 0:
            worst = math.inf
    return worst


def _trajectory(cfg, pp, order_n):
    state0 = make_initial_state(cfg)
    dp = DeconvParams(0 if order_n is None else order_n)
    snaps = [(state0.t, state0.w.coeffs, state0.b.coeffs)]
    interval = cfg.output.record_interval
    n_steps = len(cfg.integrator.step_sizes())
    worst = [invariant_residual(state0)]

    def keep(state, i):
        worst.append(invariant_residual(state))
        if i % interval == 0 or i == n_steps:
            snaps.append((state.t, state.w.coeffs, state.b.coeffs))

    blew_up = False
    try:
        run(state0, cfg.filter, dp, pp, cfg.integrator, on_step=keep)
    except BlowUpError:
        blew_up = True
    return Trajectory(np.array([s[0] for s in snaps]), np.stack([s[1] for s in snaps]),
                      np.stack([s[2] for s in snaps]), blew_up, max(worst))


def _member(args):
    cfg, pp, order_n = args
    return _trajectory(cfg, pp, order_n)


def trajectory_error(grid, times, a, b, s):
    """``L2(0, T; H^s)`` distance between two coefficient trajectories (trapezoid)."""
    n = min(len(times), len(a), len(b))
    sq = np.array([sobolev_norm(SpectralVectorField(grid, a[i] - b[i]), s) ** 2
                   for i in range(n)])
    if n < 2:
        return math.sqrt(sq[0]) if n else float("nan")
    return math.sqrt(float(np.trapezoid(sq, times[:n])))


def limit_study(cfg, n_list, s_w=1.0, s_b=0.5, workers=1, return_trajectories=False):
    """Compare deconvolution models of order N with the limit model.

    Every member starts from the same initial data and is sampled every
    ``cfg.output.record_interval`` steps; errors are ``L2(0, T; H^s)`` norms
    by the trapezoid rule over those samples.  Rows come back ordered by N;
    an entry ``None`` in ``n_list`` reruns the limit model itself.  With
    ``return_trajectories`` the raw member trajectories (limit model first)
    are returned as well.
    """
    theta = cfg.filter.theta
    if not 0.5 <= theta < 1.0:
        raise ConfigurationError(f"limit study needs theta in [1/2, 1), got {theta}")
    if s_w >= 1 + theta or s_b >= 1:
        raise ConfigurationError("limit study norms need s_w < 1 + theta and s_b < 1")
    base = cfg.physics
    member_pp = PhysicalParams(base.nu, base.mu, ModelCase.DOUBLE_VISCOUS)
    limit_pp = PhysicalParams(base.nu, base.mu, ModelCase.LIMIT_MODEL)
    orders = sorted(n_list, key=lambda n: math.inf if n is None else n)
    jobs = [(cfg, limit_pp, None)] + [
        (cfg, limit_pp if n is None else member_pp, n) for n in orders]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_member, jobs))
    else:
        results = [_member(j) for j in jobs]
    ref = results[0]
    rows = []
    for n, member in zip(orders, results[1:]):
        if member.blew_up or ref.blew_up:
            rows.append(LimitRow(n, float("nan"), float("nan"), True))
            continue
        rows.append(LimitRow(
            n,
            trajectory_error(cfg.grid, member.times, member.w, ref.w, s_w),
            trajectory_error(cfg.grid, member.times, member.b, ref.b, s_b),
        ))
    if return_trajectories:
        return rows, results
    return rows


def _difference_measure(dw, db, fp):
    return (fp.alpha ** (2 * fp.theta) * sobolev_norm(dw, fp.theta) ** 2
            + sobolev_norm(db, 0.0) ** 2)


def stability_probe(initial, perturbation_scale, fp, dp, pp, cfg, seed=0):
    """Growth of a small initial perturbation along a trajectory.

    The perturbed run starts from ``initial`` plus random solenoidal
    perturbations of L2 size ``perturbation_scale`` in both fields.  Reports
    ``sup_t F(t) / F(0)`` with ``F = alpha^(2 theta) ||dw||_theta^2 + ||dB||^2``
    and the implied exponential rate ``log(ratio) / T``.  A zero perturbation
    gives ratio 1 by convention.
    """
    grid = initial.grid
    rng = np.random.default_rng(seed)
    dw = random_solenoidal(grid, rng, amplitude=perturbation_scale)
    db = (random_solenoidal(grid, rng, amplitude=perturbation_scale)
          if pp.has_magnetic else SpectralVectorField.zeros(grid))
    perturbed = MhdState(initial.w + dw, initial.b + db, initial.t)

    base_traj, pert_traj = [], []
    run(initial, fp, dp, pp, cfg, on_step=lambda s, i: base_traj.append(s))
    run(perturbed, fp, dp, pp, cfg, on_step=lambda s, i: pert_traj.append(s))

    f0 = _difference_measure(dw, db, fp)
    times = [initial.t] + [s.t for s in base_traj]
    # F is quadratic: doubling the perturbation quadruples it early on
    values = [f0] + [_difference_measure(p.w - s.w, p.b - s.b, fp)
                     for s, p in zip(base_traj, pert_traj)]
    if f0 == 0.0:
        ratio = 1.0
    else:
        ratio = max(values) / f0
    horizon = cfg.t_end
    rate = math.log(ratio) / horizon if horizon > 0 and ratio > 0 else 0.0
    return {"ratio": ratio, "rate": rate, "times": times, "values": values,
            "initial_difference": f0}


def alpha_sweep(v0, alphas, theta, order_n, cfg):
    """``sup_t alpha^(2 theta) ||w(t)||_theta^2`` for deconvolution Euler runs.

    One run per filter width, each from ``w0 = A_alpha^-1 v0``.  Reported as a
    table only; no extrapolation in alpha is attempted.
    """
    if not isinstance(cfg, IntegratorConfig):
        raise ConfigurationError("alpha_sweep expects an IntegratorConfig")
    pp = PhysicalParams(0.0, 0.0, ModelCase.DECONV_EULER)
    dp = DeconvParams(order_n)
    rows = []
    for alpha in alphas:
        fp = FilterParams(alpha, theta)
        w0 = apply_helmholtz_power(v0, fp, -1.0)
        state0 = MhdState(w0, SpectralVectorField.zeros(v0.grid))
        peak = [blowup_monitor(state0, fp)]
        run(state0, fp, dp, pp, cfg, on_step=lambda s, i: peak.append(blowup_monitor(s, fp)))
        rows.append({"alpha": alpha, "sup_monitor": max(peak)})
    return rows

