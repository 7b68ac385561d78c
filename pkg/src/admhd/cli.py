"""Command-line entry point: ``admhd {simulate,sweep_n,operator_check,pressure}``.

Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
4 failed property check.  Artifacts written before a failure are kept.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from admhd import fileio
from admhd.config import load_config, make_initial_state, render_config
from admhd.diagnostics import make_record
from admhd.errors import BlowUpError, ConfigurationError
from admhd.filters import (
    DeconvParams,
    apply_deconvolution,
    apply_helmholtz_power,
    deconv_limit_error,
    deconv_symbol,
    helmholtz_norm_identity_check,
    helmholtz_symbol,
    ratio_max,
    FilterParams,
)
from admhd.initial import random_solenoidal
from admhd.integrator import run
from admhd.model import (
    energy_cancellation_check,
    pressure_source,
    recover_pressure,
)
from admhd.spectral import (
    divergence_residual,
    forward_transform,
    inverse_transform,
    mean_residual,
    sobolev_norm,
)
from admhd.studies import limit_study

__all__ = ["main", "build_parser", "operator_properties"]

log = logging.getLogger("admhd")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_PROPERTY = 0, 2, 3, 4
OUTPUT_ENV = "ADMHD_OUTPUT_DIR"


def build_parser():
    parser = argparse.ArgumentParser(prog="admhd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="config document (INI)")
        p.add_argument("--output-dir", type=Path, default=None,
                       help=f"output root (default: ${OUTPUT_ENV} or the current directory)")
        p.add_argument("--seed", type=int, default=None, help="override initial.seed")
        p.add_argument("--quiet", action="store_true", help="only report errors")
        return p

    common(sub.add_parser("simulate", help="integrate one configuration"))
    sweep = common(sub.add_parser("sweep_n", help="deconvolution order vs limit model"))
    sweep.add_argument("--n-list", default="0,1,2,4",
                       help="comma-separated deconvolution orders (default: 0,1,2,4)")
    sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    common(sub.add_parser("operator_check", help="run the operator property suite"))
    pres = common(sub.add_parser("pressure", help="recover the pressure of a snapshot"))
    pres.add_argument("snapshot", nargs="?", type=Path, default=None,
                      help="state snapshot (default: the config's initial state)")
    return parser


def _output_dir(args, cfg):
    root = args.output_dir or Path(os.environ.get(OUTPUT_ENV, "."))
    out = root / cfg.output.directory if cfg.output.directory else root
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_n_list(text):
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise ConfigurationError(f"--n-list must be comma-separated integers: {exc}") from exc
    if not values or min(values) < 0:
        raise ConfigurationError("--n-list needs at least one order N >= 0")
    return values


def cmd_simulate(cfg, out):
    state0 = make_initial_state(cfg)
    snap_every = cfg.output.snapshot_interval
    fileio.write_state(out / "snapshot_00000000.bin", state0)

    def on_step(state, i):
        if snap_every and i % snap_every == 0:
            fileio.write_state(out / f"snapshot_{i:08d}.bin", state)

    with fileio.NdjsonSink(out / "diagnostics.ndjson") as sink:
        try:
            final = run(state0, cfg.filter, cfg.deconv, cfg.physics, cfg.integrator,
                        sink=sink, record_interval=cfg.output.record_interval,
                        on_step=on_step)
        except BlowUpError as exc:
            log.error("blow-up: %s (last valid t=%g)", exc, exc.last_valid_time)
            return EXIT_BLOWUP
    fileio.write_state(out / "snapshot_final.bin", final)
    rec = make_record(final, cfg.filter, cfg.deconv, cfg.physics)
    log.info("t=%g  model energy=%.12g", final.t, rec.model_energy)
    return EXIT_OK


def cmd_sweep_n(cfg, out, n_list, workers):
    rows = limit_study(cfg, n_list, workers=workers)
    with open(out / "sweep_n.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "err_w", "err_B"])
        for row in rows:
            writer.writerow([row.order_n, repr(row.err_w), repr(row.err_b)])
    for row in rows:
        log.info("N=%s  err_w=%.6e  err_B=%.6e", row.order_n, row.err_w, row.err_b)
    if any(row.blew_up for row in rows):
        return EXIT_BLOWUP
    ew = [row.err_w for row in rows]
    eb = [row.err_b for row in rows]
    monotone = all(a > b for a, b in zip(ew, ew[1:])) and all(a > b for a, b in zip(eb, eb[1:]))
    if not monotone:
        log.error("errors are not strictly decreasing in N")
        return EXIT_PROPERTY
    return EXIT_OK


def _prop(name, value, tol):
    value = float(value)
    return {"name": name, "value": value, "tolerance": tol,
            "passed": bool(math.isfinite(value) and value <= tol)}


def operator_properties(cfg, seed=0, n_fields=4):
    """Property suite for the configured grid and filter.

    Every entry reports a nonnegative defect and passes when it does not
    exceed its tolerance.
    """
    grid, fp, dp, pp = cfg.grid, cfg.filter, cfg.deconv, cfg.physics
    rng = np.random.default_rng(seed)
    props = []

    # symbol bounds on random (|k|^2, alpha, theta, N) tuples
    m = 2000
    k_sq = rng.uniform(0, 1e4, m)
    worst = 0.0
    for ks, alpha, theta, n in zip(k_sq, 10 ** rng.uniform(-2, 1, m),
                                   rng.uniform(0, 1, m), rng.integers(0, 65, m)):
        f = FilterParams(alpha, theta)
        d = deconv_symbol(ks, f, DeconvParams(int(n)))
        a = helmholtz_symbol(ks, f, 1.0)
        worst = max(worst, 1 - d, d - (n + 1), d - a)
    props.append(_prop("symbol_bounds", max(worst, 0.0), 1e-12))

    fields = [random_solenoidal(grid, rng) for _ in range(n_fields)]
    chain = helm = rt = 0.0
    for v in fields:
        for s in (-1.0, 0.0, 0.5, 1.0, 2.0):
            nv = sobolev_norm(v, s)
            nd = sobolev_norm(apply_deconvolution(v, fp, dp), s)
            half = apply_helmholtz_power(apply_helmholtz_power(v, fp, -1.0), fp, 0.5)
            nh = sobolev_norm(half.with_coeffs(half.coeffs * np.sqrt(
                deconv_symbol(grid.k_sq, fp, dp))), s)
            chain = max(chain, (nv - nd) / nv, (nd - (dp.order_n + 1) * nv) / nv,
                        (nh - nv) / nv)
        helm = max(helm, helmholtz_norm_identity_check(v, fp))
        back = forward_transform(inverse_transform(v), grid)
        rt = max(rt, sobolev_norm(back - v, 0.0) / sobolev_norm(v, 0.0))
    props.append(_prop("norm_chain", max(chain, 0.0), 1e-10))
    props.append(_prop("helmholtz_norm_identity", helm, 1e-12))
    props.append(_prop("transform_round_trip", rt, 1e-13))

    v = fields[0]
    r_max = ratio_max(grid, fp)
    excess = 0.0
    errs = [deconv_limit_error(v, fp, DeconvParams(n)) for n in range(9)]
    for a, b in zip(errs, errs[1:]):
        if a > 0:
            excess = max(excess, b / a - r_max)
    props.append(_prop("deconvolution_contraction", max(excess, 0.0), 1e-10))

    state = make_initial_state(cfg)
    props.append(_prop("energy_cancellation", energy_cancellation_check(state, fp, dp, pp), 1e-10))
    q = recover_pressure(state, fp, dp, pp)
    src = pressure_source(state, fp, dp, pp)
    lap = -grid.k_sq * q.coeffs
    props.append(_prop("pressure_recovery",
                       np.max(np.abs(lap - src)) / max(np.max(np.abs(src)), 1e-300), 1e-10))
    sol = max(divergence_residual(state.w) / max(sobolev_norm(state.w, 0.0), 1e-300),
              mean_residual(state.w) / max(sobolev_norm(state.w, 0.0), 1e-300))
    props.append(_prop("initial_state_solenoidal", sol, 1e-12))
    return props


def cmd_operator_check(cfg, out, seed):
    props = operator_properties(cfg, seed=seed)
    passed = all(p["passed"] for p in props)
    with open(out / "operator_check.json", "w", encoding="utf-8") as fh:
        json.dump({"passed": passed, "properties": props}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for p in props:
        log.info("%-28s %s  (%.3e <= %.0e)", p["name"], "PASS" if p["passed"] else "FAIL",
                 p["value"], p["tolerance"])
    return EXIT_OK if passed else EXIT_PROPERTY


def cmd_pressure(cfg, out, snapshot):
    if snapshot is None:
        state = make_initial_state(cfg)
    else:
        state = fileio.read_state(snapshot, cfg.grid)
    q = recover_pressure(state, cfg.filter, cfg.deconv, cfg.physics)
    fileio.write_scalar(out / "pressure.bin", q, state.t)
    log.info("pressure written, ||q||_2 = %.6e", sobolev_norm(q, 0.0))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = _output_dir(args, cfg)
        (out / "config.ini").write_text(render_config(cfg), encoding="utf-8")
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "sweep_n":
            return cmd_sweep_n(cfg, out, _parse_n_list(args.n_list), args.workers)
        if args.command == "operator_check":
            return cmd_operator_check(cfg, out, cfg.initial.seed)
        return cmd_pressure(cfg, out, args.snapshot)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
