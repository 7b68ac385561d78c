"""Simulation configuration documents.

A config is an INI-style key-value document.  All quantities are
nondimensional (domain period 2*pi).  Example::

    [grid]
    n_per_axis = 16

    [filter]
    alpha = 0.5
    theta = 0.75

    [deconv]
    order_n = 3

    [physics]
    case = DoubleViscous
    nu = 0.01
    mu = 0.01

    [integrator]
    t_end = 1.0

    [initial]
    kind = RandomSolenoidal
    seed = 7

Missing optional keys take documented defaults (``dt = 1e-3``,
``cfl_safety = 0.5``, ``padded_n = 3n/2``).
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from admhd.errors import ConfigurationError
from admhd.fileio import read_state
from admhd.filters import DeconvParams, FilterParams, apply_helmholtz_power
from admhd.initial import abc_field, random_solenoidal
from admhd.integrator import IntegratorConfig
from admhd.model import ModelCase, MhdState, PhysicalParams
from admhd.spectral import GridSpec, SpectralVectorField, sobolev_norm

__all__ = [
    "InitialCondition",
    "OutputConfig",
    "SimConfig",
    "parse_config",
    "render_config",
    "load_config",
    "make_initial_state",
]

INITIAL_KINDS = ("ABC", "RandomSolenoidal", "FromSnapshot")


@dataclass(frozen=True)
class InitialCondition:
    """Initial data.  ``abc`` and the random-spectrum keys describe ``v0``.

    ``w0`` is always the filtered ``A^-1 v0``.  ``b_amplitude`` sets the L2
    norm of a random solenoidal ``B0`` drawn from the same spectrum
    (defaults: 0 for ABC data, 1 for random data).
    """

    kind: str = "ABC"
    abc: tuple = (1.0, 1.0, 1.0)
    seed: int = 0
    spectrum_slope: float = -1.0
    band: tuple = (1.0, 4.0)
    v_amplitude: float = 1.0
    b_amplitude: float | None = None
    path: str = ""

    @property
    def magnetic_amplitude(self):
        if self.b_amplitude is not None:
            return self.b_amplitude
        return 1.0 if self.kind == "RandomSolenoidal" else 0.0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = ""
    record_interval: int = 1
    snapshot_interval: int = 0


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    filter: FilterParams
    deconv: DeconvParams
    physics: PhysicalParams
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    initial: InitialCondition = field(default_factory=InitialCondition)
    output: OutputConfig = field(default_factory=OutputConfig)

    def with_seed(self, seed):
        return dataclasses.replace(self, initial=dataclasses.replace(self.initial, seed=seed))


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _pair(s):
    parts = [p for p in s.replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


# section -> key -> (converter, required)
_SCHEMA = {
    "grid": {"n_per_axis": (_int, True), "padded_n": (_int, False)},
    "filter": {"alpha": (_float, True), "theta": (_float, True)},
    "deconv": {"order_n": (_int, True)},
    "physics": {"case": (str, True), "nu": (_float, False), "mu": (_float, False)},
    "integrator": {"dt": (_float, False), "t_end": (_float, True),
                   "cfl_safety": (_float, False), "scheme": (str, False)},
    "initial": {"kind": (str, True), "abc": (_pair, False), "seed": (_int, False),
                "spectrum_slope": (_float, False), "band": (_pair, False),
                "v_amplitude": (_float, False), "b_amplitude": (_float, False),
                "path": (str, False)},
    "output": {"directory": (str, False), "record_interval": (_int, False),
               "snapshot_interval": (_int, False)},
}


def _read_values(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config document: {exc}") from exc
    errors = []
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                errors.append(f"unknown key '{section}.{key}'")
                continue
            conv, _ = _SCHEMA[section][key]
            try:
                values[section, key] = conv(raw.strip())
            except ValueError as exc:
                errors.append(f"bad value for '{section}.{key}': {exc}")
    for section, keys in _SCHEMA.items():
        for key, (_, required) in keys.items():
            if required and (section, key) not in values and not any(
                    e.startswith(f"bad value for '{section}.{key}'") for e in errors):
                errors.append(f"missing required key '{section}.{key}'")
    return values, errors


def _build(ctor, kwargs, errors):
    try:
        return ctor(**kwargs)
    except ConfigurationError as exc:
        errors.extend(exc.violations)
    except (TypeError, ValueError) as exc:
        errors.append(str(exc))
    return None


def parse_config(text):
    """Parse and validate a config document.

    Raises
    ------
    ConfigurationError
        Listing every unknown key and violated constraint in ``violations``.
    """
    values, errors = _read_values(text)

    def get(section, key, default=None):
        return values.get((section, key), default)

    grid = filt = deconv = physics = integ = None
    if ("grid", "n_per_axis") in values:
        grid = _build(GridSpec, {"n_per_axis": get("grid", "n_per_axis"),
                                 "padded_n": get("grid", "padded_n")}, errors)
    if ("filter", "alpha") in values and ("filter", "theta") in values:
        alpha, theta = get("filter", "alpha"), get("filter", "theta")
        if not 0.0 <= theta <= 1.0:
            errors.append(f"theta ∈ [0,1] violated: theta = {theta}")
        if not alpha > 0:
            errors.append(f"alpha > 0 violated: alpha = {alpha}")
        if alpha > 0 and 0.0 <= theta <= 1.0:
            filt = FilterParams(alpha, theta)
    if ("deconv", "order_n") in values:
        deconv = _build(DeconvParams, {"order_n": get("deconv", "order_n")}, errors)
    if ("physics", "case") in values:
        case = get("physics", "case")
        if case not in {c.value for c in ModelCase}:
            errors.append(f"unknown physics.case {case!r}; expected one of "
                          f"{[c.value for c in ModelCase]}")
        else:
            physics = _build(PhysicalParams, {"nu": get("physics", "nu", 0.0),
                                              "mu": get("physics", "mu", 0.0),
                                              "case": case}, errors)
    if ("integrator", "t_end") in values:
        integ = _build(IntegratorConfig, {
            "dt": get("integrator", "dt", 1e-3),
            "t_end": get("integrator", "t_end"),
            "cfl_safety": get("integrator", "cfl_safety", 0.5),
            "scheme": get("integrator", "scheme", "IFRK4"),
        }, errors)

    init_kwargs = {k: values[("initial", k)] for s, k in values if s == "initial"}
    initial = None
    kind = init_kwargs.get("kind")
    if kind is not None:
        if kind not in INITIAL_KINDS:
            errors.append(f"initial.kind must be one of {INITIAL_KINDS}, got {kind!r}")
        else:
            if "abc" in init_kwargs and len(init_kwargs["abc"]) != 3:
                errors.append("initial.abc needs three amplitudes A, B, C")
            if "band" in init_kwargs:
                band = init_kwargs["band"]
                if len(band) != 2 or not 0 < band[0] <= band[1]:
                    errors.append("initial.band must be 'kmin, kmax' with 0 < kmin <= kmax")
            if kind == "FromSnapshot" and not init_kwargs.get("path"):
                errors.append("initial.kind = FromSnapshot requires initial.path")
            initial = InitialCondition(**init_kwargs)

    out_kwargs = {k: values[("output", k)] for s, k in values if s == "output"}
    if out_kwargs.get("record_interval", 1) < 1:
        errors.append("output.record_interval must be >= 1")
    if out_kwargs.get("snapshot_interval", 0) < 0:
        errors.append("output.snapshot_interval must be >= 0")
    output = OutputConfig(**out_kwargs)

    if errors:
        raise ConfigurationError("invalid configuration: " + "; ".join(errors), errors)
    return SimConfig(grid, filt, deconv, physics, integ, initial, output)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def render_config(cfg):
    """Render ``cfg`` so that ``parse_config(render_config(cfg)) == cfg``."""
    ini = cfg.initial
    lines = [
        "[grid]",
        f"n_per_axis = {cfg.grid.n_per_axis}",
        f"padded_n = {cfg.grid.padded_n}",
        "",
        "[filter]",
        f"alpha = {cfg.filter.alpha!r}",
        f"theta = {cfg.filter.theta!r}",
        "",
        "[deconv]",
        f"order_n = {cfg.deconv.order_n}",
        "",
        "[physics]",
        f"case = {cfg.physics.case.value}",
        f"nu = {cfg.physics.nu!r}",
        f"mu = {cfg.physics.mu!r}",
        "",
        "[integrator]",
        f"dt = {cfg.integrator.dt!r}",
        f"t_end = {cfg.integrator.t_end!r}",
        f"cfl_safety = {cfg.integrator.cfl_safety!r}",
        f"scheme = {cfg.integrator.scheme}",
        "",
        "[initial]",
        f"kind = {ini.kind}",
        "abc = " + ", ".join(repr(float(v)) for v in ini.abc),
        f"seed = {ini.seed}",
        f"spectrum_slope = {ini.spectrum_slope!r}",
        "band = " + ", ".join(repr(float(v)) for v in ini.band),
        f"v_amplitude = {ini.v_amplitude!r}",
    ]
    if ini.b_amplitude is not None:
        lines.append(f"b_amplitude = {ini.b_amplitude!r}")
    if ini.path:
        lines.append(f"path = {ini.path}")
    lines += [
        "",
        "[output]",
        f"record_interval = {cfg.output.record_interval}",
        f"snapshot_interval = {cfg.output.snapshot_interval}",
    ]
    if cfg.output.directory:
        lines.append(f"directory = {cfg.output.directory}")
    return "\n".join(lines) + "\n"


def initial_velocity(cfg):
    """The unfiltered initial velocity ``v0`` for ABC and random data."""
    ini = cfg.initial
    grid = cfg.grid
    if ini.kind == "ABC":
        return abc_field(grid, *ini.abc)
    if ini.kind == "RandomSolenoidal":
        return random_solenoidal(grid, ini.seed, ini.spectrum_slope, ini.band, ini.v_amplitude)
    raise ConfigurationError(f"initial kind {ini.kind!r} has no analytic v0")


def make_initial_state(cfg):
    """Build ``(w0, B0)`` with ``w0 = A^-1 v0``; snapshots are loaded verbatim."""
    ini = cfg.initial
    grid = cfg.grid
    if ini.kind == "FromSnapshot":
        state = read_state(ini.path, grid)
        if not cfg.physics.has_magnetic:
            state = state.replace(b=SpectralVectorField.zeros(grid))
        return state
    v0 = initial_velocity(cfg)
    w0 = apply_helmholtz_power(v0, cfg.filter, -1.0)
    b_amp = ini.magnetic_amplitude if cfg.physics.has_magnetic else 0.0
    if b_amp > 0:
        # separate stream so that B0 does not alias v0's noise
        b0 = random_solenoidal(grid, [ini.seed, 1], ini.spectrum_slope, ini.band, b_amp)
    else:
        b0 = SpectralVectorField.zeros(grid)
    return MhdState(w0, b0, 0.0)


def unfiltered_l2(cfg, state0):
    """``||A w0||_2``, the right-hand side norm of the energy inequality."""
    return sobolev_norm(apply_helmholtz_power(state0.w, cfg.filter, 1.0), 0.0)
