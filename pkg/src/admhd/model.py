"""Right-hand sides of the deconvolution MHD system and its variants.

Unknowns are the filtered velocity ``w`` and the magnetic field ``B``.  With
``u = D_N w`` (or ``u = A w`` for the limit model) and ``bar = A^-1``:

    dw/dt = -P bar(div(u (x) u) - div(B (x) B)) + nu lap w
    dB/dt = -div(u (x) B) + div(B (x) u) + mu lap B

where ``div(X)_j = d_i X_ij`` and ``P`` is the Leray projector, which also
removes the pressure gradient.  Products are evaluated on the padded grid so
the retained coefficients equal the exact Galerkin projection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from admhd.errors import ConfigurationError
from admhd.filters import deconv_symbol, helmholtz_symbol
from admhd.spectral import (
    SpectralScalarField,
    SpectralVectorField,
    inner_product,
    project_coeffs,
    sobolev_norm,
)

__all__ = [
    "ModelCase",
    "PhysicalParams",
    "MhdState",
    "model_symbols",
    "filtered_divergence_of_product",
    "nonlinear_terms",
    "momentum_rhs",
    "induction_rhs",
    "recover_pressure",
    "pressure_source",
    "energy_cancellation_check",
    "cross_term_identity_residual",
]


class ModelCase(str, enum.Enum):
    DOUBLE_VISCOUS = "DoubleViscous"
    INVISCID_MOMENTUM = "InviscidMomentum"
    DECONV_EULER = "DeconvEuler"
    LIMIT_MODEL = "LimitModel"


@dataclass(frozen=True)
class PhysicalParams:
    nu: float
    mu: float
    case: ModelCase = ModelCase.DOUBLE_VISCOUS

    def __post_init__(self):
        object.__setattr__(self, "case", ModelCase(self.case))
        errors = self.violations()
        if errors:
            raise ConfigurationError("; ".join(errors), errors)

    def violations(self):
        out = []
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            out.append(f"nu must be >= 0, got {self.nu}")
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            out.append(f"mu must be >= 0, got {self.mu}")
        if self.case is ModelCase.DOUBLE_VISCOUS and not (self.nu > 0 and self.mu > 0):
            out.append("DoubleViscous requires nu > 0 and mu > 0 "
                       "(double viscous well-posedness setting)")
        if self.case is ModelCase.INVISCID_MOMENTUM and not (self.nu == 0 and self.mu > 0):
            out.append("InviscidMomentum requires nu = 0 and mu > 0")
        if self.case is ModelCase.DECONV_EULER and self.nu != 0:
            out.append("DeconvEuler requires nu = 0")
        return out

    @property
    def has_magnetic(self):
        return self.case is not ModelCase.DECONV_EULER

    @property
    def limit(self):
        return self.case is ModelCase.LIMIT_MODEL

    @property
    def magnetic_diffusivity(self):
        return self.mu if self.has_magnetic else 0.0


@dataclass(frozen=True, eq=False)
class MhdState:
    w: SpectralVectorField
    b: SpectralVectorField
    t: float = 0.0

    @property
    def grid(self):
        return self.w.grid

    def replace(self, w=None, b=None, t=None):
        return MhdState(self.w if w is None else w,
                        self.b if b is None else b,
                        self.t if t is None else t)


@lru_cache(maxsize=32)
def _symbols(grid, fp, dp, limit):
    a_hat = helmholtz_symbol(grid.k_sq, fp, 1.0) * grid.retained
    a_inv = helmholtz_symbol(grid.k_sq, fp, -1.0) * grid.retained
    d_hat = a_hat if limit else deconv_symbol(grid.k_sq, fp, dp) * grid.retained
    for arr in (a_hat, a_inv, d_hat):
        arr.setflags(write=False)
    return a_hat, a_inv, d_hat


def model_symbols(grid, fp, dp, pp=None):
    """``(A_hat, A_hat^-1, D_hat)`` masked to the retained band.

    For the limit model ``D_hat`` is replaced by ``A_hat``.
    """
    return _symbols(grid, fp, dp, bool(pp is not None and pp.limit))


def _divergence(tensor_hat, k):
    """``(div X)_j = sum_i i k_i X_ij`` for a full 3x3 stack ``(3, 3, ...)``."""
    return 1j * np.einsum("i...,ij...->j...", k, tensor_hat)


def filtered_divergence_of_product(u, v, fp=None, apply_bar=False):
    """``div(u (x) v)`` with ``div(X)_j = d_i X_ij``, i.e. ``(u . grad) v``.

    The product is formed on the padded grid and truncated to the retained
    band.  With ``apply_bar`` the result is filtered by ``A^-1``.
    """
    if u.grid != v.grid:
        raise ConfigurationError("fields live on different grids")
    grid = u.grid
    U = grid.to_physical(u.coeffs)
    V = grid.to_physical(v.coeffs)
    prod = grid.to_spectral(U[:, None] * V[None, :])
    out = _divergence(prod, grid.wavenumbers)
    if apply_bar:
        if fp is None:
            raise ConfigurationError("apply_bar requires filter parameters")
        out = out * helmholtz_symbol(grid.k_sq, fp, -1.0)
    return SpectralVectorField(grid, out * grid.retained)


# index pairs of the 6 independent entries of a symmetric 3x3 tensor
_SYM = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _symmetric_stress(U, B):
    """Stack of ``U_i U_j - B_i B_j`` for the independent entries."""
    out = np.empty((6,) + U.shape[1:])
    for n, (i, j) in enumerate(_SYM):
        np.multiply(U[i], U[j], out=out[n])
        if B is not None:
            out[n] -= B[i] * B[j]
    return out


def _div_symmetric(s_hat, k):
    s00, s01, s02, s11, s12, s22 = s_hat
    return 1j * np.stack([
        k[0] * s00 + k[1] * s01 + k[2] * s02,
        k[0] * s01 + k[1] * s11 + k[2] * s12,
        k[0] * s02 + k[1] * s12 + k[2] * s22,
    ])


def _stress_hat(w, b, grid, d_hat, with_b):
    U = grid.to_physical(d_hat * w)
    B = grid.to_physical(b) if with_b else None
    return U, B, grid.to_spectral(_symmetric_stress(U, B))


def nonlinear_terms(w, b, grid, fp, dp, pp):
    """Projected nonlinear tendencies ``(N_w, N_b)`` as raw coefficient stacks.

    ``N_b`` is None when the case carries no magnetic field.
    """
    a_hat, a_inv, d_hat = model_symbols(grid, fp, dp, pp)
    with_b = pp.has_magnetic
    k = grid.wavenumbers
    U, B, s_hat = _stress_hat(w, b, grid, d_hat, with_b)
    nw = -project_coeffs(a_inv * _div_symmetric(s_hat, k), grid)
    if not with_b:
        return nw, None
    # T_ij = u_i B_j - B_i u_j is antisymmetric; dB/dt = -d_i T_ij
    t = np.empty((3,) + U.shape[1:])
    for n, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        np.multiply(U[i], B[j], out=t[n])
        t[n] -= B[i] * U[j]
    t01, t02, t12 = grid.to_spectral(t)
    nb = 1j * np.stack([
        k[1] * t01 + k[2] * t02,
        -k[0] * t01 + k[2] * t12,
        -k[0] * t02 - k[1] * t12,
    ])
    return nw, nb * grid.retained


def momentum_rhs(state, fp, dp, pp):
    """Leray-projected momentum tendency including viscous diffusion."""
    grid = state.grid
    nw, _ = nonlinear_terms(state.w.coeffs, state.b.coeffs, grid, fp, dp, pp)
    return SpectralVectorField(grid, nw - pp.nu * grid.k_sq * state.w.coeffs)


def induction_rhs(state, fp, dp, pp):
    """Magnetic tendency; identically zero for the deconvolution Euler case."""
    grid = state.grid
    if not pp.has_magnetic:
        return SpectralVectorField.zeros(grid)
    _, nb = nonlinear_terms(state.w.coeffs, state.b.coeffs, grid, fp, dp, pp)
    return SpectralVectorField(grid, nb - pp.mu * grid.k_sq * state.b.coeffs)


def _full_from_symmetric(s_hat):
    idx = {(i, j): n for n, (i, j) in enumerate(_SYM)}
    return np.stack([
        np.stack([s_hat[idx[min(i, j), max(i, j)]] for j in range(3)])
        for i in range(3)
    ])


def pressure_source(state, fp, dp, pp=None):
    """Fourier coefficients of ``-div div bar(u (x) u - B (x) B)``, truncated."""
    grid = state.grid
    pp = pp or PhysicalParams(0.0, 1.0, ModelCase.INVISCID_MOMENTUM)
    _, a_inv, d_hat = model_symbols(grid, fp, dp, pp)
    _, _, s_hat = _stress_hat(state.w.coeffs, state.b.coeffs, grid, d_hat, pp.has_magnetic)
    s_full = _full_from_symmetric(s_hat) * a_inv
    k = grid.wavenumbers
    # div div X has symbol (i k_i)(i k_j) = -k_i k_j
    return np.einsum("i...,j...,ij...->...", k, k, s_full) * grid.retained


def recover_pressure(state, fp, dp, pp=None):
    """Solve ``lap q = -div div bar(S)`` mode by mode (q mean-free)."""
    grid = state.grid
    src = pressure_source(state, fp, dp, pp)
    return SpectralScalarField(grid, -src / grid.k_sq_safe * grid.retained)


def energy_cancellation_check(state, fp, dp, pp=None):
    """Relative size of the nonlinear work in the model energy balance.

    Returns ``|<N_w, A u> + <N_b, B>| / (||N_w|| ||A u|| + ||N_b|| ||B||)`` with
    ``u = D_N w``; the numerator vanishes identically for the exact system.
    """
    grid = state.grid
    pp = pp or PhysicalParams(0.0, 1.0, ModelCase.INVISCID_MOMENTUM)
    a_hat, _, d_hat = model_symbols(grid, fp, dp, pp)
    nw, nb = nonlinear_terms(state.w.coeffs, state.b.coeffs, grid, fp, dp, pp)
    nw = SpectralVectorField(grid, nw)
    test_w = SpectralVectorField(grid, a_hat * d_hat * state.w.coeffs)
    work = inner_product(nw, test_w)
    scale = sobolev_norm(nw, 0) * sobolev_norm(test_w, 0)
    if nb is not None:
        nb = SpectralVectorField(grid, nb)
        work += inner_product(nb, state.b)
        scale += sobolev_norm(nb, 0) * sobolev_norm(state.b, 0)
    if scale == 0.0:
        return 0.0
    return abs(work) / scale


def cross_term_identity_residual(state, fp, dp):
    """Relative mismatch in ``<bar(B (x) B), grad A u> = -<B (x) u, grad B>``.

    The left side is evaluated spectrally from the truncated product, the right
    side by physical-space quadrature on the padded grid (exact for these
    band-limited triple products).
    """
    grid = state.grid
    a_hat, a_inv, d_hat = _symbols(grid, fp, dp, False)
    k = grid.wavenumbers
    b = state.b.coeffs
    u = d_hat * state.w.coeffs
    Bp = grid.to_physical(b)
    Up = grid.to_physical(u)
    bb_hat = grid.to_spectral(Bp[:, None] * Bp[None, :]) * a_inv
    grad_au = 1j * k[:, None] * (a_hat * u)[None, :]  # (grad v)_ij = d_i v_j
    lhs = float(np.sum(grid.weights * np.einsum("ij...,ij...->...",
                                                 bb_hat, np.conj(grad_au)).real))
    grad_b = grid.to_physical(1j * k[:, None] * b[None, :])
    rhs = -float(np.mean(np.einsum("i...,j...,ij...->...", Bp, Up, grad_b)))
    scale = max(abs(lhs), abs(rhs), np.finfo(float).tiny)
    return abs(lhs - rhs) / scale
