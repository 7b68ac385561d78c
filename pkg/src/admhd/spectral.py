"""Mean-free periodic fields stored as Fourier coefficients on a truncated lattice.

Coefficients use the real-to-complex half layout: arrays of shape
``(..., n, n, n // 2 + 1)`` indexed by ``(kx, ky, kz)`` in FFT order, with
``kz >= 0`` only.  Modes with ``kz < 0`` are implied by conjugate symmetry,
so every sum over the full lattice weights the ``kz > 0`` half by 2.

A field is ``v(x) = sum_k c_k exp(i k.x)`` on the torus ``[0, 2*pi)^3``.  The
retained band is ``|k_j| <= n/2 - 1`` (Nyquist modes are pinned to zero, as is
``k = 0``).  Quadratic products are formed on a padded grid of ``padded_n``
points per axis, which makes the truncated product exact when
``padded_n >= 3n/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from admhd._fft import irfft3, rfft3
from admhd.errors import ConfigurationError, InvariantViolationError

__all__ = [
    "GridSpec",
    "SpectralVectorField",
    "SpectralScalarField",
    "forward_transform",
    "inverse_transform",
    "forward_transform_scalar",
    "inverse_transform_scalar",
    "sobolev_norm",
    "inner_product",
    "leray_project",
    "galerkin_truncate",
    "divergence_residual",
    "mean_residual",
    "conjugate_symmetry_residual",
]

SYMMETRY_RTOL = 1e-12

@dataclass(frozen=True)
class GridSpec:
    """Truncated Fourier lattice plus the padded physical sampling grid."""

    n_per_axis: int
    padded_n: int | None = None

    domain_period: float = field(default=2 * math.pi, init=False)

    def __post_init__(self):
        n = self.n_per_axis
        if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
            raise ConfigurationError(
                f"n_per_axis must be an even integer >= 4, got {n!r}")
        if self.padded_n is None:
            m = math.ceil(3 * n / 2)
            object.__setattr__(self, "padded_n", m + (m % 2))
        m = self.padded_n
        if not isinstance(m, (int, np.integer)) or m % 2:
            raise ConfigurationError(f"padded_n must be an even integer, got {m!r}")
        if m < math.ceil(3 * n / 2):
            raise ConfigurationError(
                f"padded_n={m} violates padded_n >= ceil(3*n_per_axis/2) = "
                f"{math.ceil(3 * n / 2)}")

    @property
    def kmax(self) -> int:
        """Largest retained wavenumber per axis."""
        return self.n_per_axis // 2 - 1

    @property
    def shape(self):
        n = self.n_per_axis
        return (n, n, n // 2 + 1)

    @property
    def physical_shape(self):
        m = self.padded_n
        return (m, m, m)

    @property
    def dx(self) -> float:
        return self.domain_period / self.n_per_axis

    @cached_property
    def wavenumbers(self):
        """Integer wavenumber vector, shape ``(3, n, n, n//2+1)``."""
        n = self.n_per_axis
        k1 = np.fft.fftfreq(n, 1.0 / n)
        kz = np.arange(n // 2 + 1, dtype=float)
        kx, ky, kz = np.meshgrid(k1, k1, kz, indexing="ij")
        return np.stack([kx, ky, kz])

    @cached_property
    def k_sq(self):
        return np.sum(self.wavenumbers**2, axis=0)

    @cached_property
    def k_sq_safe(self):
        """``|k|^2`` with the mean mode replaced by 1 (for divisions)."""
        ks = self.k_sq.copy()
        ks[0, 0, 0] = 1.0
        return ks

    @cached_property
    def retained(self):
        """Boolean mask of retained, nonzero lattice points."""
        mask = np.all(np.abs(self.wavenumbers) <= self.kmax, axis=0)
        mask[0, 0, 0] = False
        return mask

    @cached_property
    def weights(self):
        """Multiplicity of each stored mode in a full-lattice sum (0, 1 or 2)."""
        w = np.where(self.wavenumbers[2] > 0, 2.0, 1.0)
        return w * self.retained

    @cached_property
    def k_max_norm(self) -> float:
        """Largest retained ``|k|``."""
        return math.sqrt(3.0) * self.kmax

    @cached_property
    def _blocks(self):
        n, m, K = self.n_per_axis, self.padded_n, self.kmax
        # (padded slice, retained slice) for the nonnegative and negative runs
        return (
            (slice(0, K + 1), slice(0, K + 1)),
            (slice(m - K, m), slice(n - K, n)),
        )

    def to_physical(self, coeffs):
        """Inverse FFT of stacked coefficients onto the padded grid (no checks)."""
        m = self.padded_n
        K = self.kmax
        big = np.zeros(coeffs.shape[:-3] + (m, m, m // 2 + 1), dtype=complex)
        for dx, sx in self._blocks:
            for dy, sy in self._blocks:
                big[..., dx, dy, : K + 1] = coeffs[..., sx, sy, : K + 1]
        return irfft3(big, m)

    def to_spectral(self, samples):
        """Forward FFT of padded-grid samples restricted to the retained band."""
        K = self.kmax
        big = rfft3(samples)
        out = np.zeros(samples.shape[:-3] + self.shape, dtype=complex)
        for dx, sx in self._blocks:
            for dy, sy in self._blocks:
                out[..., sx, sy, : K + 1] = big[..., dx, dy, : K + 1]
        out *= 1.0 / self.padded_n**3
        out[..., 0, 0, 0] = 0.0
        return out

    def physical_coordinates(self):
        """Meshgrid of the padded sampling points, shape ``(3, m, m, m)``."""
        m = self.padded_n
        x = np.arange(m) * (self.domain_period / m)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    def mode_index(self, k):
        """Storage index of lattice point ``k`` and whether it is stored conjugated.

        Returns ``(index, conj)`` where ``conj`` is True when ``k`` lies in the
        implied half (``kz < 0``) and ``index`` addresses ``-k`` instead.
        """
        kx, ky, kz = (int(v) for v in k)
        if max(abs(kx), abs(ky), abs(kz)) > self.kmax:
            raise ConfigurationError(f"wavenumber {k} outside retained band")
        conj = kz < 0
        if conj:
            kx, ky, kz = -kx, -ky, -kz
        n = self.n_per_axis
        return (kx % n, ky % n, kz), conj


def _reflect_plane(plane):
    """``P[-i, -j]`` for the last two axes in FFT ordering."""
    return np.roll(np.flip(plane, axis=(-2, -1)), 1, axis=(-2, -1))


def conjugate_symmetry_residual(coeffs):
    """Max ``|c(k) - conj(c(-k))|`` over the self-conjugate ``kz = 0`` plane."""
    plane = coeffs[..., 0]
    if plane.size == 0:
        return 0.0
    return float(np.max(np.abs(plane - np.conj(_reflect_plane(plane)))))


def _symmetrize(coeffs):
    plane = coeffs[..., 0]
    coeffs[..., 0] = 0.5 * (plane + np.conj(_reflect_plane(plane)))
    return coeffs


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Three-component mean-free field, coefficients shape ``(3, *grid.shape)``."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (3,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise ConfigurationError(
                f"coefficient array has shape {self.coeffs.shape}, expected {expected}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex))

    def with_coeffs(self, coeffs):
        return type(self)(self.grid, coeffs)

    def copy(self):
        return self.with_coeffs(self.coeffs.copy())

    def set_mode(self, k, value):
        """Set the coefficient at ``k`` (and its conjugate partner) in place.

        Only meant for building fields; the object is otherwise treated as
        immutable.
        """
        value = np.asarray(value, dtype=complex)
        idx, conj = self.grid.mode_index(k)
        self.coeffs[(slice(None),) + idx] = np.conj(value) if conj else value
        if idx[2] == 0:
            n = self.grid.n_per_axis
            partner = ((-idx[0]) % n, (-idx[1]) % n, 0)
            self.coeffs[(slice(None),) + partner] = value if conj else np.conj(value)
        return self

    def mode(self, k):
        idx, conj = self.grid.mode_index(k)
        c = self.coeffs[(slice(None),) + idx]
        return np.conj(c) if conj else c.copy()

    def norm(self, s=0.0):
        return sobolev_norm(self, s)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)


@dataclass(frozen=True, eq=False)
class SpectralScalarField:
    """Mean-free scalar field, coefficients shape ``grid.shape``."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ConfigurationError(
                f"coefficient array has shape {self.coeffs.shape}, "
                f"expected {self.grid.shape}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def norm(self, s=0.0):
        return sobolev_norm(self, s)


def _check_samples(samples, grid, ncomp):
    expected = ((ncomp,) if ncomp else ()) + grid.physical_shape
    samples = np.asarray(samples)
    if samples.shape != expected:
        raise ConfigurationError(
            f"sample array has shape {samples.shape}, expected {expected} "
            f"for padded_n={grid.padded_n}")
    if np.iscomplexobj(samples):
        raise ConfigurationError("physical samples must be real")
    return samples


def forward_transform(samples, grid):
    """Fourier coefficients of real vector samples on the padded grid.

    The mean is discarded and everything outside the retained band is dropped.
    """
    samples = _check_samples(samples, grid, 3)
    coeffs = _symmetrize(grid.to_spectral(samples))
    return SpectralVectorField(grid, coeffs)


def forward_transform_scalar(samples, grid):
    samples = _check_samples(samples, grid, 0)
    return SpectralScalarField(grid, _symmetrize(grid.to_spectral(samples)))


def _check_symmetry(fld):
    scale = max(float(np.sqrt(np.sum(fld.grid.weights * np.abs(fld.coeffs) ** 2))), 1.0)
    res = conjugate_symmetry_residual(fld.coeffs)
    if res > SYMMETRY_RTOL * scale:
        raise InvariantViolationError(
            f"conjugate symmetry broken: residual {res:.3e} "
            f"exceeds {SYMMETRY_RTOL:g} * {scale:.3e}")


def inverse_transform(fld):
    """Real samples ``(3, m, m, m)`` of a vector field on the padded grid."""
    _check_symmetry(fld)
    return fld.grid.to_physical(fld.coeffs)


def inverse_transform_scalar(fld):
    _check_symmetry(fld)
    return fld.grid.to_physical(fld.coeffs)


def sobolev_norm(fld, s):
    """``sqrt(sum_k |k|^(2s) |c_k|^2)`` over the full retained lattice."""
    if s < -1:
        raise ConfigurationError(f"Sobolev index must be >= -1, got {s}")
    grid = fld.grid
    weight = grid.weights * grid.k_sq_safe**s
    sq = np.abs(fld.coeffs) ** 2
    if sq.ndim == 4:
        sq = sq.sum(axis=0)
    return float(np.sqrt(np.sum(weight * sq)))


def inner_product(u, v, s=0.0):
    """Real ``H^s`` inner product ``sum_k |k|^(2s) c_k . conj(d_k)``."""
    grid = u.grid
    prod = (u.coeffs * np.conj(v.coeffs)).real
    if prod.ndim == 4:
        prod = prod.sum(axis=0)
    return float(np.sum(grid.weights * grid.k_sq_safe**s * prod))


def project_coeffs(coeffs, grid):
    """Leray projection of a raw coefficient stack."""
    k = grid.wavenumbers
    kdotc = np.einsum("i...,i...->...", k, coeffs)
    return coeffs - k * (kdotc / grid.k_sq_safe)


def leray_project(fld):
    """Remove the gradient part of each mode: ``c - k (k.c) / |k|^2``."""
    return fld.with_coeffs(project_coeffs(fld.coeffs, fld.grid))


def galerkin_truncate(fld, cutoff):
    """Zero every mode with ``|k| > cutoff``."""
    if cutoff <= 0:
        raise ConfigurationError(f"cutoff must be positive, got {cutoff}")
    keep = fld.grid.k_sq <= cutoff * cutoff
    return type(fld)(fld.grid, fld.coeffs * keep)


def divergence_residual(fld):
    """``max_k |k . c_k|``."""
    kdotc = np.einsum("i...,i...->...", fld.grid.wavenumbers, fld.coeffs)
    return float(np.max(np.abs(kdotc)))


def mean_residual(fld):
    """Magnitude of the stored ``k = 0`` coefficient."""
    return float(np.max(np.abs(fld.coeffs[..., 0, 0, 0])))
