"""Initial data: ABC (Beltrami) flows and seeded random solenoidal fields."""

from __future__ import annotations

import numpy as np

from admhd.spectral import SpectralVectorField, forward_transform, leray_project, sobolev_norm

__all__ = ["abc_field", "random_solenoidal"]


def abc_field(grid, a=1.0, b=1.0, c=1.0):
    """ABC flow ``(a sin z + c cos y, b sin x + a cos z, c sin y + b cos x)``.

    It lives on the shell ``|k| = 1`` and satisfies ``curl u = u``.
    """
    fld = SpectralVectorField.zeros(grid)
    # sin t = (e^{it} - e^{-it}) / 2i, cos t = (e^{it} + e^{-it}) / 2
    fld.set_mode((0, 0, 1), [-0.5j * a, 0.5 * a, 0.0])
    fld.set_mode((1, 0, 0), [0.0, -0.5j * b, 0.5 * b])
    fld.set_mode((0, 1, 0), [0.5 * c, 0.0, -0.5j * c])
    return fld


def random_solenoidal(grid, seed, spectrum_slope=-1.0, band=(1.0, 4.0), amplitude=1.0):
    """Seeded smooth solenoidal field with ``|c_k| ~ |k|^slope`` inside ``band``.

    White Gaussian samples on the padded grid are transformed, shaped, projected
    and scaled so that the L2 norm equals ``amplitude``.  ``seed`` may be an int
    or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.standard_normal((3,) + grid.physical_shape)
    fld = forward_transform(noise, grid)
    kmag = np.sqrt(grid.k_sq_safe)
    lo, hi = band
    shape = np.where((kmag >= lo) & (kmag <= hi), kmag**spectrum_slope, 0.0)
    fld = leray_project(fld.with_coeffs(fld.coeffs * shape))
    norm = sobolev_norm(fld, 0.0)
    if norm == 0.0 or amplitude == 0.0:
        return SpectralVectorField.zeros(grid)
    return fld * (amplitude / norm)
