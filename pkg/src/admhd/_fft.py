"""Real 3-D FFTs over the last three axes, unnormalized in both directions.

Uses cached pyFFTW plans when pyFFTW is installed and scipy.fft otherwise.
Plans are made with ``FFTW_ESTIMATE`` (no timing-based planning) on a single
thread, so repeated runs produce bit-identical results.  Set ``ADMHD_FFT=scipy``
to force the scipy backend.
"""

from __future__ import annotations

import os
import threading

import scipy.fft as sfft

try:  # optional accelerator
    import pyfftw
    import pyfftw.builders
except ImportError:  # pragma: no cover - depends on environment
    pyfftw = None

BACKEND = "pyfftw" if pyfftw is not None and os.environ.get("ADMHD_FFT") != "scipy" else "scipy"

_local = threading.local()


def _plan(kind, shape, m):
    plans = getattr(_local, "plans", None)
    if plans is None:
        plans = _local.plans = {}
    key = (kind, shape, m)
    plan = plans.get(key)
    if plan is None:
        axes = (-3, -2, -1)
        if kind == "r2c":
            template = pyfftw.empty_aligned(shape, dtype="float64")
            plan = pyfftw.builders.rfftn(template, axes=axes, threads=1,
                                         planner_effort="FFTW_ESTIMATE")
        else:
            template = pyfftw.empty_aligned(shape, dtype="complex128")
            plan = pyfftw.builders.irfftn(template, s=(m, m, m), axes=axes, threads=1,
                                          planner_effort="FFTW_ESTIMATE")
        plans[key] = plan
    return plan


def rfft3(samples):
    """Unnormalized forward transform; result may be a reused plan buffer."""
    if BACKEND == "scipy":
        return sfft.rfftn(samples, axes=(-3, -2, -1), workers=1)
    return _plan("r2c", samples.shape, samples.shape[-1])(samples)


def irfft3(coeffs, m):
    """Unnormalized inverse transform onto an ``m^3`` grid (fresh array)."""
    if BACKEND == "scipy":
        return sfft.irfftn(coeffs, s=(m, m, m), axes=(-3, -2, -1), norm="forward",
                           workers=1)
    return _plan("c2r", coeffs.shape, m)(coeffs, normalise_idft=False).copy()
