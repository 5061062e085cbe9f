"""Cancellation-free evaluation of the trigonometric ratios behind the
closed-form geodesics and distortion coefficients.

Every helper is elementwise over numpy arrays and switches to a truncated
Taylor series when ``|t| < SERIES_CUTOFF``.
"""

import numpy as np

SERIES_CUTOFF = 0.1

# coefficients in powers of t**2
_SINC = (1.0, -1 / 6, 1 / 120, -1 / 5040, 1 / 362880, -1 / 39916800)
_COSM1 = (-1 / 2, 1 / 24, -1 / 720, 1 / 40320, -1 / 3628800, 1 / 479001600)
_TSIN = (1 / 6, -1 / 120, 1 / 5040, -1 / 362880, 1 / 39916800, -1 / 6227020800)
_SINMC = (1 / 3, -1 / 30, 1 / 840, -1 / 45360, 1 / 3991680, -1 / 518918400)


def _series(t2, coeffs):
    out = np.zeros_like(t2)
    for c in reversed(coeffs):
        out = out * t2 + c
    return out


def _blend(t, direct, coeffs, odd):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.asarray(direct(np.where(small, 1.0, t)), dtype=float)
    if np.any(small):
        ts = t[small]
        ser = _series(ts * ts, coeffs)
        out[small] = ser * ts if odd else ser
    return out


def sinc(t):
    """sin(t)/t."""
    return _blend(t, lambda u: np.sin(u) / u, _SINC, odd=False)


def cosm1_over(t):
    """(cos(t) - 1)/t."""
    return _blend(t, lambda u: (np.cos(u) - 1.0) / u, _COSM1, odd=True)


def tsin_over_sq(t):
    """(t - sin(t))/t**2."""
    return _blend(t, lambda u: (u - np.sin(u)) / (u * u), _TSIN, odd=True)


def tsin_over_cube(t):
    """(t - sin(t))/t**3."""
    return _blend(t, lambda u: (u - np.sin(u)) / u**3, _TSIN, odd=False)


def sinmc_over_cube(u):
    """(sin(u) - u cos(u))/u**3."""
    return _blend(u, lambda v: (np.sin(v) - v * np.cos(v)) / v**3, _SINMC, odd=False)
