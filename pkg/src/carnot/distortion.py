"""Distortion coefficients tau_s (pointwise and over sets) and weighted p-means."""

import math

import numpy as np

from . import _special as sp
from .distance import BLOCK_ZERO_TOL, BOUNDARY_TOL, CutClass, relative_log
from .group import GroupSpec


def _check_s(s, allow_one=True):
    s = float(s)
    if not (0.0 < s < 1.0 or (allow_one and s == 1.0)):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    return s


def dd1(t, s):
    """sin(t s / 2) / s, evaluated as (t/2) sinc(t s / 2)."""
    s = _check_s(s)
    t = np.asarray(t, dtype=float)
    return 0.5 * t * sp.sinc(0.5 * t * s)


def dd2(t, s):
    """(sin(u) - u cos(u)) / s with u = t s / 2."""
    s = _check_s(s)
    t = np.asarray(t, dtype=float)
    return (0.5 * t) ** 3 * s * s * sp.sinmc_over_cube(0.5 * t * s)


def _weighted_sum(alpha, r, pz, s):
    """sum_i r_i alpha_i^2 S(u_i) W(u_i) prod_{j != i} S(u_j)^2 at u = s alpha p_z / 2.

    Up to a factor independent of s this is the numerator of the ratio branch
    divided by s^2; see :func:`tau`.
    """
    u = 0.5 * s * alpha * pz[..., None]
    S = sp.sinc(u)
    W = sp.sinmc_over_cube(u)
    s2 = S * S
    total = np.zeros(pz.shape)
    for i in range(alpha.size):
        others = np.prod(np.delete(s2, i, axis=-1), axis=-1)
        total = total + r[..., i] * alpha[i] ** 2 * S[..., i] * W[..., i] * others
    return total


def tau(spec: GroupSpec, s, p):
    """Distortion coefficient tau_s(p) for covectors in the closed strip; +inf on the boundary.

    Accepts a single covector or a batch; returns a float or an array.
    """
    s = _check_s(s)
    p = spec.check(p)
    scalar = p.ndim == 1
    p = np.atleast_2d(p)
    alpha = spec.alpha_array
    T = spec.pz_max
    pz = spec.vertical(p)
    b = spec.blocks(p)
    norms = np.linalg.norm(b, axis=-1)
    r = np.where(norms < BLOCK_ZERO_TOL, 0.0, norms**2)
    abnormal = ~np.any(r > 0, axis=-1)
    gap = np.abs(pz) - T
    if np.any(~abnormal & (gap > BOUNDARY_TOL)):
        raise ValueError("covector lies outside the closed injectivity strip")
    boundary = ~abnormal & (np.abs(gap) <= BOUNDARY_TOL)

    k1 = spec.k + 1
    out = np.full(pz.shape, s ** ((spec.k + 3) / k1))
    ratio_mask = ~abnormal & ~boundary & (pz != 0)
    if np.any(ratio_mask):
        pzr = pz[ratio_mask]
        rr = r[ratio_mask]
        num = _weighted_sum(alpha, rr, pzr, s)
        den = _weighted_sum(alpha, rr, pzr, 1.0)
        out[ratio_mask] = s * (s * s * num / den) ** (1.0 / k1)
    out[boundary] = math.inf
    out[abnormal] = s
    return float(out[0]) if scalar else out


def tau_tilde(spec: GroupSpec, s, p):
    """tau_s(p) / s."""
    s = _check_s(s)
    return tau(spec, s, p) / s


def tau_pairs(spec: GroupSpec, s, X, Y):
    """tau_s of the canonical covector from X[i] to Y[i] for matched arrays."""
    lb = relative_log(spec, X, Y)
    return tau(spec, s, lb.param), lb.cls


def tau_set_details(spec: GroupSpec, s, A, B, drop_frac=0.01, chunk=1 << 20):
    """(value, n_infinite, n_pairs) for the set coefficient over all pairs of A x B."""
    if not 0.0 <= drop_frac <= 0.05:
        raise ValueError("drop_frac must lie in [0, 0.05]")
    A = np.atleast_2d(spec.check(A))
    B = np.atleast_2d(spec.check(B))
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("tau_set needs nonempty sample sets")
    best = math.inf
    n_inf = 0
    rows = max(1, chunk // B.shape[0])
    for start in range(0, A.shape[0], rows):
        a = A[start : start + rows]
        xs = np.broadcast_to(a[:, None, :], (len(a), B.shape[0], spec.dim)).reshape(-1, spec.dim)
        ys = np.broadcast_to(B[None, :, :], (len(a), B.shape[0], spec.dim)).reshape(-1, spec.dim)
        vals, cls = tau_pairs(spec, s, xs, ys)
        inf = ~np.isfinite(vals) | (cls == int(CutClass.VERTICAL_BOUNDARY))
        n_inf += int(inf.sum())
        if np.any(~inf):
            best = min(best, float(vals[~inf].min()))
    total = A.shape[0] * B.shape[0]
    if n_inf > drop_frac * total:
        return math.inf, n_inf, total
    return best, n_inf, total


def tau_set(spec: GroupSpec, s, A, B, drop_frac=0.01):
    """Set distortion coefficient: minimum over sampled pairs after dropping rare cut pairs."""
    return tau_set_details(spec, s, A, B, drop_frac)[0]


def pmean(s, p, a, b):
    """Weighted p-mean M_s^p(a, b) with the zero-annihilation convention (elementwise)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("p-mean arguments must be nonnegative")
    s = float(s)
    p = float(p)
    zero = (a == 0) | (b == 0)
    if p == -math.inf:
        out = np.minimum(a, b)
    elif p == math.inf:
        out = np.where(zero, 0.0, np.maximum(a, b))
    elif p == 0.0:
        with np.errstate(divide="ignore"):
            out = np.where(zero, 0.0, a ** (1.0 - s) * b**s)
    else:
        sa = np.where(zero, 1.0, a)
        sb = np.where(zero, 1.0, b)
        with np.errstate(over="ignore", divide="ignore"):
            if abs(p) >= 1e-2:
                out = ((1.0 - s) * sa**p + s * sb**p) ** (1.0 / p)
            else:
                # expm1/log1p keep the inner mean accurate as p -> 0
                inner = np.log1p((1.0 - s) * np.expm1(p * np.log(sa)) + s * np.expm1(p * np.log(sb)))
                out = np.exp(inner / p)
        out = np.where(zero, 0.0, out)
    return float(out) if out.ndim == 0 else out


def gardner_exponent(p, q):
    """Exponent pq/(p+q) paired with p and q in the p-mean product inequality."""
    if p + q < 0:
        raise ValueError("requires p + q >= 0")
    if p == 0 and q == 0:
        return 0.0
    if p + q == 0:
        return -math.inf
    if math.isinf(p):
        return float(q)
    if math.isinf(q):
        return float(p)
    return p * q / (p + q)


def bbl_exponent(p, n):
    """p / (1 + n p), extended to p = +inf as 1/n."""
    if math.isinf(p):
        return 1.0 / n
    if 1.0 + n * p == 0:
        return -math.inf
    return p / (1.0 + n * p)
