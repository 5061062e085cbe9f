"""Inverse exponential map with cut-locus classification, and the CC distance.

The log map inverts the closed-form geodesic endpoint equations

    |x^i|^2 = |p^i|^2 f(alpha_i p_z),    z = 1/8 sum_i alpha_i |x^i|^2 g(alpha_i p_z)

by solving the scalar monotone equation in p_z, then undoing the block
rotations.  Everything is vectorized over a leading batch axis.
"""

from dataclasses import dataclass
import enum
import math

import numpy as np

from . import _special as sp
from ._parallel import chunked_map
from .expmap import _rot_j, exp_from, reverse_param
from .group import GroupSpec, group_op, inverse

BLOCK_ZERO_TOL = 1e-14
BOUNDARY_TOL = 1e-9
IDENTITY_TOL = 1e-12
GUARD = 1e-12
ROOT_TOL = 1e-13


class CutClass(enum.IntEnum):
    INTERIOR = 0
    ABNORMAL_AXIS = 1
    VERTICAL_BOUNDARY = 2
    IDENTITY = 3

    @property
    def label(self):
        return {0: "Interior", 1: "AbnormalAxis", 2: "VerticalBoundary", 3: "Identity"}[int(self)]


class CutLocusError(ValueError):
    """Raised when a smooth quantity is requested at a cut-locus pair."""


@dataclass(frozen=True)
class LogResult:
    param: np.ndarray
    cls: CutClass
    dist: float


@dataclass(frozen=True)
class LogBatch:
    """Vectorized log-map output; ``cls`` holds :class:`CutClass` codes."""

    param: np.ndarray
    cls: np.ndarray
    dist: np.ndarray

    def __len__(self):
        return len(self.dist)

    def __getitem__(self, i):
        return LogResult(self.param[i].copy(), CutClass(int(self.cls[i])), float(self.dist[i]))


def _check_open_interval(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) >= 2 * math.pi) or not np.all(np.isfinite(t)):
        raise ValueError("argument must lie in the open interval (-2 pi, 2 pi)")
    return t


def f_aux(t):
    """sin^2(t/2) / (t/2)^2."""
    t = _check_open_interval(t)
    return sp.sinc(0.5 * t) ** 2


def g_aux(t):
    """(t - sin t) / sin^2(t/2); odd and strictly increasing on (-2 pi, 2 pi)."""
    t = _check_open_interval(t)
    return _g(t)


def _g(t):
    return 4.0 * sp.tsin_over_sq(t) / sp.sinc(0.5 * t) ** 2


def _dg(t):
    half = sp.sinc(0.5 * t)
    return 2.0 - 8.0 * sp.tsin_over_cube(t) * np.cos(0.5 * t) / half**3


def _h(alpha, r, t):
    """1/8 sum alpha_i r_i g(alpha_i t) for t of shape (n,) and r of shape (n, d)."""
    return 0.125 * np.sum(alpha * r * _g(alpha * t[:, None]), axis=-1)


def _dh(alpha, r, t):
    return 0.125 * np.sum(alpha**2 * r * _dg(alpha * t[:, None]), axis=-1)


def _solve_h(alpha, r, target, hi, max_iter=200):
    """Root of h(t) = target on [0, hi] by safeguarded Newton with bisection fallback.

    Newton runs on log h, which tames the double pole of h at the end of the
    interval.  ``target`` is nonnegative; lanes with h(hi) < target end at hi.
    Each lane stops once the residual, the step or the bracket is small.
    """
    n = target.shape[0]
    lo = np.zeros(n)
    up = np.full(n, hi)
    slope0 = _dh(alpha, r, np.zeros(n))
    top = alpha == alpha[-1]
    r_top = np.sum(r[:, top], axis=-1)
    T = 2.0 * math.pi / alpha[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(slope0 > 0, target / slope0, 0.5 * hi)
        # h ~ pi r_top / (alpha_d eps^2) near t = T - eps
        pole = T - np.sqrt(math.pi * r_top / (alpha[-1] * target))
    t = np.where((t > 0.5 * T) & (r_top > 0), np.maximum(pole, 0.5 * T), t)
    t = np.clip(t, 0.0, hi)
    active = target > 0
    t[~active] = 0.0
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        ti, ri, zi = t[idx], r[idx], target[idx]
        hv = _h(alpha, ri, ti)
        res = hv - zi
        below = res < 0
        lo[idx] = np.where(below, ti, lo[idx])
        up[idx] = np.where(below, up[idx], ti)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = ti - np.log(hv / zi) * hv / _dh(alpha, ri, ti)
        lo_i, up_i = lo[idx], up[idx]
        bad = ~np.isfinite(step) | (step <= lo_i) | (step >= up_i)
        t[idx] = np.where(bad, 0.5 * (lo_i + up_i), step)
        done = (
            (np.abs(res) <= ROOT_TOL * np.maximum(1.0, zi))
            | (up_i - lo_i <= 4e-16 * np.maximum(up_i, 1e-300))
            | (np.isfinite(step) & (np.abs(step - ti) <= 1e-15 * np.abs(ti)))
        )
        t[idx[done]] = ti[done]
        active[idx[done]] = False
    return t


def _inv_block(b, theta):
    """Inverse of M(theta) = S(theta) I + C(theta) J applied to blocks b."""
    S = sp.sinc(theta)[..., None]
    C = sp.cosm1_over(theta)[..., None]
    f = sp.sinc(0.5 * theta)[..., None] ** 2
    return (S * b - C * _rot_j(b)) / f


def log_batch(spec: GroupSpec, x) -> LogBatch:
    """Inverse exponential map for a batch of points of shape ``(n, k+1)``."""
    x = spec.check(x)
    x = np.atleast_2d(x).reshape(-1, spec.dim)
    if not np.all(np.isfinite(x)):
        raise ValueError("log map input contains non-finite entries")
    param, cls, dist = chunked_map(lambda xs: _log_core(spec, xs), (x,))
    return LogBatch(param, cls, dist)


def _log_core(spec, x):
    n = x.shape[0]
    alpha = spec.alpha_array
    T = spec.pz_max
    top = spec.top_mask
    top_idx = spec.d - spec.q

    blocks = spec.blocks(x)
    r = np.sum(blocks * blocks, axis=-1)
    r = np.where(np.sqrt(r) < BLOCK_ZERO_TOL, 0.0, r)
    z = spec.vertical(x)
    az = np.abs(z)
    sgn = np.where(z < 0, -1.0, 1.0)

    has_top = np.any(r[:, top] > 0, axis=-1)
    r_low = np.where(top, 0.0, r)
    h_cap = _h(alpha, r_low, np.full(n, T))
    interior = has_top | (az < h_cap)

    hi = T * (1.0 - GUARD)
    pz = np.zeros(n)
    if np.any(interior):
        ii = np.nonzero(interior)[0]
        pz[ii] = sgn[ii] * _solve_h(alpha, r[ii], az[ii], hi)
    bnd = ~interior
    pz[bnd] = sgn[bnd] * T

    theta = alpha * pz[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        pb = _inv_block(blocks, theta)
    pb = np.where((r > 0)[..., None], pb, 0.0)

    if np.any(bnd):
        bi = np.nonzero(bnd)[0]
        pb_b = pb[bi]
        pb_b[:, top, :] = 0.0
        z_res = az[bi] - _h(alpha, r_low[bi], np.full(bi.size, T))
        pb_b[:, top_idx, 0] = np.sqrt(np.maximum(4.0 * math.pi * z_res / alpha[-1], 0.0))
        pb[bi] = pb_b

    param = np.empty_like(x)
    param[:, : spec.m] = spec.kernel(x)
    param[:, spec.m : spec.k] = pb.reshape(n, 2 * spec.d)
    param[:, spec.k] = pz

    bnorm2 = np.sum(pb * pb, axis=(-1, -2))
    flat = ~np.any(r > 0, axis=-1) & (az < IDENTITY_TOL)
    param[flat, spec.k] = 0.0
    param[flat, spec.m : spec.k] = 0.0
    bnorm2[flat] = 0.0
    dist = np.sqrt(np.sum(spec.kernel(x) ** 2, axis=-1) + bnorm2)

    cls = np.full(n, int(CutClass.INTERIOR))
    cls[np.abs(np.abs(param[:, spec.k]) - T) <= BOUNDARY_TOL] = int(CutClass.VERTICAL_BOUNDARY)
    cls[flat] = int(CutClass.ABNORMAL_AXIS)
    cls[dist < IDENTITY_TOL] = int(CutClass.IDENTITY)

    return param, cls, dist


def log_from_identity(spec: GroupSpec, x) -> LogResult:
    """Minimizing covector of the geodesic from e to ``x``, with its cut class and length."""
    x = spec.check(x)
    if x.ndim != 1:
        raise ValueError("log_from_identity expects a single point; use log_batch")
    b = log_batch(spec, x[None, :])
    return b[0]


def relative_log(spec: GroupSpec, x, y) -> LogBatch:
    """Log map of ``x^-1 * y`` (broadcast over leading axes, flattened)."""
    x = spec.check(x)
    y = spec.check(y)
    rel = group_op(spec, inverse(spec, x), y)
    return log_batch(spec, rel.reshape(-1, spec.dim))


def d_cc(spec: GroupSpec, x, y):
    """Carnot-Caratheodory distance; broadcasts over leading axes."""
    x = spec.check(x)
    y = spec.check(y)
    shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
    dist = relative_log(spec, x, y).dist.reshape(shape)
    return float(dist) if dist.ndim == 0 else dist


def pairwise_sq_dist(spec: GroupSpec, X, Y, chunk=1 << 20):
    """Matrix of squared distances d(X_i, Y_j)^2, assembled in row chunks."""
    X = np.atleast_2d(spec.check(X))
    Y = np.atleast_2d(spec.check(Y))
    out = np.empty((X.shape[0], Y.shape[0]))
    rows = max(1, chunk // max(1, Y.shape[0]))
    for start in range(0, X.shape[0], rows):
        xs = X[start : start + rows]
        rel = group_op(spec, -xs[:, None, :], Y[None, :, :])
        out[start : start + rows] = log_batch(spec, rel.reshape(-1, spec.dim)).dist.reshape(len(xs), -1) ** 2
    return out


def grad_dsq_half(spec: GroupSpec, y, x):
    """Carnot gradient of d(y, .)^2 / 2 at ``x`` in the frame (X^0, X^1..X^d, Z)."""
    res = log_from_identity(spec, group_op(spec, inverse(spec, y), x))
    if res.cls not in (CutClass.INTERIOR, CutClass.IDENTITY):
        raise CutLocusError(f"x lies in the cut locus of y ({res.cls.label})")
    if res.cls is CutClass.IDENTITY:
        return np.zeros(spec.dim)
    return -reverse_param(spec, res.param)


def intermediate_point(spec: GroupSpec, x, y, s):
    """Point at fraction ``s`` along the canonical minimizer from x to y (batched)."""
    x = spec.check(x)
    y = spec.check(y)
    shape = np.broadcast_shapes(x.shape, y.shape)
    xb = np.broadcast_to(x, shape).reshape(-1, spec.dim)
    yb = np.broadcast_to(y, shape).reshape(-1, spec.dim)
    p = relative_log(spec, xb, yb).param
    s = np.asarray(s, dtype=float)
    if s.ndim:
        s = np.broadcast_to(s, shape[:-1]).reshape(-1)
    return exp_from(spec, xb, p, s).reshape(shape)


def probe_cut_nonsemiconvexity(spec: GroupSpec, y, p_x, vs=(1e-1, 1e-2, 1e-3, 1e-4)):
    """Second differences Q(v) of d(y, .)^2 at a boundary cut point along the last block.

    ``p_x`` holds the k horizontal entries; its top-frequency blocks must
    vanish while some lower block does not.  The probed point is
    x = exp_y(p_x, 2 pi / alpha_d).
    """
    if spec.d == spec.q:
        raise ValueError("probe needs a block frequency strictly below the top one")
    p_x = np.asarray(p_x, dtype=float).reshape(-1)
    if p_x.size != spec.k:
        raise ValueError(f"p_x must have {spec.k} entries")
    p = np.concatenate([p_x, [spec.pz_max]])
    b = spec.blocks(p)
    if np.any(np.linalg.norm(b[spec.top_mask], axis=-1) > 0):
        raise ValueError("top-frequency blocks of p_x must vanish")
    if not np.any(np.linalg.norm(b, axis=-1) > 0):
        raise ValueError("p_x must have a nonzero 2-block")
    y = spec.check(y)
    x = exp_from(spec, y, p, 1.0)
    d0 = d_cc(spec, y, x) ** 2
    out = []
    for v in vs:
        nu = np.zeros(spec.dim)
        nu[spec.k - 2] = v
        plus = d_cc(spec, y, exp_from(spec, x, nu, 1.0)) ** 2
        minus = d_cc(spec, y, exp_from(spec, x, -nu, 1.0)) ** 2
        out.append((float(v), float((plus + minus - 2.0 * d0) / v**2)))
    return out
