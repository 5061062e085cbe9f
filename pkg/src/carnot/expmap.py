"""Exponential map with its Jacobian determinant, plus reversed covectors.

All trigonometric quotients go through :mod:`carnot._special`, so p_z = 0 and
tiny ``alpha_i * p_z`` are handled by the same code path as the generic case.
"""

from dataclasses import dataclass

import numpy as np

from . import _special as sp
from .group import GroupSpec, group_op


def _rot_j(b):
    """Apply J = [[0, 1], [-1, 0]] to the trailing 2-vector axis."""
    return np.stack([b[..., 1], -b[..., 0]], axis=-1)


def exp_from_identity(spec: GroupSpec, p, s=1.0):
    """Point reached at time ``s`` by the geodesic from e with initial covector ``p``.

    ``p`` may carry leading batch axes and ``s`` broadcasts against them.
    ``s`` is clamped to [0, 1].
    """
    p = spec.check(p)
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    batch = np.broadcast_shapes(p.shape[:-1], s.shape)
    p = np.broadcast_to(p, batch + (spec.dim,))
    s = np.broadcast_to(s, batch)

    alpha = spec.alpha_array
    pz = spec.vertical(p)
    b = spec.blocks(p)
    t = alpha * (pz * s)[..., None]
    sv = s[..., None, None]
    gb = sv * (sp.sinc(t)[..., None] * b + sp.cosm1_over(t)[..., None] * _rot_j(b))
    nrm2 = np.sum(b * b, axis=-1)
    gz = s * s * 0.5 * np.sum(nrm2 * alpha * sp.tsin_over_sq(t), axis=-1)

    out = np.empty(batch + (spec.dim,))
    out[..., : spec.m] = spec.kernel(p) * s[..., None]
    out[..., spec.m : spec.k] = gb.reshape(batch + (2 * spec.d,))
    out[..., spec.k] = gz
    return out


def exp_from(spec: GroupSpec, x, p, s=1.0):
    """Left-translated geodesic: ``x * exp_e(s p)``."""
    return group_op(spec, x, exp_from_identity(spec, p, s))


def jac_exp(spec: GroupSpec, p):
    """Jacobian determinant of ``p -> exp_e(p)`` (total on R^(k+1))."""
    p = spec.check(p)
    alpha = spec.alpha_array
    u = 0.5 * alpha * spec.vertical(p)[..., None]
    S = sp.sinc(u)
    W = sp.sinmc_over_cube(u)
    nrm2 = np.sum(spec.blocks(p) ** 2, axis=-1)
    s2 = S * S
    out = np.zeros(p.shape[:-1])
    for i in range(spec.d):
        others = np.prod(np.delete(s2, i, axis=-1), axis=-1)
        out = out + nrm2[..., i] * 0.25 * alpha[i] ** 2 * S[..., i] * W[..., i] * others
    return out


def reverse_param(spec: GroupSpec, p):
    """Covector of the reversed geodesic: exp_y(p_bar) returns to the start."""
    p = spec.check(p)
    out = -p.copy()
    theta = spec.alpha_array * spec.vertical(p)[..., None]
    b = spec.blocks(p)
    rb = -np.cos(theta)[..., None] * b + np.sin(theta)[..., None] * _rot_j(b)
    out[..., spec.m : spec.k] = rb.reshape(p.shape[:-1] + (2 * spec.d,))
    return out


@dataclass(frozen=True)
class GeodesicPath:
    spec: GroupSpec
    base: np.ndarray
    direction: np.ndarray

    def __call__(self, s):
        return exp_from(self.spec, self.base, self.direction, s)

    def sample(self, n):
        """Points at ``n`` equally spaced times in [0, 1], shape ``(n, k+1)``."""
        s = np.linspace(0.0, 1.0, n)
        return exp_from(self.spec, self.base, np.broadcast_to(self.direction, (n, self.spec.dim)), s)
