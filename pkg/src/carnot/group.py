"""Corank-1 Carnot groups in exponential coordinates.

A group is fixed by the dimension ``m`` of the kernel of the structure matrix
and the block frequencies ``alpha_1 <= ... <= alpha_d``.  Points and covectors
are dense float arrays with trailing axis of length ``k + 1`` laid out as

    (kernel block (m entries), block 1 (2 entries), ..., block d, z)

Leading axes are treated as batch axes by every function in this package.
"""

from dataclasses import dataclass
import math

import numpy as np


class LayoutError(ValueError):
    """Array does not match the coordinate layout of a group."""


@dataclass(frozen=True)
class GroupSpec:
    kernel_dim: int
    alphas: tuple

    def __post_init__(self):
        if int(self.kernel_dim) != self.kernel_dim or self.kernel_dim < 0:
            raise ValueError(f"kernel_dim must be a nonnegative integer, got {self.kernel_dim!r}")
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise ValueError("at least one block frequency is required")
        for a in alphas:
            if not math.isfinite(a) or a <= 0:
                raise ValueError(f"block frequencies must be finite and positive, got {a!r}")
        object.__setattr__(self, "kernel_dim", int(self.kernel_dim))
        object.__setattr__(self, "alphas", tuple(sorted(alphas)))

    @property
    def m(self):
        return self.kernel_dim

    @property
    def d(self):
        return len(self.alphas)

    @property
    def k(self):
        return self.kernel_dim + 2 * self.d

    @property
    def dim(self):
        """Topological dimension N = k + 1."""
        return self.k + 1

    @property
    def alpha_top(self):
        return self.alphas[-1]

    @property
    def q(self):
        """Multiplicity of the largest frequency."""
        return int(np.sum(self.top_mask))

    @property
    def top_mask(self):
        a = np.asarray(self.alphas)
        return np.isclose(a, self.alpha_top, rtol=1e-12, atol=0.0)

    @property
    def pz_max(self):
        """Half-width 2*pi/alpha_d of the injectivity strip in p_z."""
        return 2.0 * math.pi / self.alpha_top

    @property
    def alpha_array(self):
        return np.asarray(self.alphas, dtype=float)

    def check(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise LayoutError(f"expected trailing axis of length {self.dim}, got shape {x.shape}")
        return x

    def kernel(self, x):
        return x[..., : self.m]

    def blocks(self, x):
        """View of the 2-blocks with shape ``(..., d, 2)``."""
        return x[..., self.m : self.k].reshape(x.shape[:-1] + (self.d, 2))

    def vertical(self, x):
        return x[..., self.k]

    def pack(self, x0, blocks, z):
        """Assemble a point/covector from its kernel block, 2-blocks and z."""
        x0 = np.asarray(x0, dtype=float).reshape(-1) if self.m else np.zeros(0)
        blocks = np.asarray(blocks, dtype=float).reshape(-1)
        if x0.size != self.m or blocks.size != 2 * self.d:
            raise LayoutError(
                f"expected {self.m} kernel entries and {2 * self.d} block entries, "
                f"got {x0.size} and {blocks.size}"
            )
        return np.concatenate([x0, blocks, [float(z)]])

    def unpack(self, x):
        x = self.check(x)
        return self.kernel(x).copy(), self.blocks(x).copy(), self.vertical(x).copy()

    def structure_matrix(self):
        """The skew matrix with a zero kernel block and blocks alpha_i J."""
        a = np.zeros((self.k, self.k))
        for i, alpha in enumerate(self.alphas):
            r = self.m + 2 * i
            a[r, r + 1] = alpha
            a[r + 1, r] = -alpha
        return a

    def reduced(self):
        """The same group with the kernel block removed."""
        return GroupSpec(0, self.alphas)

    def to_dict(self):
        return {"kernel_dim": self.kernel_dim, "alphas": list(self.alphas)}

    def identity(self):
        return np.zeros(self.dim)


def make_spec(kernel_dim, alphas):
    """Validate and build a :class:`GroupSpec`; frequencies are sorted ascending."""
    return GroupSpec(kernel_dim, tuple(alphas))


def is_abnormal_dir(spec, p, tol=1e-14):
    """True where every 2-block of ``p`` vanishes, i.e. the structure matrix kills p_x."""
    p = spec.check(p)
    return np.all(np.linalg.norm(spec.blocks(p), axis=-1) < tol, axis=-1)


def is_in_D(spec, p):
    """Membership in the injectivity domain |p_z| < 2 pi / alpha_d with a nonzero 2-block."""
    p = spec.check(p)
    return (np.abs(spec.vertical(p)) < spec.pz_max) & ~is_abnormal_dir(spec, p)


def group_op(spec, x, y):
    x = spec.check(x)
    y = spec.check(y)
    out = x + y
    bx = spec.blocks(x)
    by = spec.blocks(y)
    cross = bx[..., 0] * by[..., 1] - bx[..., 1] * by[..., 0]
    out[..., spec.k] += 0.5 * np.sum(spec.alpha_array * cross, axis=-1)
    return out


def inverse(spec, x):
    return -spec.check(x)


def frame_at(spec, x):
    """Left-invariant frame at ``x``: rows are X_1, ..., X_k and Z as coordinate vectors."""
    x = spec.check(x)
    if x.ndim != 1:
        raise LayoutError("frame_at expects a single point")
    frame = np.eye(spec.dim)
    frame[: spec.k, spec.k] = -0.5 * (spec.structure_matrix() @ x[: spec.k])
    return frame
