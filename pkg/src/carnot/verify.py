"""Numerical checks of the calculus identities and the transport inequalities.

Every check returns a :class:`VerifyReport`.  A report is made of one or more
:class:`Part` records, each an inequality ``lhs <= rhs + tol`` or
``lhs >= rhs - tol``; the report passes when all of its parts pass.  Monte
Carlo estimates use boxes of known volume and voxel counts.
"""

from dataclasses import asdict, dataclass, field
import json
import math
import time

import numpy as np

from .distance import (
    CutClass,
    CutLocusError,
    d_cc,
    grad_dsq_half,
    intermediate_point,
    log_batch,
    probe_cut_nonsemiconvexity,
    relative_log,
)
from .distortion import bbl_exponent, pmean, tau, tau_pairs, tau_set_details
from .expmap import exp_from, exp_from_identity, jac_exp, reverse_param
from .group import GroupSpec, group_op, make_spec
from .transport import (
    DiscreteMeasure,
    example36_instance,
    interpolate,
    solve_ot,
)

# lattice cells spanned by a point cloud's bounding box; guards the int64 cell indices
MAX_GRID_CELLS = 10**12


def substream(seed, stream):
    """Independent generator for the sub-stream ``stream`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


# ---------------------------------------------------------------- reports


@dataclass
class Part:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    relation: str = "<="
    passed: bool = False
    note: str = ""

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        if self.relation == "<=":
            self.passed = bool(self.lhs <= self.rhs + self.tolerance)
        elif self.relation == ">=":
            self.passed = bool(self.lhs >= self.rhs - self.tolerance)
        else:
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass
class VerifyReport:
    check: str
    spec: dict
    params: dict
    parts: list
    seed: int = 42
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(p.passed for p in self.parts)

    @property
    def lhs(self):
        return self.parts[0].lhs

    @property
    def rhs(self):
        return self.parts[0].rhs

    @property
    def tolerance(self):
        return self.parts[0].tolerance

    def part(self, name):
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self, include_runtime=True):
        out = {
            "check": self.check,
            "spec": self.spec,
            "params": self.params,
            "seed": self.seed,
            "pass": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "tolerance": self.tolerance,
            "parts": [asdict(p) for p in self.parts],
            "details": self.details,
        }
        if include_runtime:
            out["runtime"] = self.runtime
        return out

    def to_json(self, include_runtime=True):
        return json.dumps(_plain(self.to_dict(include_runtime)), indent=2, sort_keys=True)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        worst = [p.name for p in self.parts if not p.passed]
        tail = f" failing: {', '.join(worst)}" if worst else ""
        return f"[{status}] {self.check} ({len(self.parts)} parts, {self.runtime:.1f}s){tail}"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        report = fn(*args, **kwargs)
        report.runtime = time.perf_counter() - start
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------- boxes and voxels


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box needs matching bounds with hi > lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, dim, center=None, edge=1.0):
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(c - edge / 2), tuple(c + edge / 2))

    @property
    def dim(self):
        return len(self.lo)

    @property
    def volume(self):
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def shifted(self, offset):
        off = np.asarray(offset, dtype=float)
        return Box(tuple(np.add(self.lo, off)), tuple(np.add(self.hi, off)))

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class VoxelGrid:
    """Cubic cells of edge ``h`` anchored at ``origin``; ``cells`` are the occupied indices."""

    origin: np.ndarray
    h: float
    cells: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_points(cls, points, h, box=None, weights=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if h <= 0:
            raise ValueError("voxel edge must be positive")
        if pts.shape[0] == 0:
            dim = pts.shape[1] if pts.ndim == 2 else 0
            return cls(np.zeros(dim), float(h), np.zeros((0, dim), dtype=np.int64), np.zeros(0))
        if box is not None:
            lo_b, hi_b = np.asarray(box.lo), np.asarray(box.hi)
            if np.any(pts < lo_b) or np.any(pts > hi_b):
                raise ValueError("point outside the voxel box")
        # cells live on the global lattice h Z^N so estimates do not depend on the cloud
        lo = np.floor(pts.min(axis=0) / h) * h
        span = np.floor((pts.max(axis=0) - lo) / h) + 1
        if np.prod(span) > MAX_GRID_CELLS:
            raise ValueError(f"voxel grid of edge {h} exceeds the {MAX_GRID_CELLS:.0e} cell budget")
        idx = np.floor((pts - lo) / h).astype(np.int64)
        w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
        cells, inv = np.unique(idx, axis=0, return_inverse=True)
        counts = np.bincount(inv.reshape(-1), weights=w, minlength=len(cells))
        return cls(np.asarray(lo, dtype=float), float(h), cells, counts)

    @property
    def cell_volume(self):
        return self.h ** self.cells.shape[1]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    def measure(self):
        return self.n_cells * self.cell_volume


def voxel_measure(points, h, box=None):
    """Outer-measure estimate: number of occupied cells times the cell volume."""
    return VoxelGrid.from_points(points, h, box).measure()


@dataclass(frozen=True)
class DensityEstimate:
    grid: VoxelGrid

    @classmethod
    def from_measure(cls, mu: DiscreteMeasure, h, box=None):
        grid = VoxelGrid.from_points(mu.points, h, box, weights=mu.weights)
        if abs(grid.counts.sum() - 1.0) > 1e-6:
            raise ValueError("histogram mass defect exceeds 1e-6")
        return cls(grid)

    @property
    def density(self):
        return self.grid.counts / self.grid.cell_volume

    def entropy(self, U):
        return float(np.sum(U(self.density)) * self.grid.cell_volume)


@dataclass(frozen=True)
class EntropyFunctional:
    name: str
    U: object
    k: int

    def __call__(self, r):
        return self.U(np.asarray(r, dtype=float))

    def admissibility(self, grid=None):
        """(monotone, convex) flags for t -> t^(k+1) U(t^-(k+1)) on a sample grid."""
        t = np.linspace(0.05, 5.0, 2000) if grid is None else np.asarray(grid, dtype=float)
        n = self.k + 1
        phi = t**n * self(t ** (-n))
        d1 = np.diff(phi)
        d2 = np.diff(phi, 2)
        scale = max(1.0, float(np.max(np.abs(phi))))
        return bool(np.all(d1 <= 1e-9 * scale)), bool(np.all(d2 >= -1e-9 * scale))

    def is_admissible(self):
        if abs(float(self(np.array([0.0]))[0])) > 0:
            return False
        mono, conv = self.admissibility()
        return mono and conv


def renyi(k):
    """U(r) = -r^(1 - 1/(k+1))."""
    e = 1.0 - 1.0 / (k + 1)
    return EntropyFunctional("renyi", lambda r: -np.power(np.maximum(r, 0.0), e), k)


def shannon(k):
    """U(r) = r log r with U(0) = 0."""

    def U(r):
        r = np.maximum(r, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)

    return EntropyFunctional("shannon", U, k)


# ---------------------------------------------------------------- sampling helpers


def _random_interior_covectors(spec, rng, n, frac=0.9, scale=1.0):
    p = rng.normal(scale=scale, size=(n, spec.dim))
    p[:, -1] = rng.uniform(-frac, frac, size=n) * spec.pz_max
    return p


def _unit_scale_covectors(spec, rng, n, frac=0.8, lo=0.5, hi=1.5):
    """Interior covectors with 2-block length in [lo, hi].

    Dilations act on pairs without changing the sign of any Hessian, so the
    pair length can be fixed near 1 where finite differences are reliable.
    """
    p = _random_interior_covectors(spec, rng, n, frac=frac)
    b = p[:, spec.m : spec.k]
    b *= rng.uniform(lo, hi, size=(n, 1)) / np.linalg.norm(b, axis=-1, keepdims=True)
    return p


def _frame_gradient(spec, fn, x, h=1e-5):
    """Central differences of ``fn`` along the frame at x, Richardson-extrapolated from h and h/2."""
    eye = np.eye(spec.dim)

    def central(step):
        plus = group_op(spec, x[None, :], step * eye)
        minus = group_op(spec, x[None, :], -step * eye)
        return (fn(plus) - fn(minus)) / (2 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def _fd_jacobian(fn, p, h):
    n = p.size
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((fn(p + e) - fn(p - e)) / (2 * h))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------- calculus


@_timed
def verify_calculus(spec: GroupSpec, n_samples=10_000, seed=42):
    """Round trips, FD gradients, FD Jacobians, reversal and the Pythagorean split."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    parts = []
    details = {}

    # exp/log round trip
    rng = substream(seed, 0)
    p = _random_interior_covectors(spec, rng, n_samples, frac=0.95)
    lb = log_batch(spec, exp_from_identity(spec, p))
    rt_err = float(np.max(np.abs(lb.param - p)))
    n_bad = int(np.sum(lb.cls != int(CutClass.INTERIOR)))
    parts.append(Part("exp_log_round_trip", rt_err, 1e-8, 0.0))
    parts.append(Part("round_trip_interior_class", n_bad, 0, 0.0))

    # gradient of d^2/2 against central differences along the frame, and exp_x(-grad) = y
    rng = substream(seed, 1)
    n_grad = min(n_samples, 200)
    ys = rng.normal(size=(n_grad, spec.dim))
    ps = _random_interior_covectors(spec, rng, n_grad, frac=0.9)
    xs = exp_from(spec, ys, ps, 1.0)
    grad_err = 0.0
    prop24_err = 0.0
    for y, x in zip(ys, xs):
        g = grad_dsq_half(spec, y, x)
        fd = _frame_gradient(spec, lambda z: 0.5 * d_cc(spec, y, z) ** 2, x)
        grad_err = max(grad_err, float(np.max(np.abs(fd - g))))
        back = exp_from(spec, x, -g, 1.0)
        prop24_err = max(prop24_err, float(np.max(np.abs(back - y))))
    parts.append(Part("gradient_vs_fd", grad_err, 1e-5, 0.0))
    parts.append(Part("exp_minus_gradient_returns", prop24_err, 1e-9, 0.0))

    # Jacobian determinant against a finite-difference determinant
    rng = substream(seed, 2)
    n_jac = min(n_samples, 100)
    pj = _random_interior_covectors(spec, rng, n_jac, frac=0.9)
    jac_err = 0.0
    left_err = 0.0
    base = rng.normal(size=(n_jac, spec.dim))
    for q, x in zip(pj, base):
        fd = np.linalg.det(_fd_jacobian(lambda v: exp_from_identity(spec, v, 1.0), q, 1e-6))
        exact = jac_exp(spec, q)
        jac_err = max(jac_err, abs(fd - exact) / abs(exact))
        fd_x = np.linalg.det(_fd_jacobian(lambda v: exp_from(spec, x, v, 1.0), q, 1e-6))
        left_err = max(left_err, abs(fd_x - fd))
    parts.append(Part("jacobian_vs_fd_relative", jac_err, 1e-5, 0.0))
    parts.append(Part("jacobian_left_invariance", left_err, 1e-6, 0.0))
    p0 = rng.normal(size=(n_jac, spec.dim))
    p0[:, -1] = 0.0
    r = np.sum(spec.blocks(p0) ** 2, axis=-1)
    closed = np.sum(r * spec.alpha_array**2, axis=-1) / 12.0
    parts.append(Part("jacobian_flat_value", float(np.max(np.abs(jac_exp(spec, p0) - closed))), 1e-10, 0.0))

    # reversal
    rng = substream(seed, 3)
    pr = _random_interior_covectors(spec, rng, n_samples, frac=0.95)
    ends = exp_from_identity(spec, pr)
    pbar = reverse_param(spec, pr)
    parts.append(Part("reverse_returns_to_identity", float(np.max(np.abs(exp_from(spec, ends, pbar, 1.0)))), 1e-10, 0.0))
    parts.append(Part("reverse_involution", float(np.max(np.abs(reverse_param(spec, pbar) - pr))), 1e-12, 0.0))
    parts.append(Part("jacobian_reverse_even", float(np.max(np.abs(jac_exp(spec, pbar) / jac_exp(spec, pr) - 1.0))), 1e-12, 0.0))

    # symmetry and triangle inequality of the distance
    rng = substream(seed, 4)
    a, b, c = (rng.normal(size=(n_samples, spec.dim)) for _ in range(3))
    dab, dba = d_cc(spec, a, b), d_cc(spec, b, a)
    dbc, dac = d_cc(spec, b, c), d_cc(spec, a, c)
    parts.append(Part("distance_symmetry", float(np.max(np.abs(dab - dba))), 1e-10, 0.0))
    parts.append(Part("triangle_excess", float(np.max(dac - dab - dbc)), 1e-8, 0.0))

    if spec.m > 0:
        red = spec.reduced()
        full = d_cc(spec, a, b) ** 2
        split = np.sum((a[:, : spec.m] - b[:, : spec.m]) ** 2, axis=-1) + d_cc(red, a[:, spec.m :], b[:, spec.m :]) ** 2
        parts.append(Part("pythagorean_residual", float(np.max(np.abs(full - split))), 1e-9, 0.0))

    return VerifyReport("calculus", spec.to_dict(), {"n_samples": n_samples}, parts, seed, details=details)


# ---------------------------------------------------------------- distortion coefficients and p-means


def heisenberg_tau(n, s, theta, dps=40):
    """Closed-form Heisenberg coefficient tau_s^(2n+1)(theta), evaluated in extended precision."""
    import mpmath

    with mpmath.workdps(dps):
        s = mpmath.mpf(float(s))
        th = abs(mpmath.mpf(float(theta)))
        N = 2 * n + 1
        if th == 0:
            return float(s ** (mpmath.mpf(N + 2) / N))
        if th >= 2 * mpmath.pi:
            return math.inf
        a, b = th * s / 2, th / 2
        sin_ratio = mpmath.sin(a) / mpmath.sin(b)
        w_ratio = (mpmath.sin(a) - a * mpmath.cos(a)) / (mpmath.sin(b) - b * mpmath.cos(b))
        return float(s ** (mpmath.mpf(1) / N) * sin_ratio ** (mpmath.mpf(2 * n - 1) / N) * w_ratio ** (mpmath.mpf(1) / N))


@_timed
def verify_distortion(spec: GroupSpec, n_samples=1000, seed=42):
    """Lower bound and Jacobian-ratio identity; on Heisenberg groups also the closed form."""
    rng = substream(seed, 0)
    s = rng.uniform(0.02, 0.98, size=n_samples)
    p = _random_interior_covectors(spec, rng, n_samples, frac=0.95)
    vals = np.array([tau(spec, si, pi) for si, pi in zip(s, p)])
    floor = s ** ((spec.k + 3) / (spec.k + 1))
    jac_ratio = s * (jac_exp(spec, s[:, None] * p) / jac_exp(spec, p)) ** (1.0 / (spec.k + 1))
    parts = [
        Part("lower_bound_deficit", float(np.max(floor - vals)), 0.0, 1e-12),
        Part("jacobian_ratio_identity", float(np.max(np.abs(vals - jac_ratio))), 1e-10, 0.0),
    ]
    if spec.m == 0 and all(a == 4.0 for a in spec.alphas):
        n = spec.d
        exact = np.array([heisenberg_tau(n, si, 4.0 * pi[-1]) for si, pi in zip(s, p)])
        parts.append(Part("heisenberg_reduction", float(np.max(np.abs(vals - exact))), 1e-12, 0.0))
    return VerifyReport("distortion", spec.to_dict(), {"n_samples": n_samples}, parts, seed)


@_timed
def verify_gardner(n_samples=10_000, seed=42):
    """M_s^p(a, b) M_s^q(c, d) >= M_s^eta(ac, bd) with eta = pq / (p + q) on random tuples."""
    from .distortion import gardner_exponent

    rng = substream(seed, 0)
    worst = -math.inf
    for _ in range(n_samples):
        s = rng.uniform(0.01, 0.99)
        p = float(rng.choice([0.0, math.inf])) if rng.random() < 0.1 else rng.uniform(-3, 3)
        if rng.random() < 0.1:
            q = math.inf
        elif math.isinf(p):
            q = rng.uniform(-3, 3)
        else:
            q = rng.uniform(-p, -p + 6)
        a, b, c, d = rng.uniform(0.0, 5.0, size=4) * (rng.random(4) > 0.05)
        eta = gardner_exponent(p, q)
        lhs = pmean(s, p, a, b) * pmean(s, q, c, d)
        rhs = pmean(s, eta, a * c, b * d)
        worst = max(worst, (rhs - lhs) / max(1.0, abs(rhs)))
    parts = [Part("max_violation", worst, 0.0, 1e-12)]
    return VerifyReport("gardner", {}, {"n_samples": n_samples}, parts, seed)


# ---------------------------------------------------------------- Hessian of the metric function


def metric_function(spec, x, y, s, z):
    """m(z) = d(g_s, z)^2/2 - s d(y, z)^2/2 + s(1-s) d(x, y)^2/2 with g_s the s-point from x to y."""
    gs = intermediate_point(spec, x, y, s)
    dxy2 = d_cc(spec, x, y) ** 2
    return 0.5 * d_cc(spec, gs, z) ** 2 - 0.5 * s * d_cc(spec, y, z) ** 2 + 0.5 * s * (1 - s) * dxy2


def _nested_fd(spec, fn, x, h_outer, h_inner):
    n = spec.dim
    eye = np.eye(n)
    outer = np.stack([group_op(spec, x, sgn * h_outer * eye) for sgn in (1.0, -1.0)])  # (2, n, dim)
    steps = np.array([1.0, -1.0])[:, None, None] * h_inner * eye  # (2, n, dim)
    pts = group_op(spec, outer[:, :, None, None, :], steps[None, None])
    vals = fn(pts.reshape(-1, spec.dim)).reshape(2, n, 2, n)
    inner = (vals[:, :, 0, :] - vals[:, :, 1, :]) / (2 * h_inner)  # (2, i, j)
    return (inner[0] - inner[1]) / (2 * h_outer)


def carnot_hessian(spec, fn, x, h_outer=1e-4, h_inner=1e-5, richardson=True):
    """Nested central differences of ``fn`` along the left-invariant frame: H[i, j] = X_i X_j fn at x.

    ``fn`` maps a batch of points to values.  With ``richardson`` both
    differences are extrapolated from steps h and h/2, which removes the h^2
    terms that dominate on short geodesics where the vertical derivatives are
    large.  Returns the raw (unsymmetrized) matrix.
    """
    if not richardson:
        return _nested_fd(spec, fn, x, h_outer, h_inner)

    def inner_extrapolated(ho):
        return (4.0 * _nested_fd(spec, fn, x, ho, 0.5 * h_inner) - _nested_fd(spec, fn, x, ho, h_inner)) / 3.0

    return (4.0 * inner_extrapolated(0.5 * h_outer) - inner_extrapolated(h_outer)) / 3.0


@_timed
def verify_hessian_psd(spec: GroupSpec, n_triples=50, seed=42, s_values=(0.25, 0.5, 0.75), n_near=20):
    """Positive semidefiniteness and symmetry of the Hessian of the metric function at x."""
    rng = substream(seed, 0)
    xs = rng.normal(size=(n_triples, spec.dim))
    ps = _unit_scale_covectors(spec, rng, n_triples)
    ys = exp_from(spec, xs, ps, 1.0)
    min_eig = math.inf
    asym = 0.0
    at_x = 0.0
    near_min = math.inf
    for x, y in zip(xs, ys):
        for s in s_values:
            fn = lambda z, x=x, y=y, s=s: metric_function(spec, x, y, s, z)
            H = carnot_hessian(spec, fn, x)
            asym = max(asym, float(np.max(np.abs(H - H.T))))
            min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (H + H.T)).min()))
            at_x = max(at_x, abs(float(fn(x[None, :])[0])))
            near = group_op(spec, x[None, :], 0.05 * rng.normal(size=(n_near, spec.dim)))
            near_min = min(near_min, float(np.min(fn(near))))
    parts = [
        Part("min_eigenvalue", min_eig, 0.0, 1e-4, ">="),
        Part("asymmetry", asym, 1e-3, 0.0),
        Part("metric_function_at_x", at_x, 1e-10, 0.0),
        Part("metric_function_nearby", near_min, 0.0, 1e-8, ">="),
    ]
    params = {"n_triples": n_triples, "s_values": list(s_values), "h_outer": 1e-4, "h_inner": 1e-5}
    return VerifyReport("hessian_psd", spec.to_dict(), params, parts, seed)


# ---------------------------------------------------------------- cut-locus probe


@_timed
def verify_cut_probe(spec: GroupSpec = None, seed=42):
    """Second differences of d^2 blow up to -inf at a vertical-boundary cut point."""
    spec = make_spec(0, [1.0, 2.0]) if spec is None else spec
    p_x = np.zeros(spec.k)
    p_x[spec.m] = 1.0
    seq = probe_cut_nonsemiconvexity(spec, np.zeros(spec.dim), p_x)
    q = [v for _, v in seq]
    drops = [q[i] - q[i + 1] for i in range(len(q) - 1)]
    parts = [
        Part("min_successive_drop", min(drops), 0.0, 0.0, ">="),
        Part("q_at_smallest_v", q[-1], -100.0, 0.0),
    ]
    # strict decrease is required, so a zero drop must fail
    parts[0].passed = bool(min(drops) > 0)
    return VerifyReport("cut_probe", spec.to_dict(), {"p_x": p_x.tolist()}, parts, seed, details={"sequence": seq})


# ---------------------------------------------------------------- split-transport Jacobian inequality


@_timed
def verify_jdi_example36(m=1, d=1, a=(1.0,), b=(1.0, 0.0), n=400, s=0.5, seed=42):
    """Plan recovery and the per-pair Jacobian inequality with unit Jacobians."""
    ex = example36_instance(m, d, a, b, n, seed)
    spec = ex.spec
    plan = solve_ot(spec, ex.mu0, ex.mu1)
    order = np.argsort(plan.src)
    assign = plan.tgt[order]
    mismatches = int(np.sum(assign != np.arange(n))) if plan.is_permutation(n) else n
    a_arr, b_arr = np.asarray(a, float), np.asarray(b, float)
    analytic_cost = float(np.mean(np.where(ex.minus, 0.5 * a_arr @ a_arr, 0.5 * b_arr @ b_arr)))

    theta = plan.theta[order]
    t1 = tau(spec, 1 - s, theta)
    t2 = tau(spec, s, theta)
    total = t1 + t2
    abn = ex.minus
    abn_cls = plan.cls[order][abn]
    resid_abn = float(np.max(np.abs(1.0 - total[abn]))) if np.any(abn) else 0.0
    margin_heis = float(np.min(1.0 - total[~abn])) if np.any(~abn) else math.inf
    theta_err = max(
        float(np.max(np.abs(theta[abn] - np.concatenate([-a_arr, np.zeros(spec.k - m + 1)])))) if np.any(abn) else 0.0,
        float(np.max(np.abs(theta[~abn] - np.concatenate([np.zeros(m), b_arr, [0.0]])))) if np.any(~abn) else 0.0,
    )
    parts = [
        Part("assignment_mismatches", mismatches, 0, 0.0),
        Part("cost_gap", abs(plan.cost - analytic_cost), 1e-9, 0.0),
        Part("inequality_excess", float(np.max(total - 1.0)), 0.0, 1e-10),
        Part("abnormal_equality_residual", resid_abn, 1e-12, 0.0),
        Part("heisenberg_margin", margin_heis, 0.1, 0.0, ">="),
        Part("theta_structure", theta_err, 1e-12, 0.0),
        Part("abnormal_class_count", int(np.sum(abn_cls != int(CutClass.ABNORMAL_AXIS))), 0, 0.0),
    ]
    details = {
        "n_abnormal": int(abn.sum()),
        "n_heisenberg": int((~abn).sum()),
        "plan_cost": plan.cost,
        "analytic_cost": analytic_cost,
        "heisenberg_tau_sum": float(total[~abn][0]) if np.any(~abn) else None,
        "solver": plan.solver,
    }
    params = {"m": m, "d": d, "a": list(a_arr), "b": list(b_arr), "n": n, "s": s}
    return VerifyReport("jdi_example36", spec.to_dict(), params, parts, seed, details=details)


# ---------------------------------------------------------------- measure contraction


def default_unit_box(spec, offset=0.0):
    """Unit cube [-1/2, 1/2]^(k+1) shifted by ``offset`` along the first coordinate."""
    center = np.zeros(spec.dim)
    center[0] = offset
    return Box.cube(spec.dim, center)


@_timed
def verify_mcp(spec: GroupSpec, x=None, E_box=None, s_list=(0.25, 0.5, 0.75), n_samples=100_000, voxel_h=0.02, seed=42, eps=0.05):
    """Volume of the contraction of E toward x against s^(k+3) vol(E)."""
    x = np.zeros(spec.dim) if x is None else spec.check(x)
    E_box = default_unit_box(spec, 1.0) if E_box is None else E_box
    rng = substream(seed, 0)
    E = E_box.sample(rng, n_samples)
    volE = E_box.volume
    N = spec.k + 1
    parts = []
    details = {}
    sub = E[: min(n_samples, 20_000)]
    for s in s_list:
        Z = intermediate_point(spec, x[None, :], E, s)
        est = voxel_measure(Z, voxel_h)
        bound = s ** (spec.k + 3) * volE
        parts.append(Part(f"mcp_s={s}", est, (1 - eps) * bound, 0.0, ">="))
        tval, n_inf, _ = tau_set_details(spec, s, x[None, :], sub)
        details[f"s={s}"] = {
            "estimate": est,
            "bound": bound,
            "tau_set": tval,
            "tau_weighted_bound": tval**N * volE,
            "n_cut_pairs": n_inf,
        }
    params = {"x": list(x), "E_box": E_box.to_dict(), "s_list": list(s_list), "n_samples": n_samples, "voxel_h": voxel_h, "eps": eps}
    return VerifyReport("mcp", spec.to_dict(), params, parts, seed, details=details)


# ---------------------------------------------------------------- Brunn-Minkowski


def bm_bounds(k, s, volA, volB, t1, t2):
    """Right sides of the three Brunn-Minkowski forms, as volumes: (weighted, exponent, quarter)."""
    N = k + 1
    w1 = (t1 * volA ** (1 / N) + t2 * volB ** (1 / N)) ** N
    w2 = ((1 - s) ** ((k + 3) / N) * volA ** (1 / N) + s ** ((k + 3) / N) * volB ** (1 / N)) ** N
    w3 = 0.25 * ((1 - s) * volA ** (1 / (k + 3)) + s * volB ** (1 / (k + 3))) ** (k + 3)
    return w1, w2, w3


@_timed
def verify_bm(spec: GroupSpec, A_box=None, B_box=None, s=0.5, n=200_000, voxel_h=0.02, seed=42, eps=0.05, n_tau=300, mult_factor=4.0):
    """Brunn-Minkowski: voxel volume of intermediate points against the three bounds."""
    A_box = default_unit_box(spec) if A_box is None else A_box
    B_box = default_unit_box(spec, 3.0) if B_box is None else B_box
    k = spec.k
    N = k + 1
    rng = substream(seed, 0)
    A = A_box.sample(rng, n)
    B = B_box.sample(rng, n)
    Z = intermediate_point(spec, A, B, s)
    volZ = voxel_measure(Z, voxel_h)
    volA, volB = A_box.volume, B_box.volume

    sub_rng = substream(seed, 1)
    As = A_box.sample(sub_rng, n_tau)
    Bs = B_box.sample(sub_rng, n_tau)
    t1, inf1, _ = tau_set_details(spec, 1 - s, As, Bs)
    t2, inf2, _ = tau_set_details(spec, s, As, Bs)
    w1, w2, w3 = bm_bounds(k, s, volA, volB, t1, t2)

    prod = group_op(spec, A, B)
    volAB = voxel_measure(prod, mult_factor * voxel_h)
    mult = (volA ** (1 / N) + volB ** (1 / N)) ** N

    parts = [
        Part("bm_weighted", volZ ** (1 / N), (1 - eps) * w1 ** (1 / N), 0.0, ">="),
        Part("bm_exponent", volZ ** (1 / N), (1 - eps) * w2 ** (1 / N), 0.0, ">="),
        Part("bm_quarter", volZ ** (1 / (k + 3)), (1 - eps) * w3 ** (1 / (k + 3)), 0.0, ">="),
        Part("exponent_implies_quarter", w2, w3, 1e-12, ">="),
        Part("weighted_dominates_exponent", w1, w2, 1e-12, ">="),
        Part("multiplicative_bm", volAB ** (1 / N), (1 - eps) * mult ** (1 / N), 0.0, ">="),
    ]
    details = {
        "vol_Z": volZ,
        "vol_A": volA,
        "vol_B": volB,
        "tau_1_minus_s": t1,
        "tau_s": t2,
        "n_cut_pairs": [inf1, inf2],
        "bound_weighted": w1,
        "bound_exponent": w2,
        "bound_quarter": w3,
        "vol_product": volAB,
        "bound_product": mult,
        "product_voxel_h": mult_factor * voxel_h,
    }
    params = {"A_box": A_box.to_dict(), "B_box": B_box.to_dict(), "s": s, "n": n, "voxel_h": voxel_h, "eps": eps, "n_tau": n_tau}
    return VerifyReport("bm", spec.to_dict(), params, parts, seed, details=details)


# ---------------------------------------------------------------- entropy


def _tau_tilde_term(U, tt, rho, n):
    """tilde_tau^n U(rho / tilde_tau^n) / rho, elementwise."""
    w = tt**n
    return w * U(rho / w) / rho


def entropy_rhs(spec, plan, U, s, rho0, rho1):
    """Distortion-weighted right side over the plan pairs with constant source and target densities.

    Pairs whose coefficient is infinite are dropped; returns (value, n_dropped).
    """
    N = spec.k + 1
    t1 = tau(spec, 1 - s, plan.theta) / (1 - s)
    t2 = tau(spec, s, plan.theta) / s
    keep = np.isfinite(t1) & np.isfinite(t2)
    w = plan.mass[keep] / plan.mass[keep].sum()
    value = (1 - s) * float(w @ _tau_tilde_term(U, t1[keep], rho0, N)) + s * float(w @ _tau_tilde_term(U, t2[keep], rho1, N))
    return value, int((~keep).sum())


def uniform_entropy_rhs(U, s, rho0, vol0, rho1, vol1):
    """(1-s)^3 int U(rho0 / (1-s)^2) + s^3 int U(rho1 / s^2) for constant densities on sets of volume vol0, vol1."""
    u0 = float(U(np.array([rho0 / (1 - s) ** 2]))[0])
    u1 = float(U(np.array([rho1 / s**2]))[0])
    return (1 - s) ** 3 * vol0 * u0 + s**3 * vol1 * u1


@_timed
def verify_entropy(spec: GroupSpec, mu0_box=None, mu1_box=None, s=0.5, U=None, n=4000, voxel_h=0.05, seed=42, eps=0.05):
    """Entropy of the interpolant against the distortion-weighted and uniform right sides."""
    U = renyi(spec.k) if U is None else U
    if not U.is_admissible():
        raise ValueError(f"entropy functional {U.name!r} is not admissible")
    mu0_box = default_unit_box(spec) if mu0_box is None else mu0_box
    mu1_box = default_unit_box(spec, 3.0) if mu1_box is None else mu1_box
    N = spec.k + 1
    rng = substream(seed, 0)
    X = mu0_box.sample(rng, n)
    Y = mu1_box.sample(rng, n)
    mu0 = DiscreteMeasure.uniform(X)
    mu1 = DiscreteMeasure.uniform(Y)
    plan = solve_ot(spec, mu0, mu1)
    mus = interpolate(spec, plan, mu0, mu1, s)
    dens = DensityEstimate.from_measure(mus, voxel_h)
    lhs = dens.entropy(U)

    rho0 = 1.0 / mu0_box.volume
    rho1 = 1.0 / mu1_box.volume
    rhs, n_dropped = entropy_rhs(spec, plan, U, s, rho0, rho1)
    rhs_uniform = uniform_entropy_rhs(U, s, rho0, mu0_box.volume, rho1, mu1_box.volume)
    parts = [
        Part("entropy_weighted", lhs, rhs, eps * abs(rhs)),
        Part("entropy_uniform", lhs, rhs_uniform, eps * abs(rhs_uniform)),
        Part("weighted_sharper_than_uniform", rhs, rhs_uniform, 1e-12),
    ]
    details = {
        "n_dropped_cut_pairs": n_dropped,
        "n_occupied_cells": dens.grid.n_cells,
        "samples_per_cell": n / max(dens.grid.n_cells, 1),
        "rhs_weighted": rhs,
        "rhs_uniform": rhs_uniform,
        "plan_cost": plan.cost,
        "solver": plan.solver,
    }
    params = {
        "mu0_box": mu0_box.to_dict(),
        "mu1_box": mu1_box.to_dict(),
        "s": s,
        "U": U.name,
        "n": n,
        "voxel_h": voxel_h,
        "eps": eps,
    }
    return VerifyReport("entropy", spec.to_dict(), params, parts, seed, details=details)


# ---------------------------------------------------------------- Borell-Brascamp-Lieb


BBL_VARIANTS = ("weighted", "uniform", "nonweighted")


@dataclass(frozen=True)
class BBLGrid:
    """Step functions f on A and g on B with ``cells`` cells per axis."""

    A_box: Box
    B_box: Box
    cells: int = 12
    values: str = "random"

    def centers(self, box):
        axes = [np.linspace(lo, hi, self.cells, endpoint=False) + (hi - lo) / (2 * self.cells) for lo, hi in zip(box.lo, box.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def cell_volume(self, box):
        return box.volume / self.cells ** box.dim

    def step_values(self, rng, count):
        if self.values == "random":
            return rng.uniform(0.5, 1.5, size=count)
        if self.values == "indicator":
            return np.ones(count)
        raise ValueError(f"unknown step values {self.values!r}")


class BBLGeometry:
    """Intermediate points and distortion weights for every pair of cell centers."""

    def __init__(self, spec, grid: BBLGrid, s, voxel_h):
        self.spec = spec
        self.grid = grid
        self.s = s
        self.voxel_h = voxel_h
        X = grid.centers(grid.A_box)
        Y = grid.centers(grid.B_box)
        if len(X) * len(Y) > 10_000**2 or len(X) + len(Y) > 10_000:
            raise ValueError("BBL grid too large")
        self.X, self.Y = X, Y
        xi = np.repeat(np.arange(len(X)), len(Y))
        yi = np.tile(np.arange(len(Y)), len(X))
        lb = relative_log(spec, X[xi], Y[yi])
        Z = exp_from(spec, X[xi], lb.param, s)
        lo = np.floor(Z.min(axis=0) / voxel_h) * voxel_h
        idx = np.floor((Z - lo) / voxel_h).astype(np.int64)
        self.cells, self.voxel = np.unique(idx, axis=0, return_inverse=True)
        self.voxel = self.voxel.reshape(-1)
        self.xi, self.yi = xi, yi
        N = spec.k + 1
        self.tt1 = tau(spec, 1 - s, lb.param) / (1 - s)
        self.tt2 = tau(spec, s, lb.param) / s
        self.N = N

    def integral_h(self, fv, gv, p, variant):
        s = self.s
        N = self.N
        k = self.spec.k
        f = fv[self.xi]
        g = gv[self.yi]
        if variant == "weighted":
            with np.errstate(divide="ignore"):
                a = f / self.tt1**N
                b = g / self.tt2**N
        elif variant == "uniform":
            a = f / (1 - s) ** 2
            b = g / s**2
        elif variant == "nonweighted":
            a, b = f, g
        else:
            raise ValueError(f"unknown BBL variant {variant!r}")
        vals = pmean(s, p, a, b)
        hv = np.zeros(len(self.cells))
        np.maximum.at(hv, self.voxel, vals)
        return float(hv.sum() * self.voxel_h**N)


def bbl_bound(k, s, p, intf, intg, variant):
    if variant in ("weighted", "uniform"):
        return pmean(s, bbl_exponent(p, k + 1), intf, intg)
    return 0.25 * pmean(s, bbl_exponent(p, k + 3), intf, intg)


def check_bbl_exponent(k, p, variant):
    floor = -1.0 / (k + 3) if variant == "nonweighted" else -1.0 / (k + 1)
    if p < floor:
        raise ValueError(f"exponent {p} below the admissible floor {floor:.6g} for the {variant} form")


@_timed
def verify_bbl(spec: GroupSpec, s=0.5, p_exponent=1.0, grid_spec=None, seed=42, variants=BBL_VARIANTS, voxel_h=None, eps=0.05, geometry=None):
    """Grid quadrature of the minimal admissible h against the p-mean bound."""
    if grid_spec is None:
        grid_spec = BBLGrid(default_unit_box(spec), default_unit_box(spec, 3.0))
    if grid_spec.cells ** spec.dim > 10_000:
        raise ValueError("BBL grid exceeds 10^4 cells per function")
    for v in variants:
        check_bbl_exponent(spec.k, p_exponent, v)
    voxel_h = (grid_spec.A_box.hi[0] - grid_spec.A_box.lo[0]) / grid_spec.cells if voxel_h is None else voxel_h
    geo = BBLGeometry(spec, grid_spec, s, voxel_h) if geometry is None else geometry
    rng = substream(seed, 0)
    fv = grid_spec.step_values(rng, len(geo.X))
    gv = grid_spec.step_values(rng, len(geo.Y))
    intf = float(fv.sum() * grid_spec.cell_volume(grid_spec.A_box))
    intg = float(gv.sum() * grid_spec.cell_volume(grid_spec.B_box))
    parts = []
    details = {"int_f": intf, "int_g": intg, "n_pairs": len(geo.xi), "n_voxels": len(geo.cells)}
    for v in variants:
        ih = geo.integral_h(fv, gv, p_exponent, v)
        bound = bbl_bound(spec.k, s, p_exponent, intf, intg, v)
        parts.append(Part(f"bbl_{v}", ih, (1 - eps) * bound, 0.0, ">="))
        details[v] = {"int_h": ih, "bound": bound}
    params = {
        "s": s,
        "p": p_exponent,
        "cells": grid_spec.cells,
        "values": grid_spec.values,
        "A_box": grid_spec.A_box.to_dict(),
        "B_box": grid_spec.B_box.to_dict(),
        "voxel_h": voxel_h,
        "eps": eps,
        "variants": list(variants),
    }
    return VerifyReport("bbl", spec.to_dict(), params, parts, seed, details=details)


# ---------------------------------------------------------------- full suite


def verify_all(spec: GroupSpec, seed=42, quick=False):
    """Run every check at its default size (``quick`` shrinks the Monte Carlo sizes)."""
    scale = 10 if quick else 1
    reports = [
        verify_calculus(spec, n_samples=max(100, 10_000 // scale), seed=seed),
        verify_distortion(spec, n_samples=1000 // scale, seed=seed),
        verify_gardner(n_samples=10_000 // scale, seed=seed),
        verify_hessian_psd(spec, n_triples=max(5, 50 // scale), seed=seed),
        verify_jdi_example36(seed=seed),
        verify_mcp(spec, n_samples=100_000 // scale, voxel_h=0.02 if not quick else 0.04, seed=seed),
        verify_bm(spec, n=200_000 // scale, voxel_h=0.02 if not quick else 0.04, seed=seed),
        verify_entropy(spec, n=4000 // (4 if quick else 1), seed=seed, voxel_h=0.05 if not quick else 0.08),
    ]
    if spec.dim <= 4:
        grid = BBLGrid(default_unit_box(spec), default_unit_box(spec, 3.0), cells=12 if not quick else 6)
        voxel_h = 1.0 / grid.cells
        geo = BBLGeometry(spec, grid, 0.5, voxel_h)
        for p in (0.0, 1.0, math.inf):
            reports.append(verify_bbl(spec, 0.5, p, grid, seed, variants=("uniform", "nonweighted", "weighted"), geometry=geo))
    # the probe needs a frequency gap; fall back to the (0, [1, 2]) group otherwise
    reports.append(verify_cut_probe(spec if spec.d > spec.q else None, seed))
    return reports
