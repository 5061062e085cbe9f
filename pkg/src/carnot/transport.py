"""Exact discrete optimal transport for the cost d_CC^2 / 2.

Small uniform measures of equal size are matched with scipy's assignment
solver and their Kantorovich potentials are recovered by a shortest-path pass
over the optimal permutation.  Everything else goes through the network
simplex of POT, which is much faster on large dense instances.
"""

from dataclasses import dataclass, field
import math
import os

import numpy as np
from scipy.optimize import linear_sum_assignment

from .distance import CutClass, IDENTITY_TOL, pairwise_sq_dist, relative_log
from .expmap import exp_from
from .group import GroupSpec, group_op, make_spec

MAX_SUPPORT = 5000
ASSIGNMENT_MAX = 1000
WEIGHT_TOL = 1e-9
MASS_EPS = 1e-15


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights have different lengths")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    def __len__(self):
        return self.points.shape[0]

    @property
    def is_uniform(self):
        return bool(np.all(self.weights == self.weights[0]))


@dataclass(frozen=True)
class TransportPlan:
    src: np.ndarray
    tgt: np.ndarray
    mass: np.ndarray
    cost: float
    phi: np.ndarray
    phi_c: np.ndarray
    theta: np.ndarray
    cls: np.ndarray
    moving: np.ndarray
    dual_value: float = 0.0
    solver: str = field(default="assignment")

    def __len__(self):
        return self.src.shape[0]

    def is_permutation(self, n):
        return len(self) == n and np.array_equal(np.sort(self.src), np.arange(n)) and np.array_equal(
            np.sort(self.tgt), np.arange(n)
        )


def _assignment_duals(C, sigma):
    """Potentials (u, v) with u_i + v_j <= C_ij and equality on j = sigma(i).

    With v_sigma(i) = C_i,sigma(i) - u_i the constraints become the difference
    system u_i - u_j <= C_i,sigma(j) - C_j,sigma(j), solved by Bellman-Ford
    relaxation from a virtual source.  The optimal permutation has no negative
    cycle, so the loop terminates.
    """
    n = C.shape[0]
    diag = C[np.arange(n), sigma]
    W = C[:, sigma] - diag[None, :]
    u = np.zeros(n)
    for _ in range(n + 1):
        cand = np.min(u[None, :] + W, axis=1)
        new = np.minimum(u, cand)
        if np.array_equal(new, u):
            break
        u = new
    else:
        raise RuntimeError("dual recovery did not converge (negative cycle)")
    v = np.empty(n)
    v[sigma] = diag - u
    return u, v


def _import_pot():
    # only the numpy backend is used; skipping the others saves seconds at import
    for name in ("TENSORFLOW", "PYTORCH", "JAX", "CUPY"):
        os.environ.setdefault(f"POT_BACKEND_DISABLE_{name}", "1")
    import ot

    return ot


def solve_ot(spec: GroupSpec, mu0: DiscreteMeasure, mu1: DiscreteMeasure, cost=None) -> "TransportPlan":
    """Optimal plan for the cost d_CC^2 / 2 together with Kantorovich potentials.

    ``cost`` may supply a precomputed cost matrix.
    """
    n0, n1 = len(mu0), len(mu1)
    if max(n0, n1) > MAX_SUPPORT:
        raise ValueError(f"supports larger than {MAX_SUPPORT} are not supported")
    spec.check(mu0.points)
    spec.check(mu1.points)
    C = 0.5 * pairwise_sq_dist(spec, mu0.points, mu1.points) if cost is None else np.asarray(cost, dtype=float)

    if n0 == n1 <= ASSIGNMENT_MAX and mu0.is_uniform and mu1.is_uniform:
        rows, sigma = linear_sum_assignment(C)
        u, v = _assignment_duals(C, sigma)
        src, tgt = rows, sigma
        mass = np.full(n0, 1.0 / n0)
        solver = "assignment"
    else:
        ot = _import_pot()
        G, log = ot.emd(mu0.weights, mu1.weights, C, log=True, numItermax=10**9)
        if log.get("warning"):
            raise RuntimeError(f"network simplex did not reach optimality: {log['warning']}")
        src, tgt = np.nonzero(G > MASS_EPS)
        mass = G[src, tgt]
        u, v = np.asarray(log["u"]), np.asarray(log["v"])
        solver = "network_simplex"

    lb = relative_log(spec, mu0.points[src], mu1.points[tgt])
    plan = TransportPlan(
        src=np.asarray(src),
        tgt=np.asarray(tgt),
        mass=mass,
        cost=float(np.sum(mass * C[src, tgt])),
        phi=u,
        phi_c=v,
        theta=lb.param,
        cls=lb.cls,
        moving=lb.dist > IDENTITY_TOL,
        dual_value=float(mu0.weights @ u + mu1.weights @ v),
        solver=solver,
    )
    return plan


def interpolate(spec: GroupSpec, plan: TransportPlan, mu0: DiscreteMeasure, mu1: DiscreteMeasure, s):
    """Displacement interpolant: each matched pair contributes its geodesic point at time s."""
    x = mu0.points[plan.src]
    pts = exp_from(spec, x, plan.theta, float(s))
    pts[~plan.moving] = x[~plan.moving]
    w = plan.mass / plan.mass.sum()
    return DiscreteMeasure(pts, w)


def wasserstein2(plan: TransportPlan):
    return math.sqrt(2.0 * plan.cost)


@dataclass(frozen=True)
class Example36:
    spec: GroupSpec
    mu0: DiscreteMeasure
    mu1: DiscreteMeasure
    image: np.ndarray
    minus: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def psi(self, x):
        return example36_map(self.spec, self.a, self.b, x)

    def phi(self, x):
        """The c-concave potential min(<a, x1>, -<b, x_h>)."""
        x = np.atleast_2d(x)
        m = self.spec.m
        return np.minimum(x[:, :m] @ self.a, -(x[:, m : self.spec.k] @ self.b))

    def phi_c(self, y):
        y = np.atleast_2d(y)
        m = self.spec.m
        c0 = -0.5 * self.a @ self.a - y[:, :m] @ self.a
        c1 = -0.5 * self.b @ self.b + y[:, m : self.spec.k] @ self.b
        return np.maximum(c0, c1)


def example36_split(spec, a, b, x):
    """True where x lies in the closed halfspace <a, x1> + <b, x_h> <= 0."""
    x = np.atleast_2d(x)
    return x[:, : spec.m] @ a + x[:, spec.m : spec.k] @ b <= 0


def example36_map(spec, a, b, x):
    """Analytic optimal map: kernel shift by -a on one side, right translation by (b, 0) on the other."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    minus = example36_split(spec, a, b, x)
    out = x.copy()
    out[minus, : spec.m] -= a
    shift = np.zeros(spec.dim)
    shift[spec.m : spec.k] = b
    out[~minus] = group_op(spec, x[~minus], shift)
    return out


def example36_instance(m, d, a, b, n, seed=42, margin=1e-9):
    """Sampled instance on R^m x H^d: uniform measure on a unit-volume box and its image."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if m < 1 or d < 1:
        raise ValueError("example needs m >= 1 and d >= 1")
    if a.shape != (m,) or b.shape != (2 * d,):
        raise ValueError(f"a must have {m} entries and b must have {2 * d}")
    if not np.any(a) or not np.any(b):
        raise ValueError("a and b must be nonzero")
    if n > MAX_SUPPORT:
        raise ValueError(f"n must not exceed {MAX_SUPPORT}")
    spec = make_spec(m, [4.0] * d)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, size=(n, spec.dim))
    normal = np.concatenate([a, b])
    lin = x[:, : spec.k] @ normal
    close = np.abs(lin) < margin
    if np.any(close):
        step = (np.where(lin[close] < 0, -2 * margin, 2 * margin) - lin[close]) / (normal @ normal)
        x[close, : spec.k] += step[:, None] * normal
    minus = example36_split(spec, a, b, x)
    image = example36_map(spec, a, b, x)
    mu0 = DiscreteMeasure.uniform(x)
    mu1 = DiscreteMeasure.uniform(image)
    return Example36(spec, mu0, mu1, image, minus, a, b)


def classify_pairs(plan: TransportPlan):
    """Counts of plan pairs per cut class, keyed by class label."""
    return {c.label: int(np.sum(plan.cls == int(c))) for c in CutClass}
