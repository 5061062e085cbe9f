"""Acceptance criteria, one test per criterion at the stated sizes and tolerances.

Each test records a one-line PASS/FAIL summary that is printed at the end of
the pytest session.  Running this file as a script prints the same lines.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SPEC_ARGS, spec_of
from carnot import exp_from_identity, jac_exp, log_batch, make_spec, tau
from carnot.distance import CutClass
from carnot.verify import (
    _fd_jacobian,
    _random_interior_covectors,
    heisenberg_tau,
    substream,
    verify_bbl,
    verify_bm,
    verify_calculus,
    verify_cut_probe,
    verify_distortion,
    verify_entropy,
    verify_gardner,
    verify_hessian_psd,
    verify_jdi_example36,
    verify_mcp,
    BBLGeometry,
    BBLGrid,
    default_unit_box,
)

SEED = 42


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_criterion_01_round_trip():
    worst, n_bad, runtime = 0.0, 0, 0.0
    for name in SPEC_ARGS:
        spec = spec_of(name)
        rng = substream(SEED, 0)
        p = _random_interior_covectors(spec, rng, 10_000, frac=0.95)
        start = time.perf_counter()
        lb = log_batch(spec, exp_from_identity(spec, p))
        runtime = max(runtime, time.perf_counter() - start)
        worst = max(worst, float(np.max(np.abs(lb.param - p))))
        n_bad += int(np.sum(lb.cls != int(CutClass.INTERIOR)))
    passed = worst < 1e-8 and n_bad == 0 and runtime < 10
    record(1, "exp/log round trip", passed, f"max error {worst:.2e} < 1e-8, non-interior {n_bad}, slowest spec {runtime:.2f}s < 10s")


def test_criterion_02_jacobian():
    worst, flat = 0.0, 0.0
    for name in SPEC_ARGS:
        spec = spec_of(name)
        rng = substream(SEED, 2)
        for q in _random_interior_covectors(spec, rng, 100, frac=0.9):
            fd = np.linalg.det(_fd_jacobian(lambda v: exp_from_identity(spec, v), q, 1e-6))
            exact = jac_exp(spec, q)
            worst = max(worst, abs(fd - exact) / abs(exact))
        p0 = rng.normal(size=(100, spec.dim))
        p0[:, -1] = 0.0
        closed = np.sum(spec.alpha_array**2 * np.sum(spec.blocks(p0) ** 2, axis=-1), axis=-1) / 12
        flat = max(flat, float(np.max(np.abs(jac_exp(spec, p0) - closed))))
    record(2, "exp Jacobian", worst < 1e-5 and flat <= 1e-10, f"FD relative error {worst:.2e} < 1e-5, flat branch error {flat:.1e} <= 1e-10")


def test_criterion_03_gradients():
    g_err, back_err = 0.0, 0.0
    for name in SPEC_ARGS:
        rep = verify_calculus(spec_of(name), n_samples=200, seed=SEED)
        g_err = max(g_err, rep.part("gradient_vs_fd").lhs)
        back_err = max(back_err, rep.part("exp_minus_gradient_returns").lhs)
    record(3, "gradient of d^2/2", g_err < 1e-5 and back_err < 1e-9, f"FD error {g_err:.2e} < 1e-5, exp_x(-grad) error {back_err:.2e} < 1e-9")


def test_criterion_04_distortion():
    deficit, ratio, heis = -math.inf, 0.0, 0.0
    for name in SPEC_ARGS:
        rep = verify_distortion(spec_of(name), n_samples=1000, seed=SEED)
        deficit = max(deficit, rep.part("lower_bound_deficit").lhs)
        ratio = max(ratio, rep.part("jacobian_ratio_identity").lhs)
        if name in ("H1", "H2"):
            heis = max(heis, rep.part("heisenberg_reduction").lhs)
    passed = deficit <= 1e-12 and ratio <= 1e-10 and heis <= 1e-12
    record(4, "distortion coefficients", passed, f"lower-bound deficit {deficit:.1e} <= 1e-12, Jacobian ratio {ratio:.1e} <= 1e-10, Heisenberg {heis:.1e} <= 1e-12")


def test_criterion_05_example36():
    rep = verify_jdi_example36(m=1, d=1, a=(1.0,), b=(1.0, 0.0), n=400, s=0.5, seed=SEED)
    p = rep.part
    detail = (
        f"mismatches {p('assignment_mismatches').lhs:.0f}, cost gap {p('cost_gap').lhs:.1e} < 1e-9, "
        f"abnormal residual {p('abnormal_equality_residual').lhs:.1e} < 1e-12, "
        f"Heisenberg margin {p('heisenberg_margin').lhs:.3f} > 0.1, {rep.runtime:.1f}s < 30s"
    )
    record(5, "split-transport Jacobian inequality", rep.passed and rep.runtime < 30, detail)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_criterion_06_mcp(s):
    rep = verify_mcp(make_spec(0, [4.0]), s_list=(s,), n_samples=100_000, voxel_h=0.02, seed=SEED)
    d = rep.details[f"s={s}"]
    detail = f"s={s}: volume {d['estimate']:.4g} >= {0.95 * d['bound']:.4g}, {rep.runtime:.1f}s < 60s"
    record(6, "measure contraction", rep.passed and rep.runtime < 60, detail)


def test_criterion_07_brunn_minkowski():
    rep = verify_bm(make_spec(0, [4.0]), s=0.5, n=200_000, voxel_h=0.02, seed=SEED)
    part = rep.part("bm_exponent")
    detail = f"vol(Z)^(1/3) {part.lhs:.4f} >= {part.rhs:.4f}, {rep.runtime:.1f}s < 120s"
    record(7, "Brunn-Minkowski (exponent form)", part.passed and rep.runtime < 120, detail)


def test_criterion_08_entropy():
    rep = verify_entropy(make_spec(0, [4.0]), s=0.5, n=4000, voxel_h=0.05, seed=SEED)
    w, u = rep.part("entropy_weighted"), rep.part("entropy_uniform")
    detail = f"Ent {w.lhs:.4f} <= weighted {w.rhs:.4f} and uniform {u.rhs:.4f} (+5%), {rep.runtime:.1f}s < 120s"
    record(8, "entropy inequality", w.passed and u.passed and rep.runtime < 120, detail)


def test_criterion_09_bbl():
    spec = make_spec(0, [4.0])
    grid = BBLGrid(default_unit_box(spec), default_unit_box(spec, 3.0), cells=12)
    start = time.perf_counter()
    geo = BBLGeometry(spec, grid, 0.5, 1.0 / grid.cells)
    reports = [verify_bbl(spec, 0.5, p, grid, SEED, geometry=geo) for p in (0.0, 1.0, math.inf)]
    runtime = time.perf_counter() - start
    worst = min(part.lhs / part.rhs for r in reports for part in r.parts)
    passed = all(r.passed for r in reports) and runtime < 300
    record(9, "Borell-Brascamp-Lieb", passed, f"p in {{0, 1, inf}}, three variants, min int h / bound {worst:.3f} >= 1, {runtime:.1f}s < 300s")


def test_criterion_10_hessian():
    min_eig, at_x, near = math.inf, 0.0, math.inf
    for name in SPEC_ARGS:
        rep = verify_hessian_psd(spec_of(name), n_triples=50, seed=SEED)
        min_eig = min(min_eig, rep.part("min_eigenvalue").lhs)
        at_x = max(at_x, rep.part("metric_function_at_x").lhs)
        near = min(near, rep.part("metric_function_nearby").lhs)
    passed = min_eig >= -1e-4 and at_x <= 1e-10 and near >= -1e-8
    record(10, "Hessian PSD", passed, f"min eigenvalue {min_eig:.2e} >= -1e-4, m(x) {at_x:.1e} <= 1e-10, nearby min {near:.2e} >= -1e-8")


def test_criterion_11_cut_probe():
    rep = verify_cut_probe(make_spec(0, [1.0, 2.0]), SEED)
    q = [v for _, v in rep.details["sequence"]]
    record(11, "cut-locus probe", rep.passed, "Q = " + ", ".join(f"{v:.4g}" for v in q) + " strictly decreasing, last < -100")


def test_criterion_12_gardner():
    rep = verify_gardner(n_samples=10_000, seed=SEED)
    record(12, "Gardner p-mean inequality", rep.passed, f"max violation {rep.lhs:.1e} <= 1e-12")


if __name__ == "__main__":
    import sys

    failed = 0
    tests = [(n, f) for n, f in sorted(globals().items()) if n.startswith("test_criterion_")]
    for name, fn in tests:
        cases = [dict(s=s) for s in (0.25, 0.5, 0.75)] if name == "test_criterion_06_mcp" else [{}]
        for kwargs in cases:
            try:
                fn(**kwargs)
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
