import json
import math

import numpy as np
import pytest

from carnot import DiscreteMeasure, interpolate, make_spec, solve_ot
from carnot.verify import (
    BBLGeometry,
    BBLGrid,
    Box,
    DensityEstimate,
    EntropyFunctional,
    Part,
    VerifyReport,
    VoxelGrid,
    bbl_bound,
    bm_bounds,
    carnot_hessian,
    check_bbl_exponent,
    default_unit_box,
    entropy_rhs,
    metric_function,
    renyi,
    shannon,
    substream,
    uniform_entropy_rhs,
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
    voxel_measure,
)


def test_part_relations():
    assert Part("a", 1.0, 2.0, 0.0).passed
    assert not Part("a", 2.5, 2.0, 0.1).passed
    assert Part("a", 1.95, 2.0, 0.1, ">=").passed
    assert not Part("a", math.inf, 2.0, 0.0).passed
    with pytest.raises(ValueError):
        Part("a", 1.0, 1.0, 0.0, "==")


def test_report_serialization():
    rep = VerifyReport("demo", {"kernel_dim": 0}, {"n": np.int64(3)}, [Part("x", 1.0, 2.0, 0.0)], 7, 1.5, {"arr": np.arange(2)})
    data = json.loads(rep.to_json())
    assert data["pass"] is True and data["lhs"] == 1.0 and data["runtime"] == 1.5
    assert "runtime" not in json.loads(rep.to_json(include_runtime=False))
    assert rep.part("x").rhs == 2.0
    with pytest.raises(KeyError):
        rep.part("y")
    assert rep.summary().startswith("[PASS] demo")


def test_substreams_are_independent_and_reproducible():
    a = substream(42, 0).random(5)
    assert np.array_equal(a, substream(42, 0).random(5))
    assert not np.array_equal(a, substream(42, 1).random(5))


def test_box_basics(rng):
    box = Box.cube(3, edge=2.0)
    assert box.volume == 8.0
    pts = box.sample(rng, 100)
    assert np.all(pts >= -1) and np.all(pts <= 1)
    assert box.shifted([1, 0, 0]).lo == (0.0, -1.0, -1.0)
    with pytest.raises(ValueError):
        Box((0, 0), (1, 0))


def test_voxel_measure_examples(rng):
    assert voxel_measure(np.array([[0.3, 0.2, 0.1]]), 0.1) == pytest.approx(1e-3)
    assert voxel_measure(np.zeros((0, 3)), 0.1) == 0.0
    unit = Box.cube(3, center=[0.5, 0.5, 0.5])
    est = voxel_measure(unit.sample(rng, 1_000_000), 0.02, unit)
    assert abs(est - 1.0) < 0.02
    with pytest.raises(ValueError):
        voxel_measure(np.array([[2.0, 0.0, 0.0]]), 0.1, unit)
    with pytest.raises(ValueError):
        voxel_measure(np.array([[0.0, 0.0, 0.0], [1e9, 0.0, 0.0]]), 1e-6)


def test_voxel_grid_is_lattice_anchored():
    a = VoxelGrid.from_points(np.array([[0.05, 0.05, 0.05]]), 0.1)
    b = VoxelGrid.from_points(np.array([[0.05, 0.05, 0.05], [-0.95, 0.05, 0.05]]), 0.1)
    assert a.n_cells == 1 and b.n_cells == 2
    np.testing.assert_allclose(a.origin, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(b.origin, [-1.0, 0.0, 0.0])


def test_density_estimate(rng):
    mu = DiscreteMeasure.uniform(Box.cube(3, center=[0.5] * 3).sample(rng, 20_000))
    dens = DensityEstimate.from_measure(mu, 0.25)
    assert dens.grid.counts.sum() == pytest.approx(1.0)
    assert np.mean(dens.density) == pytest.approx(1.0, rel=0.05)


def test_entropy_admissibility():
    assert renyi(2).is_admissible()
    assert shannon(2).is_admissible()
    assert not EntropyFunctional("quadratic", lambda r: -(r**2), 2).is_admissible()
    assert not EntropyFunctional("shifted", lambda r: r * 0 + 1.0, 2).is_admissible()
    # t^(k+1) U(t^-(k+1)) = -t for the Renyi choice
    t = np.linspace(0.1, 3, 7)
    np.testing.assert_allclose(t**3 * renyi(2)(t ** (-3.0)), -t, rtol=1e-14)


def test_entropy_rejects_inadmissible(h1):
    bad = EntropyFunctional("quadratic", lambda r: -(r**2), 2)
    with pytest.raises(ValueError):
        verify_entropy(h1, U=bad, n=50)


def test_uniform_entropy_rhs_value():
    U = renyi(2)
    got = uniform_entropy_rhs(U, 0.5, 1.0, 1.0, 1.0, 1.0)
    assert got == pytest.approx(2 * 0.125 * -(4.0 ** (2 / 3)), rel=1e-14)


def test_entropy_static_case(h1, rng):
    """mu0 = mu1: nothing moves and both sides agree up to the histogram."""
    box = default_unit_box(h1)
    mu = DiscreteMeasure.uniform(box.sample(rng, 300))
    plan = solve_ot(h1, mu, mu)
    assert not plan.moving.any()
    U = renyi(2)
    rhs, dropped = entropy_rhs(h1, plan, U, 0.5, 1.0, 1.0)
    assert dropped == 0
    assert rhs == pytest.approx(-1.0, rel=1e-12)
    mus = interpolate(h1, plan, mu, mu, 0.5)
    np.testing.assert_array_equal(np.sort(mus.points, axis=0), np.sort(mu.points, axis=0))


def test_bm_bounds_ordering():
    w1, w2, w3 = bm_bounds(2, 0.5, 1.0, 1.0, 0.5 ** (5 / 3), 0.5 ** (5 / 3))
    assert w1 == pytest.approx(w2)
    assert w2 >= w3
    assert w2 ** (1 / 3) == pytest.approx(0.5 ** (5 / 3) * 2)


def test_bbl_bound_and_exponent_floor():
    assert bbl_bound(2, 0.5, math.inf, 1.0, 1.0, "uniform") == pytest.approx(1.0)
    assert bbl_bound(2, 0.5, math.inf, 1.0, 1.0, "nonweighted") == pytest.approx(0.25)
    check_bbl_exponent(2, -1 / 3, "weighted")
    with pytest.raises(ValueError):
        check_bbl_exponent(2, -0.4, "weighted")
    check_bbl_exponent(2, -0.2, "nonweighted")
    with pytest.raises(ValueError):
        check_bbl_exponent(2, -0.21, "nonweighted")


def test_bbl_grid_values():
    grid = BBLGrid(Box.cube(3), Box.cube(3, [3, 0, 0]), cells=4)
    c = grid.centers(grid.A_box)
    assert c.shape == (64, 3)
    assert c.min() == pytest.approx(-0.375)
    assert grid.cell_volume(grid.A_box) == pytest.approx(1 / 64)
    with pytest.raises(ValueError):
        BBLGrid(grid.A_box, grid.B_box, values="odd").step_values(np.random.default_rng(0), 3)


def test_bbl_indicator_reduces_to_containment(h1):
    """f = g = indicator of the same box, p = +inf: int h covers the box."""
    box = default_unit_box(h1)
    grid = BBLGrid(box, box, cells=6, values="indicator")
    rep = verify_bbl(h1, 0.5, math.inf, grid, variants=("uniform",), voxel_h=1 / 6)
    assert rep.details["uniform"]["int_h"] >= 1.0 - 1e-9
    assert rep.passed


def test_bbl_small_grid(h1):
    grid = BBLGrid(default_unit_box(h1), default_unit_box(h1, 3.0), cells=5)
    geo = BBLGeometry(h1, grid, 0.5, 0.2)
    for p in (0.0, 1.0, math.inf):
        rep = verify_bbl(h1, 0.5, p, grid, geometry=geo, voxel_h=0.2)
        assert rep.passed, rep.to_json()
    with pytest.raises(ValueError):
        verify_bbl(h1, 0.5, -1.0, grid)


def test_metric_function_vanishes_at_x(h1, rng):
    x = rng.normal(size=3)
    y = rng.normal(size=3)
    assert abs(metric_function(h1, x, y, 0.3, x[None, :])[0]) < 1e-10


def test_carnot_hessian_of_quadratic(h1):
    """For f = x1^2 + x2^2 the frame Hessian at 0 is diag(2, 2, 0)."""
    fn = lambda z: z[:, 0] ** 2 + z[:, 1] ** 2
    H = carnot_hessian(h1, fn, np.zeros(3))
    np.testing.assert_allclose(H, np.diag([2.0, 2.0, 0.0]), atol=1e-6)


def test_carnot_hessian_commutator(h1):
    """X1 X2 z - X2 X1 z equals the structure constant."""
    H = carnot_hessian(h1, lambda z: z[:, 2], np.array([0.3, -0.1, 0.2]))
    assert H[0, 1] - H[1, 0] == pytest.approx(4.0, abs=1e-6)


def test_verify_calculus_small(spec):
    rep = verify_calculus(spec, n_samples=200, seed=1)
    assert rep.passed, rep.to_json()
    with pytest.raises(ValueError):
        verify_calculus(spec, n_samples=10)


def test_verify_distortion(spec):
    rep = verify_distortion(spec, n_samples=300, seed=3)
    assert rep.passed, rep.to_json()
    heis = spec.m == 0 and all(a == 4.0 for a in spec.alphas)
    assert any(p.name == "heisenberg_reduction" for p in rep.parts) == heis


def test_verify_gardner_small():
    assert verify_gardner(n_samples=2000, seed=5).passed


def test_verify_hessian_small(spec):
    rep = verify_hessian_psd(spec, n_triples=4, seed=9)
    assert rep.passed, rep.to_json()


def test_verify_cut_probe_default():
    rep = verify_cut_probe()
    assert rep.passed
    assert rep.part("q_at_smallest_v").lhs < -1000


def test_verify_jdi_small():
    rep = verify_jdi_example36(n=60, seed=2)
    assert rep.passed, rep.to_json()
    assert rep.details["heisenberg_tau_sum"] == pytest.approx(2 * 0.5 ** (6 / 4), rel=1e-12)


def test_verify_mcp_small(h1):
    rep = verify_mcp(h1, s_list=(0.5,), n_samples=20_000, voxel_h=0.04)
    assert rep.passed
    d = rep.details["s=0.5"]
    assert d["tau_weighted_bound"] >= d["bound"] - 1e-12


def test_verify_mcp_s_one_recovers_volume(h1):
    rep = verify_mcp(h1, s_list=(1.0,), n_samples=100_000, voxel_h=0.05)
    assert abs(rep.details["s=1.0"]["estimate"] - 1.0) < 0.05


def test_verify_bm_identical_boxes(h1):
    box = default_unit_box(h1)
    rep = verify_bm(h1, box, box, n=50_000, voxel_h=0.05, n_tau=50)
    assert rep.details["vol_Z"] >= box.volume * 0.95
    assert rep.passed


def test_reports_are_deterministic(h1):
    a = verify_mcp(h1, s_list=(0.5,), n_samples=5000, voxel_h=0.05, seed=4)
    b = verify_mcp(h1, s_list=(0.5,), n_samples=5000, voxel_h=0.05, seed=4)
    assert a.to_json(include_runtime=False) == b.to_json(include_runtime=False)
    c = verify_mcp(h1, s_list=(0.5,), n_samples=5000, voxel_h=0.05, seed=5)
    assert a.to_json(include_runtime=False) != c.to_json(include_runtime=False)


def test_verify_entropy_small(h1):
    rep = verify_entropy(h1, n=400, voxel_h=0.1, seed=3)
    assert rep.part("weighted_sharper_than_uniform").passed
    assert rep.details["n_dropped_cut_pairs"] == 0


def test_verify_entropy_other_spec_rejected_size():
    spec = make_spec(0, [4.0])
    with pytest.raises(ValueError):
        verify_entropy(spec, n=6000)
