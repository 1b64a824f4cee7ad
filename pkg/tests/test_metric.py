import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swarmcov.density import GAUSSIAN, INDICATOR, Domain, default_ring
from swarmcov.errors import ParameterError, QuadratureResolutionError
from swarmcov.metric import (
    GridObjective, Partition, SwarmConfig, Trajectory, blob_function, cumulative_error,
    discretization_error, error, error_series, one_sided_error, pitfall_report, reference_error,
)
from swarmcov.quadrature import QuadratureRule

RING = default_ring()
DOM = RING.domain


def swarms(max_n=40):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(
            arrays(np.float64, (n, 2), elements=st.floats(0.0, 1.0)),
            st.floats(0.6, 6.0),
        )
    ).map(lambda t: SwarmConfig(t[0] * DOM.upper, t[1]))


def coarse(delta):
    return GridObjective.for_delta(RING, delta, max_spacing=0.5)


@given(swarms(), st.sampled_from(["domain", "count"]))
def test_error_bounds_and_half_identity(cfg, norm):
    obj = coarse(cfg.delta)
    rule = obj.rule
    e = error(cfg, RING, rule, norm)
    eh = one_sided_error(cfg, RING, rule, norm)
    assert 0.0 <= e <= 2.0
    tol = abs(rule.apply(obj.blob(cfg.positions, cfg.delta) * 0 + obj.target) - 1)
    if norm == "domain":
        tol += abs(rule.apply(GridObjective(RING, rule, GAUSSIAN, norm).blob(cfg.positions, cfg.delta)) - 1)
        assert abs(e - 2 * eh) <= 2 * tol + 1e-12
    else:
        # count normalization loses the kernel mass outside the domain
        assert e - 2 * eh <= 2 * tol + 1e-12


@given(swarms(), st.randoms(use_true_random=False))
def test_permutation_invariance_is_exact(cfg, r):
    idx = list(range(cfg.n))
    r.shuffle(idx)
    obj = coarse(cfg.delta)
    a = obj.value(cfg.positions, cfg.delta)
    b = obj.value(cfg.positions[idx], cfg.delta)
    assert a == b
    _, g1, _ = obj.value_and_grad(cfg.positions, cfg.delta)
    _, g2, _ = obj.value_and_grad(cfg.positions[idx], cfg.delta)
    assert np.array_equal(g1[idx], g2)


@given(swarms())
def test_l1_bounded_by_l2(cfg):
    obj = coarse(cfg.delta)
    d = obj.blob(cfg.positions, cfg.delta) - obj.target
    l1 = obj.rule.apply(np.abs(d))
    l2 = math.sqrt(obj.rule.apply(d * d))
    assert l1 <= math.sqrt(DOM.area()) * l2 * (1 + 1e-12)


@given(swarms())
def test_mirror_symmetry(cfg):
    # the ring is symmetric about x = w/2 and the cell-center grid is too
    obj = coarse(cfg.delta)
    mirrored = cfg.positions.copy()
    mirrored[:, 0] = DOM.width - mirrored[:, 0]
    assert obj.value(mirrored, cfg.delta) == pytest.approx(obj.value(cfg.positions, cfg.delta), abs=1e-12)


def test_gradient_matches_central_differences():
    g = np.random.default_rng(3)
    obj = GridObjective.for_delta(RING, 2.0)
    for _ in range(3):
        p = g.uniform(0, 1, (12, 2)) * DOM.upper
        e, grad, gd = obj.value_and_grad(p, 2.5, with_delta=True)
        h = 1e-6
        fd = np.zeros_like(p)
        for i in range(p.shape[0]):
            for k in range(2):
                q1, q2 = p.copy(), p.copy()
                q1[i, k] += h
                q2[i, k] -= h
                fd[i, k] = (obj.value(q1, 2.5) - obj.value(q2, 2.5)) / (2 * h)
        assert np.linalg.norm(fd - grad) <= 1e-4 * np.linalg.norm(grad)
        fdd = (obj.value(p, 2.5 + h) - obj.value(p, 2.5 - h)) / (2 * h)
        assert gd == pytest.approx(fdd, rel=1e-4)


def test_gradient_rejects_indicator():
    obj = GridObjective(RING, QuadratureRule.make("rectangle", DOM, 96, 140), INDICATOR)
    with pytest.raises(ParameterError):
        obj.value_and_grad(np.array([[10.0, 10.0]]), 2.0)


def test_blob_function_matches_grid_blob():
    g = np.random.default_rng(4)
    cfg = SwarmConfig(g.uniform(0, 1, (7, 2)) * DOM.upper, 3.0)
    obj = coarse(3.0)
    X, Y = obj.rule.grid.mesh()
    exact = blob_function(cfg, DOM, np.stack([X, Y], -1))
    # the grid field drops tails beyond 8 delta, i.e. below exp(-32) of the peak
    assert np.allclose(exact, obj.blob(cfg.positions, 3.0), rtol=1e-12, atol=2e-14 * exact.max())


def test_indicator_blob_is_flat_disc():
    cfg = SwarmConfig([[24.0, 35.0]], 2.0, INDICATOR)
    v = blob_function(cfg, DOM, np.array([[24.0, 36.9], [24.0, 37.1]]))
    assert v[0] == pytest.approx(1 / (4 * math.pi))
    assert v[1] == 0.0


def test_error_rejects_positions_outside():
    cfg = SwarmConfig([[49.0, 1.0]], 2.0)
    with pytest.raises(ParameterError, match="robot 0"):
        error(cfg, RING)


def test_coarse_grid_triggers_resolution_error():
    # a narrow blob centered on a node of a coarse grid is hugely overcounted
    cfg = SwarmConfig([[6.0, 8.75]], 0.3)
    rule = QuadratureRule.make("rectangle", DOM, 4, 4)
    with pytest.raises(QuadratureResolutionError):
        error(cfg, RING, rule)


def test_reference_error_agrees_with_fine_grid():
    g = np.random.default_rng(5)
    cfg = SwarmConfig(g.uniform(0, 1, (3, 2)) * DOM.upper, 4.0)
    ref, est = reference_error(cfg, RING, rtol=1e-9, spacing=0.5)
    # the rectangle rule converges slowly across the ring's jumps
    fine = error(cfg, RING, QuadratureRule.make("rectangle", DOM, 3072, 4480))
    assert est < 1e-8
    assert ref == pytest.approx(fine, abs=5e-6)


def test_single_robot_far_from_everything_has_large_error():
    cfg = SwarmConfig([[0.0, 0.0]], 1.0)
    assert error(cfg, RING) > 1.9


def test_trajectory_helpers():
    g = np.random.default_rng(6)
    frames = g.uniform(0, 1, (4, 30, 2)) * DOM.upper
    traj = Trajectory(np.arange(4.0), frames, 2.0)
    series = error_series(traj, RING)
    assert series.shape == (4,)
    assert series[2] == pytest.approx(error(traj.snapshot(2), RING))
    # averaging blobs over time can only help, by convexity of the L1 norm
    assert cumulative_error(traj, RING) <= series.mean() + 1e-12
    with pytest.raises(ParameterError):
        Trajectory([0.0, 0.0], frames[:2], 2.0)


def test_partition_counts_and_locate():
    part = Partition.regular(DOM, 4, 5)
    assert part.shape == (4, 5)
    assert part.areas().sum() == pytest.approx(DOM.area())
    p = np.array([[0.0, 0.0], [48.0, 70.0], [12.0, 14.0], [11.999, 13.999]])
    c = part.counts(p)
    assert c.sum() == 4
    # shared edges go to the cell with the smaller index
    assert c[0, 0] == 3 and c[3, 4] == 1


def test_shifted_partition_edges():
    part = Partition.shifted(DOM, 4, 2)
    assert part.xedges[0] == 0.0 and part.xedges[-1] == 48.0
    assert part.xedges[1] == pytest.approx(18.0)
    assert len(part.xedges) == 5


@given(arrays(np.float64, (25, 2), elements=st.floats(0.0, 1.0)))
def test_single_cell_mu_is_zero(u):
    assert discretization_error(u * DOM.upper, RING, Partition.regular(DOM, 1, 1)) == 0.0


def test_fine_partition_mu_near_two():
    g = np.random.default_rng(8)
    p = g.uniform(0, 1, (200, 2)) * DOM.upper
    rows = pitfall_report(p, RING, [(1, 1), (1024, 1024)])
    assert rows[0].mu == 0.0
    assert rows[1].mu >= 1.9
    with pytest.raises(ParameterError):
        pitfall_report(p, RING, [(1, 1)])


def test_mu_bounded_by_two():
    g = np.random.default_rng(9)
    for m in (2, 7, 33):
        mu = discretization_error(g.uniform(0, 1, (50, 2)) * DOM.upper, RING, Partition.regular(DOM, m))
        assert 0.0 <= mu <= 2.0


def test_small_delta_mass_concentration():
    g = np.random.default_rng(10)
    p = g.uniform(0, 1, (20, 2)) * DOM.upper
    cfg = SwarmConfig(p, 0.05)
    boxes = 0
    for _ in range(200):
        x0, y0 = g.uniform(0, 40), g.uniform(0, 60)
        x1, y1 = x0 + g.uniform(2, 8), y0 + g.uniform(2, 10)
        dist = np.minimum.reduce([np.abs(p[:, 0] - x0), np.abs(p[:, 0] - x1), np.abs(p[:, 1] - y0), np.abs(p[:, 1] - y1)])
        if dist.min() < 1.0:
            continue
        boxes += 1
        box = Domain(x1 - x0, y1 - y0)
        rule = QuadratureRule.make("rectangle", box, int((x1 - x0) / 0.0125), int((y1 - y0) / 0.0125))
        X, Y = rule.grid.mesh()
        mass = rule.apply(blob_function(cfg, DOM, np.stack([X + x0, Y + y0], -1)))
        inside = np.sum((p[:, 0] > x0) & (p[:, 0] < x1) & (p[:, 1] > y0) & (p[:, 1] < y1))
        assert mass == pytest.approx(inside / 20, abs=0.01)
        if boxes == 8:
            break
    assert boxes == 8


@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(0, 2**32 - 1))
def test_translation_consistency_uniform_target(kx, ky, seed):
    from swarmcov.density import GridSpec, ScalarField, make_gridded

    uniform = make_gridded(ScalarField(GridSpec(DOM, 2, 2, centered=False), np.ones(4)))
    obj = GridObjective.for_delta(uniform, 1.0)
    g = np.random.default_rng(seed)
    p = np.column_stack([g.uniform(18, 30, 10), g.uniform(18, 52, 10)])
    shift = np.array([kx, ky]) * np.array(obj.rule.grid.spacing)
    assert obj.value(p + shift, 1.0) == pytest.approx(obj.value(p, 1.0), abs=1e-9)


def test_unknown_normalization():
    with pytest.raises(ParameterError):
        GridObjective.for_delta(RING, 2.0, normalization="mass")
