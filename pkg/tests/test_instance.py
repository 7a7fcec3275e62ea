import math

import numpy as np
import pytest

from capcover.instance import (
    Ball,
    MetricInstance,
    contains,
    distance,
    dumps,
    euclidean_instance,
    is_monotone,
    loads,
    metric_instance,
    order_key,
    validate_instance,
)

from conftest import line_instance


def test_single_ball_instance_is_valid():
    inst = line_instance([0.5], [0.0], [(0, 1.0, 1)])
    assert validate_instance(inst).is_valid


def test_monotonicity_violation_is_reported():
    inst = line_instance([0.0], [0.0, 0.0], [(0, 2.0, 1), (1, 1.0, 5)])
    assert "monotonicity" in validate_instance(inst).kinds()
    assert not is_monotone(inst)


def test_equal_radii_may_have_any_capacities():
    inst = line_instance([0.0], [0.0, 0.0], [(0, 1.0, 1), (1, 1.0, 5)])
    assert is_monotone(inst)


def test_triangle_violation_is_reported():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    inst = metric_instance(d, 2, [(0, 5.0, 2)])
    assert "triangle" in validate_instance(inst).kinds()


def test_uncovered_point_is_reported():
    inst = line_instance([0.0, 3.0], [0.0], [(0, 1.0, 2)])
    assert "coverage" in validate_instance(inst).kinds()


def test_distance_examples():
    inst = euclidean_instance([[0.0, 0.0]], [[3.0, 4.0]], [(0, 5.0, 1)])
    assert distance(inst, 0, 1) == 5.0
    assert distance(inst, 1, 1) == 0.0
    d = np.array([[0, 2.5], [2.5, 0]])
    assert distance(metric_instance(d, 1, [(0, 3.0, 1)]), 0, 1) == 2.5
    with pytest.raises(KeyError):
        distance(inst, 0, 7)


def test_contains_examples():
    inst = euclidean_instance([[0.0, 1.0], [0.0, 2.0], [0.0, 0.0]], [[0.0, 0.0]], [(0, 1.0, 3), (0, 0.0, 1)])
    ball, dot = inst.balls
    assert contains(inst, ball, 0)
    assert not contains(inst, ball, 1)
    assert contains(inst, ball, 1, beta=2)
    assert contains(inst, dot, 2)
    with pytest.raises(ValueError):
        contains(inst, ball, 0, beta=0.5)


def test_order_key_prefers_radius_then_capacity_then_id():
    balls = [Ball(0, 0, 1.0, 2), Ball(1, 0, 2.0, 1), Ball(2, 0, 1.0, 3), Ball(3, 0, 1.0, 3)]
    assert [b.id for b in sorted(balls, key=order_key)] == [1, 2, 3, 0]


def test_order_and_rank_are_inverse():
    inst = line_instance([0.0], [0.0] * 4, [(0, 1.0, 2), (1, 2.0, 3), (2, 1.0, 3), (3, 1.0, 3)])
    assert list(inst.order) == [1, 2, 3, 0]
    assert all(inst.rank[b] == k for k, b in enumerate(inst.order))


def test_round_trip_euclidean_is_exact(rng):
    pts, ctr = rng.random((7, 3)), rng.random((3, 3))
    inst = euclidean_instance(pts, ctr, [(0, 0.3, 2), (1, 0.1 + 1e-13, 1), (2, 0.7, 4)])
    back = loads(dumps(inst))
    assert np.array_equal(back.coords, inst.coords)
    assert back.balls == inst.balls
    assert dumps(back) == dumps(inst)


def test_round_trip_metric():
    d = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
    inst = metric_instance(d, 2, [(0, 1.5, 2)], point_names=["a", "b"], center_names=["z"])
    back = loads(dumps(inst))
    assert np.array_equal(back.metric, inst.metric)
    assert back.point_names == ("a", "b")


def test_malformed_instances_are_rejected():
    with pytest.raises(ValueError):
        loads('{"dimension": 2, "points": [[0, 0]], "centers": [[0, 0]]}')
    with pytest.raises(ValueError):
        loads('{"dimension": null, "points": ["a"], "centers": ["b"], "balls": []}')
    with pytest.raises(ValueError):
        MetricInstance(balls=(Ball(0, 3, 1.0, 1),), n_points=1, n_centers=1, coords=np.zeros((2, 2)))


def test_membership_matches_contains(rng):
    pts, ctr = rng.random((10, 2)), rng.random((4, 2))
    inst = euclidean_instance(pts, ctr, [(i, 0.2 + 0.1 * i, 1 + i) for i in range(4)])
    for beta in (1.0, 1.5, 3.0):
        mask = inst.membership(beta)
        for b in inst.balls:
            for j in range(inst.n):
                assert mask[b.id, j] == contains(inst, b, j, beta)
    assert math.isclose(inst.ball_point_dist[0, 0], np.linalg.norm(ctr[0] - pts[0]))
