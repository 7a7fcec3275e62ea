import itertools

import numpy as np
import pytest

from capcover.exact import (
    InfeasibleInstance,
    brute_force_opt,
    feasible_assignment_exists,
    integral_assignment,
    verify_solution,
)
from capcover.gen import gen_random_euclidean
from capcover.instance import euclidean_instance
from capcover.solution import RoundedSolution, from_assignment

from conftest import line_instance


def kuhn_feasible(inside, caps):
    """Independent check: expand ball i into caps[i] slots and run Kuhn's augmenting paths."""
    slots = [i for i in range(inside.shape[0]) for _ in range(int(caps[i]))]
    owner = [-1] * len(slots)

    def augment(j, seen):
        for s, i in enumerate(slots):
            if inside[i, j] and not seen[s]:
                seen[s] = True
                if owner[s] == -1 or augment(owner[s], seen):
                    owner[s] = j
                    return True
        return False

    return all(augment(j, [False] * len(slots)) for j in range(inside.shape[1]))


def test_fractional_half_matching_rounds_to_perfect_matching():
    inst = line_instance([0.0, 0.1], [0.0, 0.05], [(0, 1.0, 1), (1, 1.0, 1)])
    x = np.full((2, 2), 0.5)
    a = integral_assignment(inst, [0, 1], x)
    assert sorted(a.tolist()) == [0, 1]
    assert a.tolist() == integral_assignment(inst, [0, 1], x).tolist()


def test_integral_input_is_kept():
    inst = line_instance([0.0, 0.1, 0.2], [0.0, 0.0], [(0, 1.0, 2), (1, 1.0, 2)])
    x = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    assert integral_assignment(inst, [0, 1], x).tolist() == [0, 1, 0]


def test_all_points_into_one_ball():
    inst = line_instance([0.0, 0.1, 0.2], [0.0], [(0, 1.0, 3)])
    assert integral_assignment(inst, [0], np.ones((1, 3))).tolist() == [0, 0, 0]


def test_integral_assignment_detects_infeasible_input():
    inst = line_instance([0.0, 0.1], [0.0], [(0, 1.0, 1)])
    with pytest.raises(AssertionError):
        integral_assignment(inst, [0], np.ones((1, 2)))


def test_copies_multiply_capacity():
    inst = line_instance([0.0, 0.1], [0.0], [(0, 1.0, 1)])
    assert integral_assignment(inst, [0], np.ones((1, 2)), copies={0: 2}).tolist() == [0, 0]


def test_feasibility_examples():
    inst = line_instance([0.0, 0.1], [0.0], [(0, 1.0, 1)])
    assert not feasible_assignment_exists(inst, [0])
    assert not feasible_assignment_exists(inst, [])
    with pytest.raises(ValueError):
        feasible_assignment_exists(inst, [0], beta=0.5)


@pytest.mark.parametrize("seed", range(30))
def test_feasibility_matches_kuhn(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    inst = euclidean_instance(rng.random((n, 2)), rng.random((m, 2)), [(i, float(rng.uniform(0.1, 0.6)), int(rng.integers(1, 4))) for i in range(m)])
    subset = [i for i in range(m) if rng.random() < 0.7]
    sub_inside = inst.membership()[subset]
    assert feasible_assignment_exists(inst, subset) == kuhn_feasible(sub_inside, inst.capacities[subset])


def test_brute_force_examples():
    inst = line_instance([0.0, 0.1, 0.2], [0.0], [(0, 1.0, 3)])
    assert brute_force_opt(inst)[0] == 1
    inst = line_instance([0.0, 0.1, 5.0, 5.1], [0.0, 5.0], [(0, 1.0, 2), (1, 1.0, 2)])
    opt, subset, a = brute_force_opt(inst)
    assert (opt, subset, a.tolist()) == (2, [0, 1], [0, 0, 1, 1])


def test_brute_force_infeasible_and_cap():
    inst = line_instance([0.0, 0.1], [0.0], [(0, 1.0, 1)])
    with pytest.raises(InfeasibleInstance):
        brute_force_opt(inst)
    with pytest.raises(ValueError):
        brute_force_opt(gen_random_euclidean(0, 5, 13), max_balls=12)


@pytest.mark.parametrize("seed", range(10))
def test_brute_force_matches_exhaustive_kuhn(seed):
    rng = np.random.default_rng(100 + seed)
    inst = gen_random_euclidean(seed, int(rng.integers(2, 8)), int(rng.integers(1, 7)), cap_range=(1, 3))
    inside = inst.membership()
    best = min(
        len(s)
        for r in range(1, inst.m + 1)
        for s in itertools.combinations(range(inst.m), r)
        if kuhn_feasible(inside[list(s)], inst.capacities[list(s)])
    )
    assert brute_force_opt(inst)[0] == best


def test_verify_flags_capacity_and_distance():
    inst = line_instance([0.0, 5.1, 5.0], [0.0, 5.0], [(0, 0.5, 1), (1, 0.5, 2)])
    good = from_assignment(inst, np.array([0, 1, 1]))
    assert verify_solution(inst, good, 9).is_valid
    over = RoundedSolution([0, 1], {0: 1.0, 1: 1.0}, np.array([1, 1, 1]))
    assert "capacity" in verify_solution(inst, over, 9).kinds()
    far = RoundedSolution([0, 1], {0: 1.0, 1: 10.0}, np.array([1, 0, 1]))
    assert "distance" in verify_solution(inst, far, 9).kinds()
    missing = RoundedSolution([0], {0: 1.0}, np.array([0, 0, 1]))
    assert "unassigned" in verify_solution(inst, missing, 100).kinds()


def test_verify_checks_recorded_expansion():
    inst = line_instance([0.0, 0.9], [0.0], [(0, 0.5, 2)])
    sol = RoundedSolution([0], {0: 1.0}, np.array([0, 0]))
    assert "distance" in verify_solution(inst, sol, 9).kinds()
