import numpy as np
import pytest

from banditstop.constraints import (
    ConstraintGroup,
    InvariantViolation,
    Move,
    Swap,
    apply_op,
    canonical_policy,
    convert_policy,
    intermediate_policies,
    sort_boxes,
    validate_policy,
)
from banditstop.environments import PandoraAction
from banditstop.oracle import pandora_expected_utility, weitzman

from _instances import random_group, random_pandora, random_valid_policy


def test_close_and_tighten():
    g = ConstraintGroup([0.1, 0.3, 0.2], [0.9, 0.8, 0.95], {(0, 1), (1, 2)})
    g.close()
    assert g.edges == {(0, 1), (1, 2), (0, 2)}
    assert g.tighten()
    assert g.lo == [0.3, 0.3, 0.2] and g.hi == [0.9, 0.8, 0.8]
    g.check()
    assert not g.tighten()


def test_check_detects_violations():
    with pytest.raises(InvariantViolation):
        ConstraintGroup([0.5], [0.4]).check()
    with pytest.raises(InvariantViolation):
        ConstraintGroup([0.1, 0.1], [0.9, 0.9], {(0, 1), (1, 0)}).check()
    with pytest.raises(InvariantViolation):
        ConstraintGroup([0.1, 0.5], [0.9, 0.9], {(0, 1)}).check()
    with pytest.raises(InvariantViolation):
        ConstraintGroup([0.1] * 3, [0.9] * 3, {(0, 1), (1, 2)}).check()
    g = ConstraintGroup([0.1, 0.5], [0.6, 0.9])
    with pytest.raises(InvariantViolation):
        g.add(0, 1)  # forces lo_0 = 0.5 and hi_1 = 0.6, fine; then the reverse closes a cycle
        g.add(1, 0)


def test_add_disjoint():
    g = ConstraintGroup([0.6, 0.1, 0.3], [0.9, 0.5, 0.7])
    assert sorted(g.add_disjoint()) == [(0, 1)]
    assert g.ordered(0, 1) and not g.ordered(0, 2)


def test_validate_policy_messages():
    g = ConstraintGroup([0.5, 0.2], [0.8, 0.6], {(0, 1)})
    assert validate_policy(g, PandoraAction((0, 1), (0.6, 0.4))) == []
    msgs = validate_policy(g, PandoraAction((1, 0), (0.6, 0.6)))
    assert any("constraint (0, 1)" in m for m in msgs)
    msgs = validate_policy(g, PandoraAction((0, 1), (0.5, 0.55)))
    assert any("increase" in m for m in msgs)
    msgs = validate_policy(g, PandoraAction((0, 1), (0.9, 0.4)))
    assert any("outside" in m for m in msgs)


def test_weitzman_policy_valid_on_consistent_groups():
    rng = np.random.default_rng(3)
    for _ in range(100):
        inst = random_pandora(rng, 4)
        act, _ = weitzman(inst)
        sigma = np.array(act.thresholds)
        lo = np.clip(sigma - rng.random(4) * 0.2, 0, 1)
        hi = np.clip(sigma + rng.random(4) * 0.2, 0, 1)
        g = ConstraintGroup(lo, hi)
        for a in range(4):
            for b in range(4):
                if sigma[a] > sigma[b] and rng.random() < 0.5:
                    g.edges.add((a, b))
        g.close()
        g.tighten()
        g.check()
        assert validate_policy(g, act) == []


def test_sort_boxes_breaks_ties_by_constraints():
    g = ConstraintGroup([0.4, 0.4, 0.4], [0.8, 0.8, 0.8], {(2, 0)})
    assert sort_boxes([0, 1, 2], [0.5, 0.5, 0.5], g) == [1, 2, 0]
    assert canonical_policy(g).order == (1, 2, 0)
    assert validate_policy(g, canonical_policy(g)) == []


def test_apply_op_and_errors():
    p = PandoraAction((0, 1, 2), (0.5, 0.4, 0.3))
    assert apply_op(p, Move(1, 0.4, 0.45)).thresholds == (0.5, 0.45, 0.3)
    assert apply_op(p, Swap(1, 0)).order == (1, 0, 2)
    with pytest.raises(ValueError):
        apply_op(p, Swap(2, 0))


def test_convert_canonical_is_empty():
    rng = np.random.default_rng(0)
    g, _ = random_group(rng, 5)
    assert convert_policy(g, canonical_policy(g)) == []
    with pytest.raises(ValueError):
        convert_policy(g, PandoraAction(tuple(range(5)), (2.0,) * 5))


def test_convert_bounds_and_valid_intermediates():
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 7))
        g, _ = random_group(rng, n)
        p = random_valid_policy(rng, g)
        if p is None:
            continue
        ops = convert_policy(g, p)
        assert sum(isinstance(o, Move) for o in ops) <= 2 * n * n
        assert sum(isinstance(o, Swap) for o in ops) <= 2 * n * n
        steps = intermediate_policies(p, ops)
        assert all(validate_policy(g, q) == [] for q in steps)
        assert steps[-1] == canonical_policy(g)
        checked += 1


def test_convert_triangle_inequality():
    rng = np.random.default_rng(2)
    done = 0
    while done < 30:
        inst = random_pandora(rng, 3, atoms_only=True)
        sigma = np.array(weitzman(inst)[0].thresholds)
        lo = np.clip(sigma - 0.2, 0, 1)
        hi = np.clip(sigma + 0.2, 0, 1)
        g = ConstraintGroup(lo, hi)
        g.add_disjoint()
        p = random_valid_policy(rng, g)
        if p is None:
            continue
        steps = intermediate_policies(p, convert_policy(g, p))
        vals = [pandora_expected_utility(inst, q) for q in steps]
        total = sum(abs(b - a) for a, b in zip(vals, vals[1:]))
        assert abs(vals[-1] - vals[0]) <= total + 1e-12
        done += 1


def test_snapshot_json():
    g = ConstraintGroup([0.1, 0.2], [0.3, 0.4], {(1, 0)})
    assert g.to_json() == '{"lo": [0.1, 0.2], "hi": [0.3, 0.4], "edges": [[1, 0]]}'
