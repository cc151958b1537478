import math
import random

import pytest

from ringbalance.election import DuplicateIds, leader_elect
from ringbalance.sim import UniformDelay


def test_max_id_wins():
    res = leader_elect([3, 1, 2])
    assert res.leader_id == 3 and res.leader_pos == 0
    assert res.labels == (0, 1, 2)


def test_singleton_ring():
    res = leader_elect([7])
    assert res.leader_pos == 0 and res.metrics.units_total == 0


def test_duplicate_ids_rejected():
    with pytest.raises(DuplicateIds):
        leader_elect([1, 2, 1])


@pytest.mark.parametrize("mode", ["sync", "async"])
@pytest.mark.parametrize("n", [2, 3, 5, 8, 13, 21, 32])
def test_leader_and_message_bound(mode, n):
    for seed in range(4):
        ids = random.Random(seed).sample(range(1000), n)
        delay = UniformDelay(1, 4, seed) if mode == "async" else None
        res = leader_elect(ids, mode, delay)
        assert res.leader_id == max(ids)
        assert res.labels[res.leader_pos] == 0
        assert sorted(res.labels) == list(range(n))
        assert res.metrics.units_total <= 8 * n * (math.floor(math.log2(n)) + 2)


def test_n8_bound_from_standard_analysis():
    for seed in range(20):
        ids = random.Random(seed).sample(range(100), 8)
        assert leader_elect(ids).metrics.units_total <= 8 * 8 * 5


def test_labels_are_clockwise_distances():
    ids = [4, 9, 2, 7, 1]
    res = leader_elect(ids)
    assert res.leader_pos == 1
    assert res.labels == (4, 0, 1, 2, 3)
