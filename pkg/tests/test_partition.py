import itertools

import pytest

import oracles
from risnoma.partition import PartitionCandidate, fairness_objective, search_partition_k2
from risnoma.scenario import Scenario, table1_scenario
from risnoma.theory import noma_outage


def _ue1_ue4(n, pt=10.0):
    return table1_scenario(4, n_elements=n, pt_dbm=pt).select_users([0, 3])


def test_objective_examples():
    assert fairness_objective([0.001, 0.001]) == 0.0
    assert fairness_objective([0.1, 0.3, 0.4]) == pytest.approx(0.6)
    assert fairness_objective([0.7]) == 0.0
    for perm in itertools.permutations([0.1, 0.3, 0.4, 0.05]):
        assert fairness_objective(perm) == pytest.approx(fairness_objective([0.1, 0.3, 0.4, 0.05]))


def test_objective_errors():
    with pytest.raises(ValueError):
        fairness_objective([])
    with pytest.raises(ValueError):
        fairness_objective([0.2, 1.2])
    with pytest.raises(ValueError):
        fairness_objective([-0.1])


def test_identical_users_split_evenly():
    sc = Scenario(ue_positions=((10.0, 8.0), (10.0, 8.0)), ris_position=(35.0, 5.0), bs_position=(55.0, 10.0),
                  n_elements=64, pt_dbm=30.0)
    res = search_partition_k2(sc)
    assert res.best.sizes == (32, 32)
    assert res.best.objective == 0.0


def test_tiny_instance_matches_brute_force():
    # at this power the N=10 outages are away from 0 and 1
    sc = _ue1_ue4(10, pt=40.0)
    p = [noma_outage(sc.with_updates(partition_sizes=(5, 5)), k) for k in range(2)]
    assert all(1e-6 < v < 1 - 1e-6 for v in p)
    res = search_partition_k2(sc)
    n1, obj = oracles.brute_force_split(sc, 40.0, 2.0)
    assert res.best.sizes == (n1, 10 - n1)
    assert res.best.objective == pytest.approx(obj, rel=1e-6, abs=1e-15)
    assert len(res.curve) == 9
    assert res.curve[res.best_index] is res.best


def test_rejects_other_user_counts():
    with pytest.raises(NotImplementedError):
        search_partition_k2(table1_scenario(3, n_elements=30))
    with pytest.raises(NotImplementedError):
        search_partition_k2(table1_scenario(1, n_elements=30))


def test_ue1_ue4_search():
    sc = _ue1_ue4(200)
    res = search_partition_k2(sc)
    uniform = res.curve[99]
    assert uniform.sizes == (100, 100)
    assert res.best.objective <= uniform.objective
    assert res.best.objective < uniform.objective
    assert 87 <= res.best.sizes[0] <= 97
    # UE4 sits farther from the RIS; it gets at least half the elements
    lb = sc.link_budget()
    assert lb.sigma2_g[1] < lb.sigma2_g[0]
    assert res.best.sizes[1] >= 100
    assert isinstance(res.best, PartitionCandidate) and sum(res.best.sizes) == 200


def test_search_never_worse_than_uniform():
    for n, pt in [(40, 20.0), (64, 15.0), (100, 10.0)]:
        res = search_partition_k2(_ue1_ue4(n, pt))
        uniform = next(c for c in res.curve if c.sizes == (n // 2, n - n // 2))
        assert res.best.objective <= uniform.objective
        assert res.best.objective == min(c.objective for c in res.curve)
