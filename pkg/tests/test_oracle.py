from fractions import Fraction

import pytest
from hypothesis import given, settings

from policyiter import Mdp
from policyiter.engine import Greedy, IterationRecord, Trace, run_policy_iteration
from policyiter.experiment import campaign_traces
from policyiter.mdp import Comparison, ModificationSet
from policyiter.oracle import (
    EnumerationCapError,
    InstanceMismatchError,
    PolicyOrder,
    build_policy_order,
    corollary10_literal_mean,
    count_between,
    enumerate_policies,
    lattice_not_above_mean,
    lemma9_stats,
    modification_lattice,
    optimal_policies,
    optimal_value,
    ruled_out_per_iteration,
    verify_corollary10,
    verify_lemma3,
    verify_lemma4,
    verify_lemma5,
    verify_lemma6,
    verify_lemma9,
    verify_lemma12,
    verify_order,
    verify_theorem1,
    verify_theorem2,
    verify_trace,
)

from conftest import small_mdps

B, W, E, I = Comparison.BETTER, Comparison.WORSE, Comparison.EQUIVALENT, Comparison.INCOMPARABLE
F = Fraction
MS = ModificationSet


def test_enumerate_policies():
    assert enumerate_policies(2, 2) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(enumerate_policies(1, 3)) == 3
    p = enumerate_policies(3, 2)
    assert len(p) == 8 and p[0] == (0, 0, 0) and p[-1] == (1, 1, 1)
    with pytest.raises(EnumerationCapError):
        enumerate_policies(4, 2, cap=15)


def test_index_matches_enumeration(m2):
    order = PolicyOrder(Mdp.exact([[[1]] * 3], [[0, 1, 2]], F(1, 2)))
    assert [order.index(p) for p in order.policies] == list(range(3))


def test_m2_order(m2):
    o = build_policy_order(m2)
    assert o.cmp((1, 0), (0, 0)) is B
    assert o.cmp((0, 0), (0, 1)) is B
    assert o.cmp((0, 1), (1, 1)) is E
    assert o.cmp((0, 0), (1, 1)) is B
    assert optimal_value(o) == (1, 2)
    assert optimal_policies(o) == [(1, 0)]


def test_m2c_order(m2c):
    o = build_policy_order(m2c)
    assert o.cmp((0, 1), (0, 0)) is B and o.cmp((0, 1), (1, 1)) is B
    assert o.cmp((0, 0), (1, 1)) is I
    assert o.cmp((0, 0), (1, 0)) is B and o.cmp((1, 1), (1, 0)) is B
    assert optimal_value(o) == (2, 2)


def test_single_action_order():
    mdp = Mdp.exact([[[1, 0]], [[0, 1]]], [[3], [4]], F(1, 3))
    o = build_policy_order(mdp)
    assert o.policies == [(0, 0)] and o.relation == [[E]]
    assert optimal_value(o) == o.values[0]


def test_count_between(m2, m2c):
    assert count_between(build_policy_order(m2c), (1, 0), (0, 1)) == 3
    o2 = build_policy_order(m2)
    assert count_between(o2, (0, 1), (0, 0)) == 1
    assert count_between(o2, (1, 0), (1, 0)) == 0


def test_modification_lattice(m2c):
    pi = (1, 0)
    assert modification_lattice(m2c, pi, MS()) == [pi]
    lat = modification_lattice(m2c, pi, MS(((0, 0), (1, 1))))
    assert lat == [(1, 0), (0, 0), (1, 1), (0, 1)]
    with pytest.raises(ValueError):
        modification_lattice(m2c, pi, MS(((0, 0), (0, 1))))


def test_theorem1(m2, m2c):
    assert verify_theorem1(m2, (1, 0)).passed and verify_theorem1(m2, (1, 0)).checks == 0
    rep = verify_theorem1(m2c, (1, 0))
    assert rep.passed and rep.checks == 3


def test_verifiers_refuse_float(m2):
    with pytest.raises(ValueError):
        verify_theorem1(m2.to_float(), (0, 0))
    with pytest.raises(ValueError):
        verify_lemma3(m2.to_float())


def test_lemma3(m2, m2c):
    rep = verify_lemma3(m2)
    assert rep.passed and rep.checks == 8
    assert verify_lemma3(m2c).passed
    one = Mdp.exact([[[1]] * 3], [[0, 1, 1]], F(1, 2))
    rep = verify_lemma3(one)
    assert rep.passed and rep.checks == 6


def test_lemma4(m2, m2c):
    # states(T) covers everything: only pi itself
    rep = verify_lemma4(m2c, (1, 0))
    assert rep.passed and rep.checks == 1
    rep = verify_lemma4(m2, (0, 1))
    assert rep.passed and rep.checks == 2
    # T empty: pi optimal, every policy is a completion
    rep = verify_lemma4(m2, (1, 0))
    assert rep.passed and rep.checks == 4


def test_lemma5_and_12_on_m2_trace(m2):
    trace = run_policy_iteration(m2, (0, 1), Greedy())
    assert [t.states for t in trace.t_sets[:-1]] == [{1}, {0}]
    assert verify_lemma5(trace, 2).passed
    assert verify_lemma12(trace).passed
    with pytest.raises(ValueError):
        verify_lemma5(trace, 3)


def _fake_trace(policies, sets):
    recs = [
        IterationRecord(i, p, (), MS(s), MS(s), MS(s[:1]))
        for i, (p, s) in enumerate(zip(policies[:-1], sets[:-1]))
    ]
    return Trace(recs, policies[-1], (), True, "fake", final_t_set=MS(sets[-1]))


def test_lemma5_reports_witness():
    trace = _fake_trace([(0, 0), (1, 0), (1, 1)], [((0, 1),), ((0, 0),), ()])
    rep = verify_lemma5(trace, 2, seed=42)
    assert not rep.passed
    assert rep.violations[0]["i"] == 0 and rep.violations[0]["j"] == 1
    assert "seed=42" in rep.to_text() and "status=FAIL" in rep.to_text()
    # lemma 12 additionally needs agreement on the earlier switch states
    assert verify_lemma12(trace).passed
    trace = _fake_trace([(0, 0), (0, 1), (1, 1)], [((0, 1),), ((0, 1),), ()])
    assert not verify_lemma12(trace).passed


def test_single_iteration_traces_pass(m2c):
    trace = run_policy_iteration(m2c, (1, 0), Greedy())
    assert verify_lemma5(trace, 2).passed and verify_lemma12(trace).passed


def test_lemma6(m2, m2c):
    assert verify_lemma6(m2, (1, 0), build_policy_order(m2)).checks == 0
    assert verify_lemma6(m2c, (1, 0), build_policy_order(m2c)).passed
    assert verify_lemma6(m2, (0, 1), build_policy_order(m2)).passed


class _Stub:
    """Minimal order-like object for partial orders that no small MDP produces."""

    def __init__(self, relation):
        self.relation = relation
        self.mdp = Mdp.exact([[[1]]], [[0]], F(0))

    def __len__(self):
        return len(self.relation)


def test_lemma9_closed_forms(m2):
    m = 5
    antichain = _Stub([[E if i == j else I for j in range(m)] for i in range(m)])
    assert lemma9_stats(antichain)[0] == 0 and verify_lemma9(antichain).passed
    # single state, m actions, distinct self-loop rewards: a total order
    chain = build_policy_order(Mdp.exact([[[1]] * m], [list(range(m))], F(1, 2)))
    assert lemma9_stats(chain)[0] == F(m - 1, 2) and verify_lemma9(chain).passed
    o = build_policy_order(m2)
    mean, up, down = lemma9_stats(o)
    assert mean == F(5, 4) and up == down == 5
    assert verify_lemma9(o).passed


def test_corollary10_two_element_lattice():
    # one state, a1 strictly better than a0
    mdp = Mdp.exact([[[1], [1]]], [[0, 1]], F(1, 2))
    o = build_policy_order(mdp)
    rep = verify_corollary10(mdp, (0,), o)
    assert rep.passed
    assert lattice_not_above_mean(o, [(0,), (1,)]) == F(3, 2)


def test_corollary10_m2c(m2c):
    o = build_policy_order(m2c)
    lat = modification_lattice(m2c, (1, 0), MS(((0, 0), (1, 1))))
    # not-above counts: bottom 1, the two incomparable middles 3 each, top 4
    assert lattice_not_above_mean(o, lat) == F(11, 4)
    assert verify_corollary10(m2c, (1, 0), o).passed
    # the strict-between expectation is only 1/2 here, below 2**(|T|-1) = 2
    assert corollary10_literal_mean(m2c, (1, 0), o) == F(1, 2)


def test_corollary10_empty_l_skipped(m2):
    rep = verify_corollary10(m2, (1, 0), build_policy_order(m2))
    assert rep.passed and rep.checks == 0 and rep.notes


def test_ruled_out(m2, m2c):
    o2 = build_policy_order(m2)
    assert ruled_out_per_iteration(run_policy_iteration(m2, (0, 1), Greedy()), o2) == [1, 1]
    assert ruled_out_per_iteration(run_policy_iteration(m2, (0, 0), Greedy()), o2) == [1]
    oc = build_policy_order(m2c)
    assert ruled_out_per_iteration(run_policy_iteration(m2c, (1, 0), Greedy()), oc) == [3]
    with pytest.raises(InstanceMismatchError):
        ruled_out_per_iteration(run_policy_iteration(m2c, (1, 0), Greedy()), o2)


def test_theorem2_and_order(m2, m2c):
    for mdp in (m2, m2c):
        o = build_policy_order(mdp)
        assert verify_theorem2(o).passed
        assert verify_order(o).passed


def test_verify_order_catches_broken_table(m2):
    o = build_policy_order(m2)
    o.relation[0][1] = I
    assert not verify_order(o).passed


@settings(max_examples=30, deadline=None)
@given(small_mdps(max_n=3, min_k=2))
def test_all_verifiers_pass_on_random_small_mdps(mdp):
    o = build_policy_order(mdp)
    assert verify_order(o).passed
    assert verify_theorem2(o).passed
    assert verify_lemma3(mdp, o).passed
    assert verify_lemma9(o).passed
    for pi in o.policies:
        assert verify_theorem1(mdp, pi, o).passed
        assert verify_lemma4(mdp, pi, o).passed
        assert verify_lemma6(mdp, pi, o).passed
        assert verify_corollary10(mdp, pi, o).passed
    for trace in campaign_traces(mdp, 3):
        if mdp.k == 2:
            assert verify_lemma5(trace, 2).passed
        assert verify_lemma12(trace).passed
        assert all(r.passed for r in verify_trace(trace, o))
