import itertools
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings

from policyiter import Mdp
from policyiter.mdp import (
    Comparison,
    ModificationSet,
    bellman_residual,
    compare,
    compare_values,
    evaluate_policy,
    modification_set,
    modify,
    q_values,
    reduce_to_well_defined,
    validate_mdp,
)

from conftest import mdp_and_policy, small_mdps

B, W, E, I = Comparison.BETTER, Comparison.WORSE, Comparison.EQUIVALENT, Comparison.INCOMPARABLE
F = Fraction


def sympy_values(mdp, pi):
    """Independent exact solve of (I - gamma P_pi) V = R_pi."""
    n = mdp.n
    P = sympy.Matrix(n, n, lambda s, t: sympy.Rational(str(mdp.P[s][pi[s]][t])))
    R = sympy.Matrix(n, 1, lambda s, _: sympy.Rational(str(mdp.R[s][pi[s]])))
    g = sympy.Rational(str(mdp.gamma))
    sol = (sympy.eye(n) - g * P).LUsolve(R)
    return tuple(F(int(x.p), int(x.q)) for x in sol)


# -- validate_mdp ---------------------------------------------------------

def test_valid_builtin(m2):
    assert validate_mdp(m2) == []


def test_row_sum_violation(m2):
    P = [[list(r) for r in ps] for ps in m2.P]
    P[0][0][0] = F(2)
    bad = Mdp(P=P, R=m2.R, gamma=m2.gamma)
    problems = validate_mdp(bad)
    sums = [p for p in problems if "sums to" in p]
    assert len(sums) == 1 and "(s=0,a=0)" in sums[0]


def test_gamma_violation(m2):
    problems = validate_mdp(Mdp(P=m2.P, R=m2.R, gamma=F(1)))
    assert len(problems) == 1 and "gamma" in problems[0]


def test_mixed_modes_reported(m2):
    R = [[0.0, F(0)], [F(1), F(0)]]
    assert any("R(s=0,a=0)" in p for p in validate_mdp(Mdp(P=m2.P, R=R, gamma=m2.gamma)))


def test_float_mode_row_tolerance(m2):
    f = m2.to_float()
    assert validate_mdp(f) == []
    P = [[list(r) for r in ps] for ps in f.P]
    P[1][1] = [0.5 + 1e-13, 0.5]
    assert validate_mdp(Mdp(P=P, R=f.R, gamma=f.gamma)) == []
    P[1][1] = [0.5 + 1e-6, 0.5]
    assert validate_mdp(Mdp(P=P, R=f.R, gamma=f.gamma))


def test_exact_constructor_rejects_float():
    with pytest.raises(TypeError):
        Mdp.exact([[[1]]], [[0.5]], F(1, 2))


# -- evaluate_policy / q_values ---------------------------------------------

def test_single_state_geometric_series():
    mdp = Mdp.exact([[[1]]], [[1]], F(1, 2))
    assert evaluate_policy(mdp, (0,)) == (F(2),)


def test_m2_values(m2):
    assert evaluate_policy(m2, (1, 0)) == (1, 2)
    assert evaluate_policy(m2, (0, 0)) == (0, 2)
    assert evaluate_policy(m2, (0, 1)) == (0, 0)
    assert evaluate_policy(m2, (1, 1)) == (0, 0)


@given(small_mdps())
def test_zero_discount_gives_immediate_reward(mdp):
    mdp = Mdp(P=mdp.P, R=mdp.R, gamma=F(0))
    for pi in itertools.product(range(mdp.k), repeat=mdp.n):
        assert evaluate_policy(mdp, pi) == tuple(mdp.R[s][pi[s]] for s in range(mdp.n))
        q = q_values(mdp, pi, evaluate_policy(mdp, pi))
        assert q == mdp.R


@given(mdp_and_policy())
def test_exact_evaluation_matches_sympy_and_residual_is_zero(case):
    mdp, pi = case
    v = evaluate_policy(mdp, pi)
    assert v == sympy_values(mdp, pi)
    assert bellman_residual(mdp, pi, v) == 0


@given(mdp_and_policy())
def test_float_evaluation_residual(case):
    mdp, pi = case
    f = mdp.to_float()
    v = evaluate_policy(f, pi)
    assert bellman_residual(f, pi, v) <= 1e-9
    assert max(abs(a - float(b)) for a, b in zip(v, evaluate_policy(mdp, pi))) <= 1e-9


@given(mdp_and_policy())
def test_q_on_policy_equals_v(case):
    mdp, pi = case
    v = evaluate_policy(mdp, pi)
    q = q_values(mdp, pi, v)
    assert all(q[s][pi[s]] == v[s] for s in range(mdp.n))


def test_m2_q_value(m2):
    v = evaluate_policy(m2, (0, 1))
    assert q_values(m2, (0, 1), v)[1][0] == 1


# -- modification sets -------------------------------------------------------

def test_m2_modification_set(m2):
    t = modification_set(m2, (0, 1))
    assert t.pairs == ((1, 0),) and t.well_defined


def test_m2c_modification_set(m2c):
    t = modification_set(m2c, (1, 0))
    assert t.pairs == ((0, 0), (1, 1)) and len(t) == 2


def test_optimal_policy_has_empty_set(m2, m2c):
    assert not modification_set(m2, (1, 0))
    assert not modification_set(m2c, (0, 1))


def test_reduce_keeps_two_action_set():
    t = ModificationSet(((0, 1), (2, 0)))
    q = ((0, 5), (0, 0), (3, 0))
    assert reduce_to_well_defined(t, q) == t


def test_reduce_picks_max_q_then_lowest_index():
    t = ModificationSet(((0, 1), (0, 2)))
    assert reduce_to_well_defined(t, ((0, 5, 7),)).pairs == ((0, 2),)
    assert reduce_to_well_defined(t, ((0, 5, 5),)).pairs == ((0, 1),)
    # float ties within tolerance also fall back to the lowest index
    assert reduce_to_well_defined(t, ((0.0, 5.0, 5.0 + 1e-12),)).pairs == ((0, 1),)


@given(mdp_and_policy())
def test_reduction_properties(case):
    mdp, pi = case
    v = evaluate_policy(mdp, pi)
    q = q_values(mdp, pi, v)
    t = modification_set(mdp, pi, q=q, v=v)
    assert all(a != pi[s] for s, a in t)
    l = reduce_to_well_defined(t, q)
    assert l.well_defined and l.issubset(t) and l.states == t.states
    for s, a in l:
        assert all(q[s][a] >= q[s][b] for (s2, b) in t if s2 == s)


def test_modify():
    pi = (0, 1, 1)
    assert modify(pi, ModificationSet()) == pi
    assert modify(modify(pi, {(2, 0)}), {(2, pi[2])}) == pi
    assert modify((0, 1), [(1, 0)]) == (0, 0)
    with pytest.raises(ValueError):
        modify(pi, [(0, 1), (0, 2)])


# -- compare -----------------------------------------------------------------

def test_compare_examples(m2, m2c):
    assert compare(m2, (1, 0), (1, 0)) is E
    assert compare(m2, (1, 0), (0, 1)) is B
    assert compare(m2, (0, 1), (1, 0)) is W
    assert compare(m2, (0, 1), (1, 1)) is E
    assert compare(m2c, (0, 0), (1, 1)) is I


def test_compare_float_tolerance():
    assert compare_values((1.0, 2.0), (1.0 + 1e-12, 2.0)) is E
    assert compare_values((1.0, 2.0), (1.0 - 1e-6, 2.0)) is B


@given(small_mdps(max_n=2))
def test_compare_antisymmetric_and_transitive(mdp):
    pols = list(itertools.product(range(mdp.k), repeat=mdp.n))
    vals = {p: evaluate_policy(mdp, p) for p in pols}
    rel = {(a, b): compare_values(vals[a], vals[b]) for a in pols for b in pols}
    for (a, b), c in rel.items():
        assert rel[b, a] is c.flip()
    for a, b, c in itertools.product(pols, repeat=3):
        if rel[a, b] is B and rel[b, c] is B:
            assert rel[a, c] is B


@settings(max_examples=60)
@given(mdp_and_policy())
def test_any_nonempty_improvement_subset_is_better(case):
    mdp, pi = case
    v = evaluate_policy(mdp, pi)
    q = q_values(mdp, pi, v)
    l = reduce_to_well_defined(modification_set(mdp, pi, q=q, v=v), q)
    for mask in range(1, 1 << len(l)):
        assert compare(mdp, modify(pi, l.subset(mask)), pi) is B


@given(mdp_and_policy())
def test_single_state_changes_are_comparable(case):
    mdp, pi = case
    for s in range(mdp.n):
        for b in range(mdp.k):
            other = pi[:s] + (b,) + pi[s + 1:]
            assert compare(mdp, pi, other) is not I


@given(small_mdps(max_n=3))
def test_suboptimal_policies_have_improvements(mdp):
    pols = list(itertools.product(range(mdp.k), repeat=mdp.n))
    vals = {p: evaluate_policy(mdp, p) for p in pols}
    best = tuple(max(v[s] for v in vals.values()) for s in range(mdp.n))
    for p in pols:
        assert (vals[p] != best) == bool(modification_set(mdp, p, v=vals[p]))
