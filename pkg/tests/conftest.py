from fractions import Fraction

import pytest
from hypothesis import strategies as st

from policyiter import Mdp, builtin_instance


@pytest.fixture
def m2():
    return builtin_instance("M2")


@pytest.fixture
def m2c():
    return builtin_instance("M2c")


@st.composite
def small_mdps(draw, max_n=3, max_k=3, min_k=1):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(min_k, max_k))
    P, R = [], []
    for _ in range(n):
        ps, rs = [], []
        for _ in range(k):
            w = draw(st.lists(st.integers(0, 4), min_size=n, max_size=n).filter(any))
            ps.append([Fraction(x, sum(w)) for x in w])
            rs.append(Fraction(draw(st.integers(-3, 3))))
        P.append(ps)
        R.append(rs)
    gamma = draw(st.sampled_from([Fraction(0), Fraction(1, 2), Fraction(9, 10), Fraction(99, 100)]))
    return Mdp(P=P, R=R, gamma=gamma)


@st.composite
def mdp_and_policy(draw, **kw):
    mdp = draw(small_mdps(**kw))
    pi = tuple(draw(st.integers(0, mdp.k - 1)) for _ in range(mdp.n))
    return mdp, pi
