"""Finite discounted MDPs, policy evaluation and the policy partial order.

Every numeric quantity lives in one of two arithmetic modes: exact
(``fractions.Fraction``) or float. An :class:`Mdp` is in exact mode when its
discount is a Fraction; all derived values inherit that mode. Float mode uses
a single tolerance, :data:`TOL`, for every equality and strict-inequality
decision.

Policies are plain tuples of action indices, value functions are tuples of
per-state values and Q-functions are tuples of per-state rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple, Union

from .linalg import solve

Scalar = Union[Fraction, float]
Policy = Tuple[int, ...]
ValueFunction = Tuple[Scalar, ...]
QFunction = Tuple[Tuple[Scalar, ...], ...]
Pair = Tuple[int, int]

TOL = 1e-9
ROW_SUM_TOL = 1e-12


class InvalidMdpError(ValueError):
    pass


def _exact_scalar(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError(f"float {x!r} not allowed in an exact MDP")
    return Fraction(x)


@dataclass(frozen=True)
class Mdp:
    """The tuple (S, A, P, R) plus a discount.

    ``P[s][a][t]`` is the probability of moving to ``t`` when taking ``a`` in
    ``s``; ``R[s][a]`` is the expected immediate reward. Construction only
    normalises containers to tuples; use :func:`validate_mdp` to check it.
    """

    P: tuple
    R: tuple
    gamma: Scalar

    def __post_init__(self):
        object.__setattr__(self, "P", tuple(tuple(tuple(row) for row in ps) for ps in self.P))
        object.__setattr__(self, "R", tuple(tuple(rs) for rs in self.R))

    @classmethod
    def exact(cls, P, R, gamma) -> "Mdp":
        """Build an exact-mode MDP, coercing ints/strings/Fractions to Fraction."""
        return cls(
            P=[[[_exact_scalar(x) for x in row] for row in ps] for ps in P],
            R=[[_exact_scalar(x) for x in rs] for rs in R],
            gamma=_exact_scalar(gamma),
        )

    @property
    def n(self) -> int:
        return len(self.R)

    @property
    def k(self) -> int:
        return len(self.R[0]) if self.R else 0

    @property
    def is_exact(self) -> bool:
        return isinstance(self.gamma, Fraction)

    def to_float(self) -> "Mdp":
        return Mdp(
            P=[[[float(x) for x in row] for row in ps] for ps in self.P],
            R=[[float(x) for x in rs] for rs in self.R],
            gamma=float(self.gamma),
        )


def validate_mdp(mdp: Mdp) -> List[str]:
    """Return a description of every violated MDP invariant (empty if valid)."""
    out: List[str] = []
    n, k = mdp.n, mdp.k
    if n < 1:
        out.append("n must be >= 1")
    if k < 1:
        out.append("k must be >= 1")
    if out:
        return out

    exact = mdp.is_exact
    want = Fraction if exact else float
    if not isinstance(mdp.gamma, (Fraction, float)):
        out.append(f"gamma has unsupported type {type(mdp.gamma).__name__}")
    elif not (0 <= mdp.gamma < 1):
        out.append(f"gamma={mdp.gamma} must satisfy 0 <= gamma < 1")

    if len(mdp.P) != n:
        out.append(f"P has {len(mdp.P)} state blocks, expected {n}")
        return out
    for s in range(n):
        if len(mdp.R[s]) != k:
            out.append(f"R row s={s} has {len(mdp.R[s])} actions, expected {k}")
        for a, r in enumerate(mdp.R[s]):
            if not isinstance(r, want):
                out.append(f"R(s={s},a={a}) is {type(r).__name__}, mode needs {want.__name__}")
        if len(mdp.P[s]) != k:
            out.append(f"P block s={s} has {len(mdp.P[s])} actions, expected {k}")
            continue
        for a in range(k):
            row = mdp.P[s][a]
            if len(row) != n:
                out.append(f"P row (s={s},a={a}) has length {len(row)}, expected {n}")
                continue
            for t, p in enumerate(row):
                if not isinstance(p, want):
                    out.append(f"P(s'={t}|s={s},a={a}) is {type(p).__name__}, mode needs {want.__name__}")
                elif not (0 <= p <= 1):
                    out.append(f"P(s'={t}|s={s},a={a})={p} outside [0,1]")
            total = sum(row)
            if (total != 1) if exact else (abs(total - 1) > ROW_SUM_TOL):
                out.append(f"P row (s={s},a={a}) sums to {total}, expected 1")
    return out


def ensure_valid(mdp: Mdp) -> None:
    problems = validate_mdp(mdp)
    if problems:
        raise InvalidMdpError("; ".join(problems))


def check_policy(mdp: Mdp, pi: Sequence[int]) -> Policy:
    pi = tuple(pi)
    if len(pi) != mdp.n:
        raise ValueError(f"policy has {len(pi)} entries, MDP has {mdp.n} states")
    for s, a in enumerate(pi):
        if not (0 <= a < mdp.k):
            raise ValueError(f"action {a} at state {s} outside 0..{mdp.k - 1}")
    return pi


def evaluate_policy(mdp: Mdp, pi: Policy) -> ValueFunction:
    """Solve (I - gamma P_pi) V = R_pi."""
    n, g = mdp.n, mdp.gamma
    one = Fraction(1) if mdp.is_exact else 1.0
    zero = one - one
    matrix = []
    for s in range(n):
        row = mdp.P[s][pi[s]]
        matrix.append([(one if s == t else zero) - g * row[t] for t in range(n)])
    rhs = [mdp.R[s][pi[s]] for s in range(n)]
    return tuple(solve(matrix, rhs))


def bellman_residual(mdp: Mdp, pi: Policy, v: ValueFunction) -> Scalar:
    """Max-norm of V - (R_pi + gamma P_pi V)."""
    res = []
    for s in range(mdp.n):
        a = pi[s]
        backup = mdp.R[s][a] + mdp.gamma * sum(p * x for p, x in zip(mdp.P[s][a], v))
        res.append(abs(v[s] - backup))
    return max(res)


def q_values(mdp: Mdp, pi: Policy, v: ValueFunction) -> QFunction:
    g = mdp.gamma
    return tuple(
        tuple(mdp.R[s][a] + g * sum(p * x for p, x in zip(mdp.P[s][a], v)) for a in range(mdp.k))
        for s in range(mdp.n)
    )


def _exact(x) -> bool:
    return isinstance(x, Fraction)


def gt(x: Scalar, y: Scalar) -> bool:
    """Strict ``x > y``; in float mode the gap must exceed TOL."""
    if _exact(x) and _exact(y):
        return x > y
    return x - y > TOL


def eq(x: Scalar, y: Scalar) -> bool:
    if _exact(x) and _exact(y):
        return x == y
    return abs(x - y) <= TOL


@dataclass(frozen=True)
class ModificationSet:
    """A set of (state, action) switches, kept sorted for deterministic order."""

    pairs: Tuple[Pair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(sorted(set(map(tuple, self.pairs)))))

    @property
    def states(self) -> frozenset:
        return frozenset(s for s, _ in self.pairs)

    @property
    def well_defined(self) -> bool:
        return len(self.states) == len(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def __bool__(self):
        return bool(self.pairs)

    def issubset(self, other: "ModificationSet") -> bool:
        return set(self.pairs) <= set(other.pairs)

    def subset(self, mask: int) -> "ModificationSet":
        """Sub-selection by bitmask; bit i picks ``pairs[i]``."""
        return ModificationSet(tuple(p for i, p in enumerate(self.pairs) if mask >> i & 1))

    def __str__(self):
        return "{" + ",".join(f"{s}:{a}" for s, a in self.pairs) + "}"


def modification_set(mdp: Mdp, pi: Policy, q: QFunction = None, v: ValueFunction = None) -> ModificationSet:
    """All (s, a) with Q(s, a) strictly greater than V(s)."""
    if v is None:
        v = evaluate_policy(mdp, pi)
    if q is None:
        q = q_values(mdp, pi, v)
    return ModificationSet(
        tuple((s, a) for s in range(mdp.n) for a in range(mdp.k) if a != pi[s] and gt(q[s][a], v[s]))
    )


def reduce_to_well_defined(t: ModificationSet, q: QFunction) -> ModificationSet:
    """Keep one pair per state: the max-Q action, lowest index on ties."""
    best = {}
    for s, a in t.pairs:  # ascending action within a state
        if s not in best or gt(q[s][a], q[s][best[s]]):
            best[s] = a
    return ModificationSet(tuple(best.items()))


def modify(pi: Policy, u: Iterable[Pair]) -> Policy:
    u = u if isinstance(u, ModificationSet) else ModificationSet(tuple(u))
    if not u.well_defined:
        raise ValueError(f"modification set {u} names a state more than once")
    out = list(pi)
    for s, a in u.pairs:
        out[s] = a
    return tuple(out)


class Comparison(enum.Enum):
    BETTER = "better"
    WORSE = "worse"
    EQUIVALENT = "equivalent"
    INCOMPARABLE = "incomparable"

    def flip(self) -> "Comparison":
        return _FLIP[self]


_FLIP = {
    Comparison.BETTER: Comparison.WORSE,
    Comparison.WORSE: Comparison.BETTER,
    Comparison.EQUIVALENT: Comparison.EQUIVALENT,
    Comparison.INCOMPARABLE: Comparison.INCOMPARABLE,
}


def compare_values(v1: ValueFunction, v2: ValueFunction) -> Comparison:
    up = down = False
    for x, y in zip(v1, v2):
        if gt(x, y):
            up = True
        elif gt(y, x):
            down = True
    if up and down:
        return Comparison.INCOMPARABLE
    if up:
        return Comparison.BETTER
    if down:
        return Comparison.WORSE
    return Comparison.EQUIVALENT


def compare(mdp: Mdp, pi1: Policy, pi2: Policy) -> Comparison:
    """Where pi1 sits relative to pi2 in the policy partial order."""
    return compare_values(evaluate_policy(mdp, pi1), evaluate_policy(mdp, pi2))
