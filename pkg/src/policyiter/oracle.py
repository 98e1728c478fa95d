"""Brute-force ground truth over the whole policy space.

A :class:`PolicyOrder` evaluates all k**n policies once and answers order
queries from those values. The ``verify_*`` functions check structural facts
about policy iteration on concrete instances and return a
:class:`LemmaReport` listing any counterexample found. They all insist on
exact arithmetic: a float tolerance can invent or hide a strict inequality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence

from .engine import Trace
from .mdp import (
    Comparison,
    Mdp,
    ModificationSet,
    Policy,
    ValueFunction,
    compare_values,
    evaluate_policy,
    modification_set,
    modify,
    q_values,
    reduce_to_well_defined,
)

DEFAULT_CAP = 2**20
LATTICE_CAP = 20
THEOREM1_CAP = 12
COROLLARY10_CAP = 12

B, W, E, I = Comparison.BETTER, Comparison.WORSE, Comparison.EQUIVALENT, Comparison.INCOMPARABLE


class EnumerationCapError(ValueError):
    pass


class InstanceMismatchError(ValueError):
    pass


def _check_cap(count: int, cap: int) -> None:
    if count > cap:
        raise EnumerationCapError(f"{count} policies exceed the enumeration cap {cap}")


def enumerate_policies(n: int, k: int, cap: int = DEFAULT_CAP) -> List[Policy]:
    _check_cap(k**n, cap)
    return list(itertools.product(range(k), repeat=n))


def _require_exact(mdp: Mdp) -> None:
    if not mdp.is_exact:
        raise ValueError("verification runs in exact arithmetic only")


class PolicyOrder:
    """All policies of an MDP, their values, and the pairwise relation.

    ``relation[i][j]`` says how policy i compares to policy j. It is filled on
    first access, so computing only the optimum stays O(k**n).
    """

    def __init__(self, mdp: Mdp, cap: int = DEFAULT_CAP):
        self.mdp = mdp
        self.policies = enumerate_policies(mdp.n, mdp.k, cap)
        self.values: List[ValueFunction] = [evaluate_policy(mdp, p) for p in self.policies]

    def __len__(self):
        return len(self.policies)

    def index(self, pi: Sequence[int]) -> int:
        """Position of ``pi`` in lexicographic order (a base-k numeral)."""
        k = self.mdp.k
        i = 0
        for a in pi:
            i = i * k + a
        return i

    def value(self, pi: Sequence[int]) -> ValueFunction:
        return self.values[self.index(pi)]

    @cached_property
    def relation(self) -> List[List[Comparison]]:
        m = len(self.policies)
        rel = [[E] * m for _ in range(m)]
        for i in range(m):
            vi = self.values[i]
            for j in range(i + 1, m):
                c = compare_values(vi, self.values[j])
                rel[i][j] = c
                rel[j][i] = c.flip()
        return rel

    @cached_property
    def above(self) -> List[int]:
        """Bitmask per policy of the policies strictly better than it."""
        out = []
        for j in range(len(self.policies)):
            mask = 0
            for i, row in enumerate(self.relation):
                if row[j] is B:
                    mask |= 1 << i
            out.append(mask)
        return out

    def cmp(self, pi1, pi2) -> Comparison:
        return self.relation[self.index(pi1)][self.index(pi2)]


def build_policy_order(mdp: Mdp, cap: int = DEFAULT_CAP) -> PolicyOrder:
    order = PolicyOrder(mdp, cap)
    order.relation
    return order


def optimal_value(order: PolicyOrder) -> ValueFunction:
    """Componentwise maximum over all policies; asserts one policy attains it."""
    n = order.mdp.n
    best = tuple(max(v[s] for v in order.values) for s in range(n))
    if not any(v == best for v in order.values):
        raise AssertionError("no single policy attains the componentwise maximum")
    return best


def optimal_policies(order: PolicyOrder) -> List[Policy]:
    best = optimal_value(order)
    return [p for p, v in zip(order.policies, order.values) if v == best]


def count_between(order: PolicyOrder, lo: Policy, hi: Policy) -> int:
    """Number of policies p with hi better-or-equivalent to p and p strictly better than lo."""
    rel = order.relation
    h, l = order.index(hi), order.index(lo)
    return sum(1 for p in range(len(order)) if rel[h][p] in (B, E) and rel[p][l] is B)


def modification_lattice(mdp: Mdp, pi: Policy, l: ModificationSet) -> List[Policy]:
    """``modify(pi, U)`` for every U subset of ``l``, indexed by bitmask."""
    if not l.well_defined:
        raise ValueError("lattice needs a well-defined modification set")
    if len(l) > LATTICE_CAP:
        raise EnumerationCapError(f"|L|={len(l)} exceeds lattice cap {LATTICE_CAP}")
    return [modify(pi, l.subset(mask)) for mask in range(1 << len(l))]


def l_set(mdp: Mdp, pi: Policy) -> ModificationSet:
    v = evaluate_policy(mdp, pi)
    q = q_values(mdp, pi, v)
    return reduce_to_well_defined(modification_set(mdp, pi, q=q, v=v), q)


# -- reports -------------------------------------------------------------

@dataclass
class LemmaReport:
    lemma_id: str
    instances_checked: int = 0
    checks: int = 0
    violations: List[Dict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def merge(self, other: "LemmaReport") -> "LemmaReport":
        if other.lemma_id != self.lemma_id:
            raise ValueError("cannot merge reports for different lemmas")
        self.instances_checked += other.instances_checked
        self.checks += other.checks
        self.violations.extend(other.violations)
        self.notes.extend(other.notes)
        return self

    def to_text(self, max_witnesses: int = 20) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"lemma={self.lemma_id} status={status} instances={self.instances_checked}"
            f" checks={self.checks} violations={len(self.violations)}"
        ]
        for w in self.violations[:max_witnesses]:
            lines.append("  witness " + " ".join(f"{k}={_witness_text(v)}" for k, v in w.items()))
        if len(self.violations) > max_witnesses:
            lines.append(f"  ... {len(self.violations) - max_witnesses} more")
        for note in sorted(set(self.notes)):
            lines.append(f"  note {note}")
        return "\n".join(lines)


def _witness_text(v) -> str:
    if isinstance(v, tuple) and all(isinstance(a, int) for a in v):
        return "".join(map(str, v)) if all(a < 10 for a in v) else ".".join(map(str, v))
    if isinstance(v, (set, frozenset)):
        return "{" + ",".join(map(str, sorted(v))) + "}"
    return str(v).replace(" ", "")


def _report(lemma_id: str, checks: int, violations: List[Dict], instances: int = 1) -> LemmaReport:
    return LemmaReport(lemma_id, instances, checks, violations)


# -- verifiers -----------------------------------------------------------

def verify_theorem1(mdp: Mdp, pi: Policy, order: Optional[PolicyOrder] = None, seed=None) -> LemmaReport:
    """Every nonempty U within L makes modify(pi, U) strictly better than pi."""
    _require_exact(mdp)
    l = l_set(mdp, pi)
    if len(l) > THEOREM1_CAP:
        raise EnumerationCapError(f"|L|={len(l)} exceeds cap {THEOREM1_CAP}")
    value = order.value if order is not None else (lambda p: evaluate_policy(mdp, p))
    base = value(pi)
    bad = []
    for mask in range(1, 1 << len(l)):
        u = l.subset(mask)
        c = compare_values(value(modify(pi, u)), base)
        if c is not B:
            bad.append({"seed": seed, "pi": pi, "U": str(u), "got": c.value})
    return _report("theorem1", (1 << len(l)) - 1, bad)


def verify_theorem2(order: PolicyOrder, seed=None) -> LemmaReport:
    """A policy has an empty modification set exactly when it is optimal."""
    _require_exact(order.mdp)
    best = optimal_value(order)
    bad = []
    for pi, v in zip(order.policies, order.values):
        t = modification_set(order.mdp, pi, v=v)
        if (v != best) != bool(t):
            bad.append({"seed": seed, "pi": pi, "optimal": v == best, "T": str(t)})
    return _report("theorem2", len(order), bad)


def verify_lemma3(mdp: Mdp, order: Optional[PolicyOrder] = None, seed=None) -> LemmaReport:
    """Policies that differ in one state are always comparable."""
    _require_exact(mdp)
    order = order or build_policy_order(mdp)
    rel = order.relation
    bad, checks = [], 0
    for pi in order.policies:
        i = order.index(pi)
        for s in range(mdp.n):
            for b in range(mdp.k):
                if b == pi[s]:
                    continue
                other = pi[:s] + (b,) + pi[s + 1:]
                checks += 1
                if rel[i][order.index(other)] is I:
                    bad.append({"seed": seed, "pi": pi, "other": other})
    return _report("lemma3", checks, bad)


def verify_lemma4(mdp: Mdp, pi: Policy, order: Optional[PolicyOrder] = None, cap: int = DEFAULT_CAP,
                  seed=None) -> LemmaReport:
    """pi is at least as good as every policy agreeing with it on states(T)."""
    _require_exact(mdp)
    fixed = modification_set(mdp, pi).states
    free = [s for s in range(mdp.n) if s not in fixed]
    _check_cap(mdp.k ** len(free), cap)
    value = order.value if order is not None else (lambda p: evaluate_policy(mdp, p))
    base = value(pi)
    bad, checks = [], 0
    for choice in itertools.product(range(mdp.k), repeat=len(free)):
        other = list(pi)
        for s, a in zip(free, choice):
            other[s] = a
        other = tuple(other)
        checks += 1
        c = compare_values(base, value(other))
        if c not in (B, E):
            bad.append({"seed": seed, "pi": pi, "other": other, "got": c.value})
    return _report("lemma4", checks, bad)


def _require_two_actions(k: int) -> None:
    if k > 2:
        raise ValueError("lemma5 holds for two-action MDPs only; use lemma12 for k > 2")


def verify_lemma5(trace: Trace, k: int, seed=None) -> LemmaReport:
    """No later iteration's switch-state set contains an earlier one."""
    _require_two_actions(k)
    sets = [t.states for t in trace.t_sets]
    bad, checks = [], 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            checks += 1
            if sets[i] <= sets[j]:
                bad.append({"seed": seed, "strategy": trace.strategy, "i": i, "j": j, "states_i": sets[i]})
    return _report("lemma5", checks, bad)


def verify_lemma12(trace: Trace, seed=None) -> LemmaReport:
    policies, sets = trace.policies, [t.states for t in trace.t_sets]
    bad, checks = [], 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            checks += 1
            if sets[i] <= sets[j] and all(policies[i][s] == policies[j][s] for s in sets[i]):
                bad.append({"seed": seed, "strategy": trace.strategy, "i": i, "j": j, "states_i": sets[i]})
    return _report("lemma12", checks, bad)


def verify_lemma6(mdp: Mdp, pi: Policy, order: PolicyOrder, seed=None) -> LemmaReport:
    """Applying all of L rules out at least |L| policies.

    Uses the well-defined reduction L, which equals T whenever T is well defined.
    """
    _require_exact(mdp)
    l = l_set(mdp, pi)
    if not l:
        return _report("lemma6", 0, [])
    got = count_between(order, pi, modify(pi, l))
    bad = [] if got >= len(l) else [{"seed": seed, "pi": pi, "L": str(l), "between": got}]
    return _report("lemma6", 1, bad)


def lemma9_stats(order: PolicyOrder):
    """(mean number strictly above, sum of above-counts, sum of below-counts)."""
    rel = order.relation
    m = len(order)
    up = sum(1 for i in range(m) for j in range(m) if rel[i][j] is B)
    down = sum(1 for i in range(m) for j in range(m) if rel[j][i] is W)
    return Fraction(up, m), up, down


def verify_lemma9(order: PolicyOrder, seed=None) -> LemmaReport:
    _require_exact(order.mdp)
    mean, up, down = lemma9_stats(order)
    bad = []
    if mean > Fraction(len(order), 2):
        bad.append({"seed": seed, "mean_above": mean, "half": Fraction(len(order), 2)})
    if up != down:
        bad.append({"seed": seed, "sum_above": up, "sum_below": down})
    return _report("lemma9", 2, bad)


def lattice_not_above_mean(order: PolicyOrder, lattice: Sequence[Policy]) -> Fraction:
    """Mean over r in the lattice of |{s in lattice : s not strictly better than r}|."""
    rel = order.relation
    idx = [order.index(p) for p in lattice]
    total = sum(1 for r in idx for s in idx if rel[s][r] is not B)
    return Fraction(total, len(idx))


def verify_corollary10(mdp: Mdp, pi: Policy, order: PolicyOrder, seed=None) -> LemmaReport:
    """Exact lattice form: mean not-above count over modify(pi, U), U within L, is >= 2**(|L|-1)."""
    _require_exact(mdp)
    l = l_set(mdp, pi)
    if not l:
        rep = _report("corollary10", 0, [])
        rep.notes.append("skipped policies with empty L")
        return rep
    if len(l) > COROLLARY10_CAP:
        raise EnumerationCapError(f"|L|={len(l)} exceeds cap {COROLLARY10_CAP}")
    mean = lattice_not_above_mean(order, modification_lattice(mdp, pi, l))
    bound = 2 ** (len(l) - 1)
    bad = [] if mean >= bound else [{"seed": seed, "pi": pi, "L": str(l), "mean": mean, "bound": bound}]
    return _report("corollary10", 1, bad)


def corollary10_literal_mean(mdp: Mdp, pi: Policy, order: PolicyOrder) -> Fraction:
    """Mean over U within L of |{p : modify(pi, U) > p > pi}|, strict on both sides."""
    l = l_set(mdp, pi)
    rel = order.relation
    lo = order.index(pi)
    total = 0
    for nxt in modification_lattice(mdp, pi, l):
        hi = order.index(nxt)
        total += sum(1 for p in range(len(order)) if rel[hi][p] is B and rel[p][lo] is B)
    return Fraction(total, 1 << len(l))


def verify_order(order: PolicyOrder, seed=None) -> LemmaReport:
    """Structural check that the relation table is a partial order modulo equivalence."""
    rel = order.relation
    m = len(order)
    bad = []
    for i in range(m):
        if rel[i][i] is not E:
            bad.append({"seed": seed, "i": i, "reflexive": rel[i][i].value})
        for j in range(m):
            if rel[i][j] is not rel[j][i].flip():
                bad.append({"seed": seed, "i": i, "j": j, "antisymmetry": rel[i][j].value})
    above = order.above
    equiv = [sum(1 << j for j in range(m) if rel[i][j] is E) for i in range(m)]
    for i in range(m):
        js = above[i]
        while js:
            j = (js & -js).bit_length() - 1
            js &= js - 1
            # everything above j must be above i
            if above[j] & ~above[i]:
                bad.append({"seed": seed, "i": i, "j": j, "transitivity": "better"})
        for j in range(m):
            if equiv[i] >> j & 1 and equiv[j] != equiv[i]:
                bad.append({"seed": seed, "i": i, "j": j, "transitivity": "equivalent"})
    return _report("order", m * m, bad)


def ruled_out_per_iteration(trace: Trace, order: PolicyOrder) -> List[int]:
    """For each step pi_i -> pi_{i+1}, the number of policies p with pi_{i+1} >= p > pi_i."""
    if len(trace.final_policy) != order.mdp.n:
        raise InstanceMismatchError("trace and order have different state counts")
    for r in trace.records:
        if any(a >= order.mdp.k for a in r.policy) or order.value(r.policy) != tuple(r.value):
            raise InstanceMismatchError(f"iteration {r.index} does not match the order's instance")
    pols = trace.policies
    return [count_between(order, pols[i], pols[i + 1]) for i in range(len(pols) - 1)]


def verify_trace(trace: Trace, order: PolicyOrder, seed=None) -> List[LemmaReport]:
    """Per-trace checks: strict ascent, no repeats, optimal termination, and for
    greedy traces the ruled-out count of at least |L| per step."""
    rel = order.relation
    pols = trace.policies
    idx = [order.index(p) for p in pols]
    ascent = []
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if rel[idx[j]][idx[i]] is not B:
                ascent.append({"seed": seed, "strategy": trace.strategy, "i": i, "j": j,
                               "got": rel[idx[j]][idx[i]].value})
    reports = [_report("ascent", len(idx) * (len(idx) - 1) // 2, ascent)]

    opt = []
    if trace.terminated and tuple(trace.final_value) != optimal_value(order):
        opt.append({"seed": seed, "strategy": trace.strategy, "final": trace.final_policy})
    if not trace.terminated:
        opt.append({"seed": seed, "strategy": trace.strategy, "terminated": False})
    reports.append(_report("optimality", 1, opt))

    if trace.strategy == "greedy":
        counts = ruled_out_per_iteration(trace, order)
        bad = [
            {"seed": seed, "i": r.index, "ruled_out": c, "L": len(r.l_set)}
            for r, c in zip(trace.records, counts)
            if c < max(1, len(r.l_set))
        ]
        reports.append(_report("ruled-out", len(counts), bad))
    return reports
