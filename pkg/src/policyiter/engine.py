"""The general policy-iteration loop with pluggable selection.

Each iteration evaluates the current policy, builds its modification set T,
reduces it to one switch per state (L), asks the strategy for a nonempty
subset U of L and applies it. Every step is recorded in a :class:`Trace`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .mdp import (
    Mdp,
    ModificationSet,
    Policy,
    ValueFunction,
    check_policy,
    ensure_valid,
    evaluate_policy,
    modification_set,
    modify,
    q_values,
    reduce_to_well_defined,
)
from .rng import RNG_ALGORITHM, Rng

MAX_ITER_CAP = 10**7
TRACE_VERSION = "1"


class SequentialRule(enum.Enum):
    LOWEST_STATE = "lowest"
    HIGHEST_STATE = "highest"
    RANDOM_SINGLETON = "random"


@dataclass(frozen=True)
class Greedy:
    @property
    def label(self) -> str:
        return "greedy"


@dataclass(frozen=True)
class Random:
    seed: int

    @property
    def label(self) -> str:
        return "random"


@dataclass(frozen=True)
class Sequential:
    rule: SequentialRule = SequentialRule.LOWEST_STATE
    seed: Optional[int] = None

    def __post_init__(self):
        if self.rule is SequentialRule.RANDOM_SINGLETON and self.seed is None:
            raise ValueError("the random-singleton rule needs an explicit seed")

    @property
    def label(self) -> str:
        return f"sequential-{self.rule.value}"


Strategy = Union[Greedy, Random, Sequential]


def _require_nonempty(l: ModificationSet) -> None:
    if not l:
        raise ValueError("selection needs a nonempty modification set")
    if not l.well_defined:
        raise ValueError(f"selection needs a well-defined set, got {l}")


def select_greedy(l: ModificationSet) -> ModificationSet:
    _require_nonempty(l)
    return l


def select_random(l: ModificationSet, rng: Rng) -> Tuple[ModificationSet, int]:
    """Uniform nonempty subset of ``l``; returns it with the number of empty redraws."""
    _require_nonempty(l)
    resamples = 0
    while True:
        mask = rng.bits(len(l))
        if mask:
            return l.subset(mask), resamples
        resamples += 1


def select_sequential(l: ModificationSet, rule: SequentialRule, rng: Optional[Rng] = None) -> ModificationSet:
    _require_nonempty(l)
    if rule is SequentialRule.LOWEST_STATE:
        pair = l.pairs[0]
    elif rule is SequentialRule.HIGHEST_STATE:
        pair = l.pairs[-1]
    else:
        if rng is None:
            raise ValueError("random singleton selection needs a generator")
        pair = l.pairs[rng.below(len(l))]
    return ModificationSet((pair,))


@dataclass(frozen=True)
class IterationRecord:
    index: int
    policy: Policy
    value: ValueFunction
    t_set: ModificationSet
    l_set: ModificationSet
    selected: ModificationSet
    resamples: int = 0


@dataclass
class Trace:
    records: List[IterationRecord]
    final_policy: Policy
    final_value: ValueFunction
    terminated: bool
    strategy: str = ""
    rng_algorithm: str = RNG_ALGORITHM
    final_t_set: ModificationSet = field(default_factory=ModificationSet)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def policies(self) -> List[Policy]:
        """Every visited policy, final one included."""
        return [r.policy for r in self.records] + [self.final_policy]

    @property
    def t_sets(self) -> List[ModificationSet]:
        return [r.t_set for r in self.records] + [self.final_t_set]

    @property
    def resamples_total(self) -> int:
        return sum(r.resamples for r in self.records)


def default_max_iter(mdp: Mdp) -> int:
    return min(2 * mdp.k**mdp.n, MAX_ITER_CAP)


def run_policy_iteration(mdp: Mdp, pi0, strategy: Strategy, max_iter: Optional[int] = None) -> Trace:
    ensure_valid(mdp)
    pi = check_policy(mdp, pi0)
    if max_iter is None:
        max_iter = default_max_iter(mdp)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    rng = None
    if isinstance(strategy, Random):
        rng = Rng(strategy.seed)
    elif isinstance(strategy, Sequential) and strategy.seed is not None:
        rng = Rng(strategy.seed)

    records: List[IterationRecord] = []
    while True:
        v = evaluate_policy(mdp, pi)
        q = q_values(mdp, pi, v)
        t = modification_set(mdp, pi, q=q, v=v)
        if not t or len(records) >= max_iter:
            break
        l = reduce_to_well_defined(t, q)
        resamples = 0
        if isinstance(strategy, Greedy):
            u = select_greedy(l)
        elif isinstance(strategy, Random):
            u, resamples = select_random(l, rng)
        elif isinstance(strategy, Sequential):
            u = select_sequential(l, strategy.rule, rng)
        else:
            raise TypeError(f"unknown strategy {strategy!r}")
        records.append(IterationRecord(len(records), pi, v, t, l, u, resamples))
        pi = modify(pi, u)

    return Trace(
        records=records,
        final_policy=pi,
        final_value=v,
        terminated=not t,
        strategy=strategy.label,
        final_t_set=t,
    )


# -- trace log -----------------------------------------------------------

def policy_text(pi: Policy) -> str:
    if all(a < 10 for a in pi):
        return "".join(map(str, pi))
    return ".".join(map(str, pi))


def parse_policy_text(text: str) -> Policy:
    text = text.strip()
    if "." in text or "," in text:
        return tuple(int(x) for x in text.replace(",", ".").split("."))
    if not text.isdigit():
        raise ValueError(f"not a policy string: {text!r}")
    return tuple(int(c) for c in text)


def _scalar_text(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def trace_to_text(trace: Trace) -> str:
    """Line-oriented log: a header, one line per iteration, one final line."""
    lines = [
        f"# trace {TRACE_VERSION} strategy={trace.strategy} rng={trace.rng_algorithm}",
        "# iter policy |T| |L| selected resamples",
    ]
    for r in trace.records:
        lines.append(
            f"{r.index} {policy_text(r.policy)} {len(r.t_set)} {len(r.l_set)} {r.selected} {r.resamples}"
        )
    value = ",".join(_scalar_text(x) for x in trace.final_value)
    lines.append(
        f"final {policy_text(trace.final_policy)} terminated={int(trace.terminated)}"
        f" iterations={trace.iterations} value={value}"
    )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LogRow:
    index: int
    policy: Policy
    t_size: int
    l_size: int
    selected: Tuple[Tuple[int, int], ...]
    resamples: int


def parse_trace_text(text: str) -> Tuple[List[LogRow], Policy, bool]:
    """Read back the iteration rows, final policy and terminated flag of a log."""
    rows, final = [], None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if toks[0] == "final":
            final = (parse_policy_text(toks[1]), toks[2] == "terminated=1")
            continue
        sel = tuple(
            tuple(int(x) for x in p.split(":")) for p in toks[4].strip("{}").split(",") if p
        )
        rows.append(LogRow(int(toks[0]), parse_policy_text(toks[1]), int(toks[2]), int(toks[3]), sel, int(toks[5])))
    if final is None:
        raise ValueError("trace log has no final line")
    return rows, final[0], final[1]
