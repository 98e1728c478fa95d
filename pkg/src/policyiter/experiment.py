"""Seeded verification campaigns and iteration-count sweeps."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

from . import oracle
from .bounds import bound_for, eval_bounds
from .engine import Greedy, Random, Sequential, SequentialRule, Strategy, Trace, run_policy_iteration
from .instances import GenSpec, random_mdp
from .mdp import Mdp, Policy
from .rng import Rng

log = logging.getLogger(__name__)

CSV_VERSION = "1"
CSV_COLUMNS = (
    "seed", "n", "k", "gamma", "strategy", "start_policy", "iterations",
    "resamples_total", "max_t_size", "sum_ruled_out", "bound", "terminated",
)

ALL_LEMMAS = (
    "order", "theorem1", "theorem2", "lemma3", "lemma4", "lemma5", "lemma6",
    "lemma9", "lemma12", "corollary10", "ascent", "optimality", "ruled-out", "greedy-bound",
)


def start_policy(mdp: Mdp, rule: str, seed: int = 0) -> Policy:
    if rule == "zero":
        return (0,) * mdp.n
    if rule == "random":
        rng = Rng(seed, stream=1)
        return tuple(rng.below(mdp.k) for _ in range(mdp.n))
    raise ValueError(f"unknown start-policy rule {rule!r}")


def make_strategy(name: str, seed: int, rule: str = "lowest") -> Strategy:
    if name == "greedy":
        return Greedy()
    if name == "random":
        return Random(seed)
    if name == "sequential":
        r = SequentialRule(rule)
        return Sequential(r, seed if r is SequentialRule.RANDOM_SINGLETON else None)
    raise ValueError(f"unknown strategy {name!r}")


def fraction_text(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# -- verify --------------------------------------------------------------

def resolve_lemmas(spec: str, k: int) -> List[str]:
    """Expand ``all`` or a comma list; lemma5 is refused for k > 2."""
    if spec == "all":
        return [x for x in ALL_LEMMAS if not (x == "lemma5" and k > 2)]
    names = [x.strip() for x in spec.split(",") if x.strip()]
    unknown = [x for x in names if x not in ALL_LEMMAS]
    if unknown:
        raise ValueError(f"unknown lemma ids {unknown}; choose from {', '.join(ALL_LEMMAS)}")
    if "lemma5" in names and k > 2:
        raise ValueError("lemma5 holds for two-action MDPs only; use lemma12 for k > 2")
    return names


def campaign_traces(mdp: Mdp, seed: int) -> List[Trace]:
    """The runs inspected per verification instance."""
    zero = start_policy(mdp, "zero")
    rand = start_policy(mdp, "random", seed)
    runs = [
        (Greedy(), zero),
        (Greedy(), rand),
        (Random(seed), zero),
        (Random(seed + 1), rand),
        (Sequential(SequentialRule.LOWEST_STATE), zero),
        (Sequential(SequentialRule.HIGHEST_STATE), rand),
        (Sequential(SequentialRule.RANDOM_SINGLETON, seed), zero),
    ]
    return [run_policy_iteration(mdp, pi0, strat) for strat, pi0 in runs]


def verify_instance(mdp: Mdp, lemmas: Sequence[str], seed: int, cap: int = oracle.DEFAULT_CAP) -> Dict[str, oracle.LemmaReport]:
    order = oracle.build_policy_order(mdp, cap)
    reports: Dict[str, oracle.LemmaReport] = {}

    def add(rep):
        if rep.lemma_id in lemmas:
            if rep.lemma_id in reports:
                reports[rep.lemma_id].merge(rep)
            else:
                reports[rep.lemma_id] = rep

    wanted = set(lemmas)
    if "order" in wanted:
        add(oracle.verify_order(order, seed))
    if "theorem2" in wanted:
        add(oracle.verify_theorem2(order, seed))
    if "lemma3" in wanted:
        add(oracle.verify_lemma3(mdp, order, seed))
    if "lemma9" in wanted:
        add(oracle.verify_lemma9(order, seed))
    for pi in order.policies:
        if "theorem1" in wanted:
            add(oracle.verify_theorem1(mdp, pi, order, seed))
        if "lemma4" in wanted:
            add(oracle.verify_lemma4(mdp, pi, order, cap, seed))
        if "lemma6" in wanted:
            add(oracle.verify_lemma6(mdp, pi, order, seed))
        if "corollary10" in wanted:
            add(oracle.verify_corollary10(mdp, pi, order, seed))

    trace_lemmas = wanted & {"lemma5", "lemma12", "ascent", "optimality", "ruled-out", "greedy-bound"}
    if trace_lemmas:
        for trace in campaign_traces(mdp, seed):
            if "lemma5" in wanted:
                add(oracle.verify_lemma5(trace, mdp.k, seed))
            if "lemma12" in wanted:
                add(oracle.verify_lemma12(trace, seed))
            for rep in oracle.verify_trace(trace, order, seed):
                add(rep)
            if "greedy-bound" in wanted and trace.strategy == "greedy":
                add(greedy_bound_report(trace, mdp.n, mdp.k, seed))
    for rep in reports.values():
        rep.instances_checked = 1
    return reports


def greedy_bound_report(trace: Trace, n: int, k: int, seed=None) -> oracle.LemmaReport:
    """Greedy runs stay within 6*2^n/n (k=2, n>=3) and 13*k^n/n (any k>=2)."""
    bad, checks = [], 0
    if trace.terminated and k >= 2:
        limits = [("greedy-multi", eval_bounds(n, k, "greedy-multi"))]
        if k == 2 and n >= 3:
            limits.append(("greedy", eval_bounds(n, 2, "greedy")))
        for name, limit in limits:
            checks += 1
            if trace.iterations > limit:
                bad.append({"seed": seed, "bound": name, "iterations": trace.iterations, "limit": f"{limit:.6g}"})
    return oracle.LemmaReport("greedy-bound", 1, checks, bad)


def run_verify(n: int, k: int, instances: int, seed: int, lemmas: Sequence[str],
               gamma: Fraction = Fraction(9, 10), density: Fraction = Fraction(1, 2),
               cap: int = oracle.DEFAULT_CAP) -> List[oracle.LemmaReport]:
    """Run the selected verifiers over ``instances`` generated MDPs with seeds seed, seed+1, ..."""
    totals: Dict[str, oracle.LemmaReport] = {x: oracle.LemmaReport(x) for x in lemmas}
    for i in range(instances):
        s = seed + i
        mdp = random_mdp(GenSpec(n=n, k=k, seed=s, gamma=gamma, density=density))
        for name, rep in verify_instance(mdp, lemmas, s, cap).items():
            totals[name].merge(rep)
    return [totals[x] for x in lemmas]


# -- experiment ----------------------------------------------------------

@dataclass
class ExperimentRow:
    seed: int
    n: int
    k: int
    gamma: str
    strategy: str
    start_policy: str
    iterations: int
    resamples_total: int
    max_t_size: int
    sum_ruled_out: Optional[int]
    bound: float
    terminated: bool

    def cells(self) -> List[str]:
        return [
            str(self.seed), str(self.n), str(self.k), self.gamma, self.strategy, self.start_policy,
            str(self.iterations), str(self.resamples_total), str(self.max_t_size),
            "" if self.sum_ruled_out is None else str(self.sum_ruled_out),
            f"{self.bound:.6g}", "1" if self.terminated else "0",
        ]


def experiment_rows(n_values: Iterable[int], k: int, instances: int, strategy: str, seed: int,
                    use_oracle: bool = False, start_rule: str = "zero", rule: str = "lowest",
                    gamma: Fraction = Fraction(9, 10), density: Fraction = Fraction(1, 2)) -> List[ExperimentRow]:
    if k < 2:
        raise ValueError("experiments need k >= 2")
    n_values = list(n_values)
    rows = []
    for i in range(instances):
        s = seed + i
        for n in n_values:
            mdp = random_mdp(GenSpec(n=n, k=k, seed=s, gamma=gamma, density=density))
            strat = make_strategy(strategy, s, rule)
            trace = run_policy_iteration(mdp, start_policy(mdp, start_rule, s), strat)
            ruled = None
            if use_oracle:
                ruled = sum(oracle.ruled_out_per_iteration(trace, oracle.PolicyOrder(mdp)))
            bname = bound_for(trace.strategy, n, k)
            bound = eval_bounds(n, k, bname)
            row = ExperimentRow(
                seed=s, n=n, k=k, gamma=fraction_text(gamma), strategy=trace.strategy,
                start_policy=start_rule, iterations=trace.iterations,
                resamples_total=trace.resamples_total,
                max_t_size=max((len(r.t_set) for r in trace.records), default=0),
                sum_ruled_out=ruled, bound=bound, terminated=trace.terminated,
            )
            if row.terminated and row.iterations > bound and (k > 2 or n >= 3):
                log.warning("seed=%d n=%d k=%d %s: %d iterations exceed %s bound %.6g",
                            s, n, k, trace.strategy, row.iterations, bname, bound)
            rows.append(row)
    return rows


def rows_to_csv(rows: Sequence[ExperimentRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# policyiter experiment csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()
