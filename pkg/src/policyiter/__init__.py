"""Policy iteration variants for finite discounted MDPs, with a brute-force
oracle that checks their structural properties on small instances."""

from .engine import (
    Greedy,
    IterationRecord,
    Random,
    Sequential,
    SequentialRule,
    Trace,
    run_policy_iteration,
    select_greedy,
    select_random,
    select_sequential,
)
from .instances import GenSpec, builtin_instance, parse_mdp, random_mdp, serialize_mdp
from .mdp import (
    Comparison,
    Mdp,
    ModificationSet,
    compare,
    evaluate_policy,
    modification_set,
    modify,
    q_values,
    reduce_to_well_defined,
    validate_mdp,
)
from .oracle import PolicyOrder, build_policy_order, count_between, enumerate_policies, optimal_value

__version__ = "0.1.0"
