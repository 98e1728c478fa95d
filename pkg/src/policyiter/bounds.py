"""Closed-form iteration-count bounds for policy iteration."""

from __future__ import annotations

import math

BOUND_NAMES = ("greedy", "greedy-multi", "random", "random-multi", "trivial")


def greedy_two_action(n: int) -> float:
    return 6 * 2**n / n


def greedy_multi(n: int, k: int) -> float:
    return 13 * k**n / n


def random_two_action(n: int) -> float:
    return 2 ** (0.78 * n)


def random_multi(n: int, k: int) -> float:
    return 17 * ((k / 2) * (1 + 2 / math.log2(k))) ** n


def trivial(n: int, k: int) -> float:
    return float(k**n)


def eval_bounds(n: int, k: int, strategy: str) -> float:
    if n < 1 or k < 2:
        raise ValueError("bounds need n >= 1 and k >= 2")
    if strategy == "greedy":
        return greedy_two_action(n)
    if strategy == "greedy-multi":
        return greedy_multi(n, k)
    if strategy == "random":
        return random_two_action(n)
    if strategy == "random-multi":
        return random_multi(n, k)
    if strategy == "trivial":
        return trivial(n, k)
    raise ValueError(f"unsupported bound {strategy!r}; choose from {', '.join(BOUND_NAMES)}")


def bound_for(strategy_label: str, n: int, k: int) -> str:
    """Which bound applies to a run of the given strategy on an n-state, k-action MDP."""
    if strategy_label == "greedy":
        return "greedy" if k == 2 else "greedy-multi"
    if strategy_label == "random":
        return "random" if k == 2 else "random-multi"
    return "trivial"
