"""Dense linear solves over exact rationals or floats.

One elimination routine serves both arithmetic modes: entries are whatever
numeric type the caller passes in (``fractions.Fraction`` or ``float``), and
no conversion happens inside.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence

# Pivots smaller than this (float mode only) are treated as zero.
FLOAT_PIVOT_EPS = 1e-300


class SingularSystemError(ArithmeticError):
    """Raised when elimination meets a zero pivot column."""


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> List:
    """Solve ``matrix @ x = rhs`` by Gaussian elimination with partial pivoting.

    Exact when the entries are Fractions. Inputs are not modified.
    """
    n = len(matrix)
    if len(rhs) != n or any(len(row) != n for row in matrix):
        raise ValueError("matrix must be square and match rhs length")
    exact = n > 0 and isinstance(rhs[0], Fraction)
    a = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]

    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        p = a[pivot][col]
        if p == 0 or (not exact and abs(p) < FLOAT_PIVOT_EPS):
            raise SingularSystemError(f"zero pivot in column {col}")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
        prow = a[col]
        for r in range(col + 1, n):
            row = a[r]
            f = row[col]
            if f == 0:
                continue
            f = f / p
            for c in range(col, n + 1):
                row[c] -= f * prow[c]

    x = [None] * n
    for r in range(n - 1, -1, -1):
        row = a[r]
        acc = row[n]
        for c in range(r + 1, n):
            acc -= row[c] * x[c]
        x[r] = acc / row[r]
    return x
