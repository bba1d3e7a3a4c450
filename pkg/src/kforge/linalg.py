"""Exact rational linear solves used by operator fitting and p-solving.

All systems here are tiny (tens of unknowns), so plain fraction-based
Gauss-Jordan is both exact and fast enough.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import AmbiguousError, NoSolutionError


def solve_unique(
    rows: Sequence[Sequence[Fraction]],
    rhs: Sequence[Fraction],
    *,
    ambiguous_error: type[Exception] = AmbiguousError,
    inconsistent_error: type[Exception] = NoSolutionError,
) -> list[Fraction]:
    """Solve rows * x = rhs exactly, requiring a unique solution.

    Raises ambiguous_error when the solution space has positive dimension and
    inconsistent_error when the (generally overdetermined) system has no
    solution at all.
    """
    if not rows:
        raise ambiguous_error("empty system")
    ncols = len(rows[0])
    aug = [list(row) + [b] for row, b in zip(rows, rhs)]
    nrows = len(aug)
    piv = 0
    pivot_cols: list[int] = []
    for col in range(ncols):
        pr = None
        for i in range(piv, nrows):
            if aug[i][col] != 0:
                pr = i
                break
        if pr is None:
            continue
        aug[piv], aug[pr] = aug[pr], aug[piv]
        inv = aug[piv][col]
        aug[piv] = [v / inv for v in aug[piv]]
        for i in range(nrows):
            if i != piv and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[piv])]
        pivot_cols.append(col)
        piv += 1
    for i in range(piv, nrows):
        if aug[i][ncols] != 0:
            raise inconsistent_error("inconsistent linear system")
    if piv < ncols:
        raise ambiguous_error(
            f"solution space has dimension {ncols - piv}; supply more data"
        )
    sol = [Fraction(0)] * ncols
    for i, col in enumerate(pivot_cols):
        sol[col] = aug[i][ncols]
    return sol
