"""A small exact simplex over rationals for equality-form LPs.

Solves ``min c^T x  s.t.  A x = b, x >= 0`` with a two-phase tableau.
All values are exact rationals; pivots follow Bland's rule (smallest
eligible index enters, ratio ties broken by the smallest basic index),
which precludes cycling.  Rows are stored as integer cell vectors with
one shared positive denominator, so a pivot costs integer multiply-adds
plus a single gcd reduction per row.  Intended for the small systems
that arise as marking-equation relaxations, not as a general-purpose
solver.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .errors import InternalInvariantError


class Unbounded(InternalInvariantError):
    pass


def _normalize(cells: list[int], den: int) -> int:
    """Reduce a row by the gcd of its cells and denominator; keep den > 0."""
    if den < 0:
        den = -den
        cells[:] = [-v for v in cells]
    g = den
    for v in cells:
        if v:
            g = math.gcd(g, v)
            if g == 1:
                return den
    if g > 1:
        cells[:] = [v // g for v in cells]
        den //= g
    return den


class _Tableau:
    """Constraint rows plus a maintained reduced-cost row.

    ``rows[i][j] / dens[i]`` is the tableau entry, ``rows[i][-1]`` the
    right-hand side; ``obj[j] / obj_den`` is the reduced cost of column
    j and ``obj[-1] / obj_den`` the negated objective value.
    """

    def __init__(self, rows: list[list[int]], dens: list[int], basis: list[int]):
        self.rows = rows
        self.dens = dens
        self.basis = basis
        self.obj: list[int] = []
        self.obj_den = 1

    def set_costs(self, costs: Sequence[Fraction], width: int) -> None:
        vals = [Fraction(costs[j]) if j < len(costs) else Fraction(0) for j in range(width)]
        vals.append(Fraction(0))
        for i, bi in enumerate(self.basis):
            cb = costs[bi] if bi < len(costs) else Fraction(0)
            if cb:
                den = self.dens[i]
                row = self.rows[i]
                vals = [v - cb * Fraction(cell, den) if cell else v for v, cell in zip(vals, row)]
        den = 1
        for v in vals:
            den = den * v.denominator // math.gcd(den, v.denominator)
        self.obj = [int(v * den) for v in vals]
        self.obj_den = den

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        pden = _normalize(prow, prow[c])
        self.rows[r] = prow
        self.dens[r] = pden
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[c]
            if f:
                row[:] = [a * pden - f * b for a, b in zip(row, prow)]
                self.dens[i] = _normalize(row, self.dens[i] * pden)
        f = self.obj[c]
        if f:
            self.obj[:] = [a * pden - f * b for a, b in zip(self.obj, prow)]
            self.obj_den = _normalize(self.obj, self.obj_den * pden)
        self.basis[r] = c

    def run(self, width: int) -> None:
        """Bland-rule pivoting to optimality over columns [0, width)."""
        while True:
            entering = -1
            for j in range(width):
                if self.obj[j] < 0:
                    entering = j
                    break
            if entering < 0:
                return
            leaving = -1
            best_num = best_den = 0  # ratio best_num / best_den
            for i, row in enumerate(self.rows):
                coef = row[entering]
                if coef > 0:
                    # compare row[-1]/coef with current best by cross product
                    if leaving < 0 or row[-1] * best_den < best_num * coef or (
                        row[-1] * best_den == best_num * coef
                        and self.basis[i] < self.basis[leaving]
                    ):
                        best_num, best_den = row[-1], coef
                        leaving = i
            if leaving < 0:
                raise Unbounded("LP is unbounded below")
            self.pivot(leaving, entering)

    def objective_value(self) -> Fraction:
        return Fraction(-self.obj[-1], self.obj_den)

    def solution(self, n: int) -> list[Fraction]:
        x = [Fraction(0)] * n
        for i, bi in enumerate(self.basis):
            if bi < n:
                x[bi] = Fraction(self.rows[i][-1], self.dens[i])
        return x


def solve_min_eq(
    a: Sequence[Sequence[int | Fraction]],
    b: Sequence[int | Fraction],
    c: Sequence[int | Fraction],
) -> tuple[Fraction, list[Fraction]] | None:
    """Minimize ``c.x`` subject to ``a x = b`` and ``x >= 0``.

    Returns ``(optimal value, x)`` or ``None`` when infeasible.
    """
    m = len(a)
    n = len(c)
    costs = [Fraction(v) for v in c]
    if m == 0:
        return Fraction(0), [Fraction(0)] * n

    rows: list[list[int]] = []
    dens: list[int] = []
    for i in range(m):
        vals = [Fraction(v) for v in a[i]] + [Fraction(b[i])]
        if vals[-1] < 0:
            vals = [-v for v in vals]
        den = 1
        for v in vals:
            den = den * v.denominator // math.gcd(den, v.denominator)
        cells = [int(v * den) for v in vals]
        # Phase-1 artificial identity block sits between A and the rhs.
        cells[n:n] = [den if j == i else 0 for j in range(m)]
        rows.append(cells)
        dens.append(_normalize(cells, den))

    tab = _Tableau(rows, dens, basis=[n + i for i in range(m)])
    phase1 = [Fraction(0)] * n + [Fraction(1)] * m
    tab.set_costs(phase1, n + m)
    tab.run(n + m)
    if tab.objective_value() > 0:
        return None

    # Drive leftover artificials out of the (degenerate) basis; rows that
    # cannot pivot are redundant and dropped.
    drop: list[int] = []
    for i in range(m):
        if tab.basis[i] >= n:
            col = next((j for j in range(n) if tab.rows[i][j]), None)
            if col is None:
                drop.append(i)
            else:
                tab.pivot(i, col)
    for i in reversed(drop):
        del tab.rows[i]
        del tab.dens[i]
        del tab.basis[i]

    for i, row in enumerate(tab.rows):
        tab.rows[i] = row[:n] + [row[-1]]
        tab.dens[i] = _normalize(tab.rows[i], tab.dens[i])
    tab.set_costs(costs, n)
    tab.run(n)
    return tab.objective_value(), tab.solution(n)
