"""Exact rational two-phase simplex for small dense linear programs.

Minimizes c.x subject to per-row <= or >= constraints and x >= 0, entirely
in exact arithmetic.  Each tableau row is stored as integer cells over one
positive denominator, so pivots are integer list comprehensions with a gcd
renormalization instead of per-cell Fraction work.  Bland's rule (smallest
eligible index enters, ties on the leaving row broken by smallest basic
index) prevents cycling and makes every pivot sequence deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .errors import SmcError

GE = ">="
LE = "<="


@dataclass
class LpResult:
    status: str  # "optimal" or "infeasible"
    x: list[Fraction]
    objective: Fraction


class _Tableau:
    """Rows of integer cells with one positive denominator per row."""

    def __init__(self) -> None:
        self.cells: list[list[int]] = []
        self.dens: list[int] = []
        self.basis: list[int] = []

    def add_row(self, fracs: Sequence[Fraction], basic: int | None) -> None:
        den = 1
        for f in fracs:
            den = den * f.denominator // gcd(den, f.denominator)
        self.cells.append([int(f * den) for f in fracs])
        self.dens.append(den)
        if basic is not None:
            self.basis.append(basic)

    def value(self, row: int, col: int) -> Fraction:
        return Fraction(self.cells[row][col], self.dens[row])

    def _reduce(self, row: int) -> None:
        g = self.dens[row]
        for v in self.cells[row]:
            if v:
                g = gcd(g, v)
                if g == 1:
                    return
        if g > 1:
            self.cells[row] = [v // g for v in self.cells[row]]
            self.dens[row] //= g

    def pivot(self, row: int, col: int) -> None:
        prow = self.cells[row]
        pden = prow[col]
        if pden == 0:
            raise SmcError("zero pivot")
        if pden < 0:
            prow = [-v for v in prow]
            pden = -pden
        # row scaling: new value = old cells / old cells[col]
        self.cells[row] = prow
        self.dens[row] = pden
        self._reduce(row)
        prow = self.cells[row]
        pden = self.dens[row]
        for i in range(len(self.cells)):
            if i == row:
                continue
            f = self.cells[i][col]
            if not f:
                continue
            di = self.dens[i]
            self.cells[i] = [a * pden - f * b
                             for a, b in zip(self.cells[i], prow)]
            self.dens[i] = di * pden
            self._reduce(i)
        if row < len(self.basis):
            self.basis[row] = col


def _run_simplex(tab: _Tableau, ncols: int) -> None:
    """Optimize in place; the objective row is the last row."""
    zrow = len(tab.cells) - 1
    while True:
        zcells = tab.cells[zrow]
        enter = -1
        for j in range(ncols):
            if zcells[j] < 0:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        bn = bd = 0  # best ratio as fraction bn/bd, bd > 0
        for i in range(zrow):
            a = tab.cells[i][enter]
            if a > 0:
                r = tab.cells[i][-1]
                if leave < 0 or r * bd < bn * a or (
                        r * bd == bn * a and tab.basis[i] < tab.basis[leave]):
                    bn, bd = r, a
                    leave = i
        if leave < 0:
            raise SmcError("unbounded linear program")
        tab.pivot(leave, enter)


def solve_min_lp(c: Sequence, rows: Sequence[tuple[Sequence, str, object]]
                 ) -> LpResult:
    """rows: (coefficients, sense, rhs) with sense '>=' or '<='."""
    n = len(c)
    norm = []
    for coeffs, sense, rhs in rows:
        co = [Fraction(x) for x in coeffs]
        r = Fraction(rhs)
        if len(co) != n:
            raise SmcError("row length does not match objective")
        if r < 0:
            co = [-x for x in co]
            r = -r
            sense = GE if sense == LE else LE
        norm.append((co, sense, r))
    m = len(norm)

    art_rows = [i for i, (_, sense, _) in enumerate(norm) if sense == GE]
    n_slack = m
    n_art = len(art_rows)
    ncols = n + n_slack + n_art
    art_col = {i: n + n_slack + k for k, i in enumerate(art_rows)}

    tab = _Tableau()
    zero = Fraction(0)
    for i, (co, sense, r) in enumerate(norm):
        row = co + [zero] * (n_slack + n_art) + [r]
        row[n + i] = Fraction(-1) if sense == GE else Fraction(1)
        if sense == GE:
            row[art_col[i]] = Fraction(1)
            tab.add_row(row, art_col[i])
        else:
            tab.add_row(row, n + i)

    # phase 1: minimize the artificial total
    zrow = [zero] * (ncols + 1)
    for i in art_rows:
        zrow[art_col[i]] = Fraction(1)
    tab.add_row(zrow, None)
    zi = len(tab.cells) - 1
    for i in art_rows:
        f = tab.value(zi, art_col[i])
        if f:
            di = tab.dens[zi]
            pd = tab.dens[i]
            fn, fd = f.numerator, f.denominator
            tab.cells[zi] = [a * fd * pd - fn * di * b
                             for a, b in zip(tab.cells[zi], tab.cells[i])]
            tab.dens[zi] = di * fd * pd
            tab._reduce(zi)
    _run_simplex(tab, ncols)
    if tab.cells[-1][-1] < 0:
        # the objective cell holds -value; a positive artificial total
        # means infeasible
        return LpResult(status="infeasible", x=[], objective=Fraction(0))

    # drive leftover artificials out of the basis, dropping redundant rows
    for i in range(len(tab.basis) - 1, -1, -1):
        if tab.basis[i] >= n + n_slack:
            pivot_col = next((j for j in range(n + n_slack)
                              if tab.cells[i][j] != 0), None)
            if pivot_col is None:
                del tab.cells[i]
                del tab.dens[i]
                del tab.basis[i]
            else:
                tab.pivot(i, pivot_col)
    del tab.cells[-1]  # phase-1 objective row
    del tab.dens[-1]

    # phase 2
    zrow = [Fraction(ci) for ci in c] + [zero] * (n_slack + n_art + 1)
    tab.add_row(zrow, None)
    zi = len(tab.cells) - 1
    for i, b in enumerate(tab.basis):
        f = tab.value(zi, b)
        if f:
            di = tab.dens[zi]
            pd = tab.dens[i]
            fn, fd = f.numerator, f.denominator
            tab.cells[zi] = [a * fd * pd - fn * di * v
                             for a, v in zip(tab.cells[zi], tab.cells[i])]
            tab.dens[zi] = di * fd * pd
            tab._reduce(zi)
    _run_simplex(tab, n + n_slack)  # artificial columns stay out

    x = [Fraction(0)] * n
    for i, b in enumerate(tab.basis):
        if b < n:
            x[b] = tab.value(i, len(tab.cells[i]) - 1)
    objective = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), Fraction(0))
    return LpResult(status="optimal", x=x, objective=objective)
