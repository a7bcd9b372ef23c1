"""Linear relaxation of the per-cell integer feasibility problem.

The LPs here are tiny (one variable per partition cell, a handful of
two-sided rows), so feasibility is decided by an exact rational phase-1
simplex with Bland's rule: no tolerances, deterministic pivoting, and the
returned point satisfies every row exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .graph import Rational
from .regularity import CellPartition


@dataclass(frozen=True)
class LpRow:
    """Two-sided row lo <= coef . x <= hi (either bound may be None)."""

    coef: tuple[Fraction, ...]
    lo: Fraction | None
    hi: Fraction | None
    label: str = ""


@dataclass(frozen=True)
class CellLp:
    """Cell LP: cut-count windows per term plus the two asymmetric cost rows."""

    partition: CellPartition
    rows: tuple[LpRow, ...]
    upper: tuple[Fraction, ...]  # per-variable bound |P|
    nu: Fraction
    rho: Fraction
    zeta: Fraction

    @property
    def n_vars(self) -> int:
        return len(self.upper)


def build_cell_lp(
    p: CellPartition,
    fbar: Sequence[Rational],
    gbar: Sequence[Rational],
    nu: Rational,
    rho: Rational,
    zeta: Rational,
) -> CellLp:
    """Emit the relaxation rows for one discretized cut profile.

    Per term t: fbar_t <= sum over cells inside S_t of x_P <= fbar_t + nu and
    gbar_t <= sum over cells inside T_t of (|P| - x_P) <= gbar_t + nu (stated
    on x_P with the constant sum of |P| folded into the bounds).  Cost rows
    are asymmetric exactly as displayed: rho(1-zeta) <= sum (Delta_P+kappa) x_P
    and sum Delta_P x_P <= rho(1+zeta).
    """
    if len(fbar) != len(gbar):
        raise ValueError("fbar and gbar must have equal length")
    w = len(fbar)
    if w != p.width:
        raise ValueError(f"profile width {w} does not match partition width {p.width}")
    nu = Fraction(nu)
    rho = Fraction(rho)
    zeta = Fraction(zeta)
    nvars = p.n_cells
    rows: list[LpRow] = []
    for t in range(w):
        f_t = Fraction(fbar[t])
        coef = tuple(Fraction(1) if cell.in_s(t) else Fraction(0) for cell in p.cells)
        rows.append(LpRow(coef, f_t, f_t + nu, f"S{t}"))
        g_t = Fraction(gbar[t])
        tot = sum(cell.size for cell in p.cells if cell.in_t(t))
        coef = tuple(Fraction(-1) if cell.in_t(t) else Fraction(0) for cell in p.cells)
        rows.append(LpRow(coef, g_t - tot, g_t + nu - tot, f"T{t}"))
    rows.append(
        LpRow(
            tuple(cell.delta + p.kappa for cell in p.cells),
            rho * (1 - zeta),
            None,
            "cost-lo",
        )
    )
    rows.append(
        LpRow(tuple(cell.delta for cell in p.cells), None, rho * (1 + zeta), "cost-hi")
    )
    upper = tuple(Fraction(cell.size) for cell in p.cells)
    return CellLp(p, tuple(rows), upper, nu, rho, zeta)


def _phase1(ineqs: list[tuple[list[Fraction], Fraction]], nvars: int) -> list[Fraction] | None:
    """Feasibility of a.x <= b, x >= 0 via exact two-phase-style simplex.

    Rows with negative right-hand side get an artificial variable; phase 1
    minimizes the artificial sum under Bland's rule.  Returns a feasible x
    or None.
    """
    m = len(ineqs)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    art_of_row: dict[int, int] = {}
    n_art = 0
    for i, (a, b) in enumerate(ineqs):
        if b >= 0:
            rows.append(list(a))
            rhs.append(b)
        else:
            rows.append([-x for x in a])
            rhs.append(-b)
            art_of_row[i] = n_art
            n_art += 1
    # columns: nvars originals | m slacks | n_art artificials
    total = nvars + m + n_art
    tab = [[Fraction(0)] * (total + 1) for _ in range(m)]
    basis = [0] * m
    for i in range(m):
        for j in range(nvars):
            tab[i][j] = rows[i][j]
        sign = Fraction(1) if i not in art_of_row else Fraction(-1)
        tab[i][nvars + i] = sign
        if i in art_of_row:
            tab[i][nvars + m + art_of_row[i]] = Fraction(1)
            basis[i] = nvars + m + art_of_row[i]
        else:
            basis[i] = nvars + i
        tab[i][total] = rhs[i]
    # objective: minimize sum of artificials; reduced-cost row
    obj = [Fraction(0)] * (total + 1)
    for j in range(nvars + m, total):
        obj[j] = Fraction(1)
    for i in range(m):
        if basis[i] >= nvars + m:
            for j in range(total + 1):
                obj[j] -= tab[i][j]
    while True:
        enter = None
        for j in range(total):
            if obj[j] < 0:
                enter = j
                break
        if enter is None:
            break
        leave = None
        best_ratio = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][total] / tab[i][enter]
                if (
                    leave is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave is None:
            # phase-1 objective is bounded below by 0; cannot happen
            raise AssertionError("phase-1 simplex unbounded")
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, tab[leave])]
        basis[leave] = enter
    if -obj[total] != 0:  # residual artificial mass
        return None
    x = [Fraction(0)] * nvars
    for i in range(m):
        if basis[i] < nvars:
            x[basis[i]] = tab[i][total]
    return x


def lp_feasible(lp: CellLp) -> list[Fraction] | None:
    """Exact feasible point of the cell LP, or None when infeasible."""
    nvars = lp.n_vars
    ineqs: list[tuple[list[Fraction], Fraction]] = []
    for row in lp.rows:
        coef = list(row.coef)
        if row.hi is not None:
            ineqs.append((coef, row.hi))
        if row.lo is not None:
            ineqs.append(([-x for x in coef], -row.lo))
    for j, ub in enumerate(lp.upper):
        e = [Fraction(0)] * nvars
        e[j] = Fraction(1)
        ineqs.append((e, ub))
    x = _phase1(ineqs, nvars)
    if x is None:
        return None
    for row in lp.rows:
        val = sum(cf * xi for cf, xi in zip(row.coef, x))
        assert row.lo is None or val >= row.lo
        assert row.hi is None or val <= row.hi
    for xi, ub in zip(x, lp.upper):
        assert 0 <= xi <= ub
    return x
