"""Sparse LU factorisation over the rationals.

Right-looking Gaussian elimination with a Markowitz-style pivot choice.
Exact arithmetic means every nonzero is an acceptable pivot, so the choice is
driven purely by fill-in.  Singleton columns (slack columns of a simplex
basis) are eliminated first and cost nothing.
"""
from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Sequence


class SingularMatrixError(ArithmeticError):
    pass


class ExactLU:
    """Factor a square matrix given as ``columns[j] = {row: value}``.

    Entries may be any exact field type (``Fraction`` or ``gmpy2.mpq``);
    ``zero`` is that type's zero.  ``solve(b)`` returns ``x`` with ``B x = b`` (``x`` indexed by column,
    ``b`` by row); ``solve_transpose(c)`` returns ``y`` with ``B^T y = c``.
    """

    def __init__(self, columns: Sequence[dict[int, Fraction]], m: int, zero=Fraction(0)):
        self.zero = zero
        if len(columns) != m:
            raise SingularMatrixError(f"need {m} columns, got {len(columns)}")
        self.m = m
        rows: dict[int, dict[int, Fraction]] = {}
        cols: list[set[int]] = [set() for _ in range(m)]
        for j, col in enumerate(columns):
            for r, v in col.items():
                if v:
                    rows.setdefault(r, {})[j] = v
                    cols[j].add(r)
        if len(rows) != m:
            raise SingularMatrixError("matrix has an empty row")
        heap = [(len(cols[j]), j) for j in range(m)]
        heapq.heapify(heap)
        done = [False] * m
        # each step: (pivot_row, pivot_col, pivot_value, other_u_entries, l_multipliers)
        steps: list[tuple[int, int, Fraction, dict[int, Fraction], list[tuple[int, Fraction]]]] = []
        while heap:
            cnt, pc = heapq.heappop(heap)
            if done[pc] or cnt != len(cols[pc]):
                continue
            if cnt == 0:
                raise SingularMatrixError("structurally singular basis")
            if cnt == 1:
                pr = next(iter(cols[pc]))
            else:
                pr = min(cols[pc], key=lambda r: (len(rows[r]), r))
            prow = rows.pop(pr)
            pv = prow.pop(pc)
            done[pc] = True
            cols[pc].discard(pr)
            for c in prow:
                cols[c].discard(pr)
            lmul = []
            for r in cols[pc]:
                row = rows[r]
                f = row.pop(pc) / pv
                lmul.append((r, f))
                for c, v in prow.items():
                    nv = row.get(c, self.zero) - f * v
                    if nv:
                        if c not in row:
                            cols[c].add(r)
                        row[c] = nv
                    elif c in row:
                        del row[c]
                        cols[c].discard(r)
            cols[pc] = set()
            touched = set(prow)
            for r, _ in lmul:
                touched.update(rows[r])
            for c in touched:
                if not done[c]:
                    heapq.heappush(heap, (len(cols[c]), c))
            steps.append((pr, pc, pv, prow, lmul))
        if len(steps) != m:
            raise SingularMatrixError("matrix is singular")
        self.steps = steps

    def solve(self, b: Sequence[Fraction] | dict[int, Fraction]) -> list[Fraction]:
        w = [self.zero] * self.m
        items = b.items() if isinstance(b, dict) else enumerate(b)
        for r, v in items:
            w[r] = v
        for pr, _, _, _, lmul in self.steps:
            t = w[pr]
            if t:
                for r, f in lmul:
                    w[r] -= f * t
        x = [self.zero] * self.m
        for pr, pc, pv, urow, _ in reversed(self.steps):
            s = w[pr]
            for c, v in urow.items():
                xc = x[c]
                if xc:
                    s -= v * xc
            x[pc] = s / pv
        return x

    def solve_transpose(self, c: Sequence[Fraction] | dict[int, Fraction]) -> list[Fraction]:
        acc = [self.zero] * self.m
        items = c.items() if isinstance(c, dict) else enumerate(c)
        for j, v in items:
            acc[j] = v
        w = [self.zero] * self.m
        for pr, pc, pv, urow, _ in self.steps:
            val = acc[pc] / pv
            w[pr] = val
            if val:
                for cc, v in urow.items():
                    acc[cc] -= v * val
        for pr, _, _, _, lmul in reversed(self.steps):
            s = w[pr]
            for r, f in lmul:
                wr = w[r]
                if wr:
                    s -= f * wr
            w[pr] = s
        return w
