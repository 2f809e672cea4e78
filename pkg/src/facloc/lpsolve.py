"""Two-phase revised simplex in exact rational or floating-point arithmetic.

The basis is kept as an LU factorisation plus a short product-form eta file
and refactorised every ``REFACTOR_EVERY`` pivots.  Rational mode factors
with :class:`facloc.exact_lu.ExactLU` over ``gmpy2.mpq`` (falling back to
``Fraction``) and never rounds; float mode uses SuperLU from scipy.

Pricing is Dantzig's rule (most negative reduced cost) until
``3 * rows`` consecutive degenerate pivots have been made; from then on
Bland's rule is used until the next nondegenerate pivot, which rules out
cycling.

Every optimal answer carries a certificate that is re-checked before it is
returned: primal residuals (zero, or at most ``1e-8``), nonnegativity, and
nonnegative reduced costs (zero, or at least ``-1e-9``).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exact_lu import ExactLU, SingularMatrixError

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as _mpq

    def _to_q(v):
        v = Fraction(v)
        return _mpq(v.numerator, v.denominator)

    def _from_q(v) -> Fraction:
        return Fraction(int(v.numerator), int(v.denominator))

    _QZERO = _mpq(0)
except ImportError:  # pragma: no cover
    _to_q = Fraction
    _from_q = Fraction
    _QZERO = Fraction(0)

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
DUAL_TOL = 1e-9
REFACTOR_EVERY = 40

RELATIONS = ("<=", "=", ">=")


# ---------------------------------------------------------------- model types


@dataclass
class Row:
    coeffs: dict[int, Fraction]
    rel: str
    rhs: Fraction
    name: str = ""

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {self.rel!r}")


@dataclass
class LinearProgram:
    """``min c.x`` subject to ``rows`` and ``0 <= x <= upper``."""

    num_vars: int
    objective: dict[int, Fraction]
    rows: list[Row] = field(default_factory=list)
    upper: dict[int, Fraction] = field(default_factory=dict)
    var_names: list[str] | None = None

    def add_row(self, coeffs: dict[int, Fraction], rel: str, rhs, name: str = "") -> int:
        self.rows.append(Row(dict(coeffs), rel, Fraction(rhs), name))
        return len(self.rows) - 1

    def residuals(self, x: Sequence) -> list:
        """Per row violation amount (0 when satisfied)."""
        out = []
        for row in self.rows:
            lhs = sum((v * x[j] for j, v in row.coeffs.items()), 0 * row.rhs)
            if row.rel == "<=":
                out.append(max(lhs - row.rhs, 0))
            elif row.rel == ">=":
                out.append(max(row.rhs - lhs, 0))
            else:
                out.append(abs(lhs - row.rhs))
        return out

    def objective_value(self, x: Sequence):
        return sum((v * x[j] for j, v in self.objective.items()), 0 * Fraction(0))


@dataclass
class StandardForm:
    """``min c.x  s.t.  A x = b, x >= 0`` with ``b >= 0``.

    Columns ``0 .. n_struct-1`` are the model's variables; the rest are
    slack/surplus columns.  ``row_origin[r]`` is the model row (or
    ``("upper", j)`` for a bound row) behind standard row ``r``, and
    ``row_sign[r]`` is the ``+-1`` it was multiplied by.
    """

    cols: list[dict[int, Fraction]]
    b: list[Fraction]
    c: list[Fraction]
    n_struct: int
    row_origin: list
    row_sign: list[int]
    slack_of_row: dict[int, tuple[int, int]]
    infeasible_rows: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return len(self.cols)

    def structural(self, x: Sequence) -> list:
        return list(x[: self.n_struct])

    def residual(self, x: Sequence) -> float:
        acc = [0] * self.m
        for j, col in enumerate(self.cols):
            xj = x[j]
            if xj:
                for r, v in col.items():
                    acc[r] += v * xj
        return max((abs(float(a - bb)) for a, bb in zip(acc, self.b)), default=0.0)


def to_standard_form(model: LinearProgram) -> StandardForm:
    """Add slack/surplus columns, turn upper bounds into rows, make ``b >= 0``.

    Rows whose coefficients are all zero are dropped; an inconsistent empty
    row (e.g. ``0 <= -1``) is recorded in ``infeasible_rows``.
    """
    n = model.num_vars
    cols: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    b: list[Fraction] = []
    origin: list = []
    sign: list[int] = []
    slack_of_row: dict[int, tuple[int, int]] = {}
    infeasible = []
    pending_slacks: list[tuple[int, int]] = []

    rows: Iterable = [(i, r.coeffs, r.rel, Fraction(r.rhs)) for i, r in enumerate(model.rows)]
    bounds = [(("upper", j), {j: Fraction(1)}, "<=", Fraction(u)) for j, u in sorted(model.upper.items())]
    for key, coeffs, rel, rhs in list(rows) + bounds:
        coeffs = {j: Fraction(v) for j, v in coeffs.items() if v != 0}
        if not coeffs:
            ok = (rel == "<=" and rhs >= 0) or (rel == ">=" and rhs <= 0) or (rel == "=" and rhs == 0)
            if not ok:
                infeasible.append(key)
            continue
        s = -1 if rhs < 0 else 1
        r = len(b)
        for j, v in coeffs.items():
            cols[j][r] = s * v
        b.append(s * rhs)
        origin.append(key)
        sign.append(s)
        if rel != "=":
            pending_slacks.append((r, s * (1 if rel == "<=" else -1)))
    for r, coef in pending_slacks:
        slack_of_row[r] = (len(cols), coef)
        cols.append({r: Fraction(coef)})
    c = [Fraction(0)] * len(cols)
    for j, v in model.objective.items():
        c[j] = Fraction(v)
    return StandardForm(cols, b, c, n, origin, sign, slack_of_row, infeasible)


# ---------------------------------------------------------------- solution


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    objective: Fraction | float | None
    primal: list  # standard-form columns (structural first)
    basis: list[int]
    iterations: int = 0
    duals: list | None = None  # one per standard-form row
    certificate: dict = field(default_factory=dict)
    mode: str = "rational"

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------- arithmetic back ends


class _FloatOps:
    exact = False

    def __init__(self, sf: StandardForm, m: int, ncols: int, cols):
        self.m = m
        data, ri, ci = [], [], []
        for j, col in enumerate(cols):
            for r, v in col.items():
                ri.append(r)
                ci.append(j)
                data.append(float(v))
        self.A = sp.csc_matrix((data, (ri, ci)), shape=(m, ncols))
        self.AT = self.A.T.tocsr()

    def vec(self, values):
        return np.asarray([float(v) for v in values], dtype=float)

    def zeros(self):
        return np.zeros(self.m)

    def factor(self, basis):
        B = self.A[:, basis].tocsc()
        try:
            lu = spla.splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:  # exactly singular
            raise SingularMatrixError(str(exc)) from exc
        return lu

    def ftran(self, lu, rhs):
        return lu.solve(rhs)

    def btran(self, lu, rhs):
        return lu.solve(rhs, trans="T")

    def column(self, j):
        out = np.zeros(self.m)
        sl = slice(self.A.indptr[j], self.A.indptr[j + 1])
        out[self.A.indices[sl]] = self.A.data[sl]
        return out

    def reduced_costs(self, cost, y):
        return cost - self.AT @ y

    def transpose_times(self, y):
        return self.AT @ y

    def is_neg(self, v):
        return v < -DUAL_TOL

    def is_pos_pivot(self, v):
        return v > PIVOT_TOL


class _ExactOps:
    exact = True

    def __init__(self, sf: StandardForm, m: int, ncols: int, cols):
        self.m = m
        self.cols = [{r: _to_q(v) for r, v in col.items()} for col in cols]
        self.items = [tuple(col.items()) for col in self.cols]

    def vec(self, values):
        return [_to_q(v) for v in values]

    def zeros(self):
        return [_QZERO] * self.m

    def factor(self, basis):
        return ExactLU([self.cols[j] for j in basis], self.m, zero=_QZERO)

    def ftran(self, lu, rhs):
        return lu.solve(rhs)

    def btran(self, lu, rhs):
        return lu.solve_transpose(rhs)

    def column(self, j):
        out = [_QZERO] * self.m
        for r, v in self.items[j]:
            out[r] = v
        return out

    def reduced_costs(self, cost, y):
        out = []
        for j, items in enumerate(self.items):
            s = cost[j]
            for r, v in items:
                yr = y[r]
                if yr:
                    s -= v * yr
            out.append(s)
        return out

    def transpose_times(self, y):
        nz = {r for r, v in enumerate(y) if v}
        out = []
        for items in self.items:
            s = _QZERO
            for r, v in items:
                if r in nz:
                    s += v * y[r]
            out.append(s)
        return out

    def is_neg(self, v):
        return v < 0

    def is_pos_pivot(self, v):
        return v > 0


# ---------------------------------------------------------------- simplex core


class _Simplex:
    def __init__(self, sf: StandardForm, mode: str, max_iter: int | None, log_every: int = 0,
                 perturb: bool = True, seed: int = 0):
        if mode not in ("rational", "float"):
            raise ValueError(f"mode must be 'rational' or 'float', got {mode!r}")
        self.sf = sf
        self.mode = mode
        m = sf.m
        # artificial columns for rows without a +1 slack
        self.art_rows = [r for r in range(m) if sf.slack_of_row.get(r, (None, -1))[1] != 1]
        self.n_real = sf.n
        cols = list(sf.cols) + [{r: Fraction(1)} for r in self.art_rows]
        self.ncols = len(cols)
        ops_cls = _ExactOps if mode == "rational" else _FloatOps
        self.ops = ops_cls(sf, m, self.ncols, cols)
        self.exact = self.ops.exact
        self.m = m
        self.b_orig = self.ops.vec(sf.b)
        self.b = self.b_orig
        self.max_iter = max_iter if max_iter is not None else 50 * (m + sf.n)
        self.iterations = 0
        self.log_every = log_every
        self.perturb = perturb and not self.exact
        self.rng = np.random.default_rng(seed)
        self.is_art = np.array([False] * self.n_real + [True] * len(self.art_rows))

    # -- basis handling

    def _set_basis(self, basis):
        self.basis = list(basis)
        self.in_basis = np.zeros(self.ncols, dtype=bool)
        self.in_basis[self.basis] = True
        self._refactor()

    def _refactor(self):
        self.lu = self.ops.factor(self.basis)
        self.etas: list = []
        self.x = self._ftran(self.b)
        if not self.exact:
            self.x = np.where(np.abs(self.x) < 1e-11, 0.0, self.x)

    def _ftran(self, rhs):
        x = self.ops.ftran(self.lu, rhs)
        for r, eta in self.etas:
            t = x[r]
            if t:
                if self.exact:
                    xr = eta[r] * t
                    for i, e in eta.items():
                        if i != r:
                            x[i] += e * t
                    x[r] = xr
                else:
                    x = x + t * eta
                    x[r] = t * eta[r]
        return x

    def _btran(self, rhs):
        c = list(rhs) if self.exact else np.array(rhs, dtype=float)
        for r, eta in reversed(self.etas):
            if self.exact:
                s = _QZERO
                for i, e in eta.items():
                    ci = c[i]
                    if ci:
                        s += e * ci
                c[r] = s
            else:
                c[r] = float(eta @ c)
        return self.ops.btran(self.lu, c)

    def _pivot(self, r, q, w):
        """Basis position ``r`` now holds column ``q``; ``w = B^-1 a_q``."""
        wr = w[r]
        if self.exact:
            eta = {i: -wi / wr for i, wi in enumerate(w) if wi and i != r}
            eta[r] = 1 / wr
        else:
            eta = -w / wr
            eta[r] = 1.0 / wr
        self.etas.append((r, eta))
        self.in_basis[self.basis[r]] = False
        self.in_basis[q] = True
        self.basis[r] = q
        self.iterations += 1
        if len(self.etas) >= REFACTOR_EVERY:
            self._refactor()

    def _duals(self, cost):
        y = self._btran([cost[j] for j in self.basis])
        return y, self.ops.reduced_costs(cost, y)

    def _candidates(self, d, allow):
        """Nonbasic allowed columns with negative reduced cost."""
        if self.exact:
            return [j for j in range(self.ncols) if d[j] < 0 and allow[j] and not self.in_basis[j]]
        return np.flatnonzero((d < -DUAL_TOL) & allow & ~self.in_basis)

    def _log(self, cost, tag):
        if self.log_every and self.iterations % self.log_every == 0:
            obj = sum(cost[j] * self.x[i] for i, j in enumerate(self.basis))
            log.info("%s iter %d obj %.12g", tag, self.iterations, float(obj))

    # -- primal simplex

    def _primal(self, cost, allow):
        ops, m = self.ops, self.m
        degenerate = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            y, d = self._duals(cost)
            cand = self._candidates(d, allow)
            if len(cand) == 0 and self.etas:
                self._refactor()  # confirm optimality on a fresh factorisation
                y, d = self._duals(cost)
                cand = self._candidates(d, allow)
            if len(cand) == 0:
                self.y, self.d = y, d
                return "optimal"
            if bland:
                q = int(min(cand))
            elif self.exact:
                q = min(cand, key=lambda j: (d[j], j))
            else:
                q = int(cand[np.argmin(d[cand])])
            w = self._ftran(ops.column(q))
            if self.exact:
                best, r = None, -1
                for i in range(m):
                    wi = w[i]
                    if wi > 0:
                        key = (self.x[i] / wi, self.basis[i])
                        if best is None or key < best:
                            best, r = key, i
                if r < 0:
                    return "unbounded"
                theta = best[0]
                if theta:
                    for i in range(m):
                        if w[i]:
                            self.x[i] -= theta * w[i]
                self.x[r] = theta
                is_degenerate = theta == 0
            else:
                mask = w > PIVOT_TOL
                if not mask.any():
                    return "unbounded"
                ratios = np.full(m, np.inf)
                ratios[mask] = np.maximum(self.x[mask], 0.0) / w[mask]
                theta = ratios.min()
                ties = np.flatnonzero(ratios <= theta + 1e-12)
                if bland:
                    r = int(min(ties, key=lambda i: self.basis[i]))
                else:
                    r = int(ties[np.argmax(w[ties])])
                theta = ratios[r]
                self.x = self.x - theta * w
                self.x[r] = theta
                self.x[np.abs(self.x) < 1e-11] = 0.0
                is_degenerate = theta < 1e-12
            if is_degenerate:
                degenerate += 1
                if degenerate >= 3 * m and not bland:
                    log.debug("stall after %d degenerate pivots: Bland's rule on", degenerate)
                    bland = True
            else:
                degenerate = 0
                bland = False
            self._pivot(r, q, w)
            self._log(cost, "primal")

    # -- dual simplex (repairs primal infeasibility of a dual feasible basis)

    def _dual(self, cost, allow):
        ops, m = self.ops, self.m
        degenerate = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            if self.exact:
                negs = [i for i in range(m) if self.x[i] < 0]
            else:
                negs = np.flatnonzero(self.x < -FEAS_TOL)
            if len(negs) == 0:
                return "optimal"
            if bland:
                r = int(min(negs, key=lambda i: self.basis[i]))
            elif self.exact:
                r = min(negs, key=lambda i: (self.x[i], self.basis[i]))
            else:
                r = int(negs[np.argmin(self.x[negs])])
            e = ops.zeros()
            e[r] = _QZERO + 1 if self.exact else 1.0
            rho = self._btran(e)
            alpha = ops.transpose_times(rho)
            y, d = self._duals(cost)
            if self.exact:
                best, q = None, -1
                for j in range(self.ncols):
                    aj = alpha[j]
                    if aj < 0 and allow[j] and not self.in_basis[j]:
                        key = (d[j] / -aj, j)
                        if best is None or key < best:
                            best, q = key, j
                if q < 0:
                    return "infeasible"
                step = best[0]
            else:
                cand = np.flatnonzero((alpha < -PIVOT_TOL) & allow & ~self.in_basis)
                if len(cand) == 0:
                    return "infeasible"
                ratios = np.maximum(d[cand], 0.0) / -alpha[cand]
                step = ratios.min()
                ties = cand[ratios <= step + 1e-12]
                q = int(min(ties)) if bland else int(ties[np.argmax(-alpha[ties])])
            w = self._ftran(ops.column(q))
            theta = self.x[r] / w[r]
            if self.exact:
                for i in range(m):
                    if w[i]:
                        self.x[i] -= theta * w[i]
            else:
                self.x = self.x - theta * w
            self.x[r] = theta
            if not self.exact:
                self.x[np.abs(self.x) < 1e-11] = 0.0
            if step == 0 if self.exact else step < 1e-12:
                degenerate += 1
                if degenerate >= 3 * m:
                    bland = True
            else:
                degenerate, bland = 0, False
            self._pivot(r, q, w)
            self._log(cost, "dual")

    # -- one phase, with anti-degeneracy perturbation in float mode

    def _phase(self, cost, allow):
        if not self.perturb:
            return self._primal(cost, allow)
        delta = self.rng.uniform(1e-7, 1e-6, self.m) * np.maximum(1.0, np.abs(self.x))
        xp = self.x + delta
        self.b = self.ops.A[:, self.basis] @ xp
        self._refactor()
        status = self._primal(cost, allow)
        self.b = self.b_orig
        self._refactor()
        if status != "optimal":
            return status
        status = self._dual(cost, allow)
        if status != "optimal":
            return status
        return self._primal(cost, allow)

    # -- driver

    def _costs(self, phase):
        if phase == 1:
            c = [Fraction(0)] * self.n_real + [Fraction(1)] * len(self.art_rows)
        else:
            c = list(self.sf.c) + [Fraction(0)] * len(self.art_rows)
        return self.ops.vec(c)

    def _allow(self, phase):
        return np.array([True] * self.n_real + [phase == 1] * len(self.art_rows))

    def _initial_basis(self):
        basis = [None] * self.m
        for r, (j, coef) in self.sf.slack_of_row.items():
            if coef == 1:
                basis[r] = j
        for k, r in enumerate(self.art_rows):
            basis[r] = self.n_real + k
        return basis

    def _art_values(self):
        return [self.x[i] for i, j in enumerate(self.basis) if self.is_art[j]]

    def _drive_out_artificials(self):
        """Pivot zero-valued basic artificials out where possible."""
        ops = self.ops
        for pos in range(self.m):
            j = self.basis[pos]
            if not self.is_art[j]:
                continue
            e = ops.zeros()
            e[pos] = _QZERO + 1 if self.exact else 1.0
            rho = self._btran(e)
            alpha = ops.transpose_times(rho)
            q = -1
            if self.exact:
                for k in range(self.n_real):
                    if not self.in_basis[k] and alpha[k]:
                        q = k
                        break
            else:
                mag = np.where(self.in_basis[: self.n_real], 0.0, np.abs(alpha[: self.n_real]))
                k = int(np.argmax(mag)) if len(mag) else -1
                if k >= 0 and mag[k] > 1e-7:
                    q = k
            if q < 0:
                continue  # redundant row: the artificial stays basic at zero
            self._pivot(pos, q, self._ftran(ops.column(q)))
        self._refactor()

    def _try_warm_basis(self, basis) -> str | None:
        """``"primal"``/``"dual"`` feasibility of a supplied basis, or ``None``."""
        basis = list(basis)
        if len(basis) != self.m or len(set(basis)) != self.m or any(not 0 <= j < self.ncols for j in basis):
            return None
        try:
            self._set_basis(basis)
        except SingularMatrixError:
            return None
        arts = self._art_values()
        if self.exact:
            if all(v >= 0 for v in self.x) and all(v == 0 for v in arts):
                return "primal"
        elif bool((self.x >= -FEAS_TOL).all()) and all(abs(v) <= FEAS_TOL for v in arts):
            return "primal"
        cost, allow = self._costs(2), self._allow(2)
        _, d = self._duals(cost)
        if len(self._candidates(d, allow)) == 0:
            return "dual"
        return None

    def solve(self, warm_basis=None) -> LpSolution:
        sf = self.sf
        if sf.infeasible_rows:
            return LpSolution("infeasible", None, [], [], 0, mode=self.mode,
                              certificate={"empty_rows": sf.infeasible_rows})
        warm = None if warm_basis is None else self._try_warm_basis(warm_basis)
        if warm_basis is not None and warm is None:
            log.warning("warm-start basis rejected; solving from scratch")
        cost2, allow2 = self._costs(2), self._allow(2)
        if warm == "dual":
            status = self._dual(cost2, allow2)
            if status == "optimal" and any(v != 0 if self.exact else abs(v) > FEAS_TOL for v in self._art_values()):
                log.warning("dual repair left an artificial in the basis; solving from scratch")
                warm = None
            elif status != "optimal":
                warm = None
        if warm is None:
            self._set_basis(self._initial_basis())
            if self.art_rows:
                status = self._phase(self._costs(1), self._allow(1))
                if status != "optimal":
                    return self._result(status, phase=1)
                infeas = sum(self._art_values(), 0 * self.x[0])
                if (infeas != 0) if self.exact else (infeas > FEAS_TOL * max(1.0, float(np.abs(self.b).max()))):
                    return self._result("infeasible", phase=1)
                self._drive_out_artificials()
        status = self._phase(cost2, allow2)
        return self._result(status, phase=2, warm=warm or False)

    def _result(self, status, phase, warm=False) -> LpSolution:
        xfull = [0] * self.ncols
        for i, j in enumerate(self.basis):
            xfull[j] = self.x[i]
        conv = _from_q if self.exact else float
        primal = [conv(v) if v else (Fraction(0) if self.exact else 0.0) for v in xfull[: self.n_real]]
        sol = LpSolution(status, None, primal, list(self.basis), self.iterations, mode=self.mode)
        sol.certificate = {"phase": phase, "warm_start": warm}
        if status != "optimal":
            return sol
        sol.objective = sum((c * v for c, v in zip(self.sf.c, primal)), Fraction(0) if self.exact else 0.0)
        if not self.exact:
            sol.objective = float(sol.objective)
        sol.duals = [conv(v) for v in self.y]
        self._certify(sol)
        return sol

    def _certify(self, sol: LpSolution):
        sf = self.sf
        resid = sf.residual(sol.primal)
        neg = min(sol.primal, default=0)
        real_d = [self.d[j] for j in range(self.n_real) if not self.in_basis[j]]
        dmin = min(real_d, default=0)
        art_val = max((abs(v) for v in self._art_values()), default=0)
        sol.certificate.update(
            max_residual=float(resid),
            min_primal=float(neg),
            min_reduced_cost=float(dmin),
            basic_artificials=int(self.is_art[self.basis].sum()),
        )
        if self.exact:
            ok = resid == 0 and neg >= 0 and dmin >= 0 and art_val == 0
        else:
            scale = max(1.0, max((abs(float(v)) for v in sf.b), default=1.0))
            ok = resid <= FEAS_TOL * scale and neg >= -FEAS_TOL and dmin >= -DUAL_TOL
        sol.certificate["verified"] = bool(ok)
        if not ok:
            raise SolverError(f"optimality certificate failed: {sol.certificate}")


def simplex_solve(
    sf: StandardForm,
    mode: str = "rational",
    basis: Sequence[int] | None = None,
    max_iter: int | None = None,
    log_every: int = 0,
    perturb: bool = True,
) -> LpSolution:
    """Solve a standard-form LP.

    ``basis`` (one column per row, artificial columns numbered after the
    standard-form columns) warm-starts the solve when it is primal feasible
    (phase 2 directly) or dual feasible (dual simplex repair first).
    ``perturb`` enables the float-mode anti-degeneracy perturbation.
    """
    t0 = time.perf_counter()
    sol = _Simplex(sf, mode, max_iter, log_every, perturb=perturb).solve(basis)
    sol.certificate["seconds"] = round(time.perf_counter() - t0, 6)
    return sol


def solve_model(model: LinearProgram, mode: str = "rational", warm_start: bool | None = None, **kw) -> tuple[LpSolution, list]:
    """Solve ``model``; return the solution and its structural values.

    In rational mode, ``warm_start`` (default: on for models with more than
    500 rows) first solves in floating point and then restarts the exact
    simplex from the float-optimal basis.  The exact run certifies or
    improves that basis using exact pivots only.
    """
    sf = to_standard_form(model)
    basis = None
    if mode == "rational" and (warm_start if warm_start is not None else sf.m > 500):
        fsol = simplex_solve(sf, "float", **kw)
        if fsol.optimal:
            basis = fsol.basis
    sol = simplex_solve(sf, mode, basis=basis, **kw)
    return sol, sf.structural(sol.primal)
